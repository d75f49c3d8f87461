#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qegauge/error.hpp"
#include "qegauge/types.hpp"

namespace qegauge {

/// A column block of the model matrix with an optional quadratic penalty.
template <typename Scalar>
struct DesignBlock {
  std::string name;
  MatrixX<Scalar> X;
  std::optional<MatrixX<Scalar>> S;
};

template <typename Scalar>
struct PenalizedFit {
  VectorX<Scalar> beta;             // intercept first, then blocks in order
  Scalar rss = 0;
  Scalar edf = 0;                   // trace of the influence matrix
  VectorX<Scalar> edf_per_coef;     // diag((X'X + S)^-1 X'X)
  MatrixX<Scalar> inv_penalized;    // (X'X + S)^-1
  bool jitter_applied = false;
};

/// min |y - X b|^2 + sum_j lambda_j b_j' S_j b_j, with an intercept column prepended.
///
/// X is reduced once by a Householder QR (X = QR), after which every lambda is
/// solved as the small augmented least-squares problem [R; sqrt(lambda) E] b = [Q'y; 0]
/// where E'E = S. The hat trace is |R P R1^-1|_F^2 from the augmented QR A P = Q1 R1.
template <typename Scalar>
class PenalizedSystem {
 public:
  PenalizedSystem(const VectorX<Scalar>& y, std::span<const DesignBlock<Scalar>> blocks) {
    n_ = y.size();
    Eigen::Index p = 1;
    for (const auto& b : blocks) {
      if (b.X.rows() != n_) throw Error(Errc::LengthMismatch, "block '" + b.name + "' has the wrong row count");
      p += b.X.cols();
    }
    if (p >= n_) {
      throw Error(Errc::SingularSystem, "SingularSystem: " + std::to_string(p) + " coefficients for " +
                                            std::to_string(n_) + " observations");
    }
    X_.resize(n_, p);
    X_.col(0).setOnes();
    Eigen::Index off = 1;
    for (const auto& b : blocks) {
      X_.middleCols(off, b.X.cols()) = b.X;
      if (b.S) {
        if (b.S->rows() != b.X.cols() || b.S->cols() != b.X.cols()) {
          throw Error(Errc::DimensionMismatch, "penalty of block '" + b.name + "' has the wrong size");
        }
        penalties_.push_back({off, b.X.cols(), *b.S, root_of(*b.S)});
      }
      block_ranges_.push_back({off, b.X.cols()});
      off += b.X.cols();
    }
    y_ = y;
    Eigen::HouseholderQR<MatrixX<Scalar>> qr(X_);
    R_ = qr.matrixQR().topRows(p).template triangularView<Eigen::Upper>();
    const VectorX<Scalar> qty = qr.householderQ().transpose() * y;
    f_ = qty.head(p);
    r0_ = qty.tail(n_ - p).squaredNorm();
    trace_xtx_ = R_.squaredNorm();
    y_sq_ = y.squaredNorm();
  }

  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index n_coef() const noexcept { return X_.cols(); }
  std::size_t n_penalized() const noexcept { return penalties_.size(); }
  const MatrixX<Scalar>& X() const noexcept { return X_; }
  const VectorX<Scalar>& y() const noexcept { return y_; }
  /// (offset, width) of each block's columns in X, in construction order.
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& block_ranges() const noexcept { return block_ranges_; }
  /// Full p x p penalty sum_j lambda_j S_j.
  MatrixX<Scalar> total_penalty(std::span<const Scalar> lambda) const {
    check_lambda(lambda);
    MatrixX<Scalar> s = MatrixX<Scalar>::Zero(n_coef(), n_coef());
    for (std::size_t j = 0; j < penalties_.size(); ++j) {
      const auto& pen = penalties_[j];
      s.block(pen.offset, pen.offset, pen.size, pen.size) += lambda[j] * pen.S;
    }
    return s;
  }

  PenalizedFit<Scalar> solve(std::span<const Scalar> lambda) const {
    check_lambda(lambda);
    auto fit = solve_augmented(lambda, Scalar(0));
    if (!fit) {
      fit = solve_augmented(lambda, Scalar(1e-10) * trace_xtx_);
      if (!fit) throw Error(Errc::SingularSystem, "SingularSystem: rank deficient after ridge jitter");
      fit->jitter_applied = true;
    }
    return *fit;
  }

  /// n * RSS / (n - edf)^2; RSS is floored at rounding level so exact fits rank by edf.
  Scalar gcv(const PenalizedFit<Scalar>& fit) const {
    const Scalar n = static_cast<Scalar>(n_);
    const Scalar rss = std::max(fit.rss, Scalar(1e-14) * y_sq_);
    const Scalar dof = n - fit.edf;
    return n * rss / (dof * dof);
  }

 private:
  struct Penalty {
    Eigen::Index offset;
    Eigen::Index size;
    MatrixX<Scalar> S;
    MatrixX<Scalar> root;  // root' root == S
  };

  static MatrixX<Scalar> root_of(const MatrixX<Scalar>& s) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(0.5 * (s + s.transpose()));
    const VectorX<Scalar> ev = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
    return ev.asDiagonal() * es.eigenvectors().transpose();
  }

  void check_lambda(std::span<const Scalar> lambda) const {
    if (lambda.size() != penalties_.size()) {
      throw Error(Errc::DimensionMismatch, "expected " + std::to_string(penalties_.size()) + " smoothing parameters");
    }
    for (Scalar l : lambda) {
      if (!(l > 0) || !std::isfinite(static_cast<double>(l))) {
        throw Error(Errc::OutOfRange, "smoothing parameters must be positive and finite");
      }
    }
  }

  std::optional<PenalizedFit<Scalar>> solve_augmented(std::span<const Scalar> lambda, Scalar jitter) const {
    const Eigen::Index p = n_coef();
    Eigen::Index rows = p;
    for (const auto& pen : penalties_) rows += pen.root.rows();
    if (jitter > 0) rows += p;

    MatrixX<Scalar> a = MatrixX<Scalar>::Zero(rows, p);
    a.topRows(p) = R_;
    Eigen::Index at = p;
    for (std::size_t j = 0; j < penalties_.size(); ++j) {
      const auto& pen = penalties_[j];
      a.block(at, pen.offset, pen.root.rows(), pen.size) = std::sqrt(lambda[j]) * pen.root;
      at += pen.root.rows();
    }
    if (jitter > 0) a.bottomRows(p) = std::sqrt(jitter) * MatrixX<Scalar>::Identity(p, p);

    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(a);
    if (qr.rank() < p) return std::nullopt;

    VectorX<Scalar> rhs = VectorX<Scalar>::Zero(rows);
    rhs.head(p) = f_;
    PenalizedFit<Scalar> fit;
    fit.beta = qr.solve(rhs);
    fit.rss = (f_ - R_ * fit.beta).squaredNorm() + r0_;

    const MatrixX<Scalar> r1 = qr.matrixR().topRows(p).template triangularView<Eigen::Upper>();
    const auto perm = qr.colsPermutation();
    // W = R P R1^-1  via  R1' W' = (R P)'
    const MatrixX<Scalar> rp = R_ * perm;
    const MatrixX<Scalar> wt = r1.transpose().template triangularView<Eigen::Lower>().solve(rp.transpose());
    fit.edf = wt.squaredNorm();

    const MatrixX<Scalar> r1_inv =
        r1.template triangularView<Eigen::Upper>().solve(MatrixX<Scalar>::Identity(p, p));
    const MatrixX<Scalar> inner = r1_inv * r1_inv.transpose();
    fit.inv_penalized = perm * inner * perm.transpose();
    fit.inv_penalized = Scalar(0.5) * (fit.inv_penalized + fit.inv_penalized.transpose()).eval();
    const MatrixX<Scalar> xtx = R_.transpose() * R_;
    fit.edf_per_coef.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) fit.edf_per_coef(i) = fit.inv_penalized.row(i).dot(xtx.col(i));
    return fit;
  }

  Eigen::Index n_ = 0;
  MatrixX<Scalar> X_;
  VectorX<Scalar> y_;
  MatrixX<Scalar> R_;
  VectorX<Scalar> f_;
  Scalar r0_ = 0;
  Scalar trace_xtx_ = 0;
  Scalar y_sq_ = 0;
  std::vector<Penalty> penalties_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> block_ranges_;
};

/// One-shot penalized fit; lambda holds one value per penalized block.
template <typename Scalar>
PenalizedFit<Scalar> fit_penalized(const VectorX<Scalar>& y, std::span<const DesignBlock<Scalar>> blocks,
                                   std::span<const Scalar> lambda) {
  return PenalizedSystem<Scalar>(y, blocks).solve(lambda);
}

inline constexpr double kLog10LambdaMin = -6.0;
inline constexpr double kLog10LambdaMax = 8.0;

struct LambdaSelection {
  std::vector<double> log10_lambda;
  std::vector<double> lambda;
  std::vector<bool> at_boundary;
  double gcv = 0.0;
  int sweeps = 0;
  bool converged = false;
};

struct LambdaSearchOptions {
  int max_sweeps = 50;
  double rel_improvement = 1e-7;
  double log10_tolerance = 1e-5;
  double grid_step = 0.1;  // bracketing scan over log10(lambda)
};

/// Minimizes GCV by cyclic coordinate descent over log10(lambda_j) in [-6, 8].
/// Each coordinate step scans the box on a grid of options.grid_step, then refines
/// the best cell by golden-section search. Deterministic; never throws on non-convergence.
LambdaSelection select_lambda(const PenalizedSystem<double>& system, const LambdaSearchOptions& options = {});

}  // namespace qegauge
