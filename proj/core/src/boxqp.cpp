#include "tiltctl/boxqp.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "tiltctl/model.hpp"  // NumericalError

namespace tiltctl {

void BoxQpSolver::factor_free_block(const Eigen::MatrixXd& h)
{
  const int nf = static_cast<int>(free_.size());
  chol_.resize(nf, nf);
  for (int r = 0; r < nf; ++r)
    for (int c = 0; c <= r; ++c) chol_(r, c) = h(free_[r], free_[c]);
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(chol_);
  if (llt.info() != Eigen::Success)
    throw NumericalError("BoxQpSolver: Hessian free block is not positive definite");
}

void BoxQpSolver::append_free(const Eigen::MatrixXd& h, int var)
{
  const int nf = static_cast<int>(free_.size());
  Eigen::VectorXd col(nf);
  for (int r = 0; r < nf; ++r) col[r] = h(free_[r], var);
  chol_.conservativeResize(nf + 1, nf + 1);
  if (nf > 0) {
    chol_.topLeftCorner(nf, nf).triangularView<Eigen::Lower>().solveInPlace(col);
    chol_.row(nf).head(nf) = col;
  }
  const double d = h(var, var) - col.squaredNorm();
  if (d <= 0.0) {
    // Fall back to a full refactorization; rounding can spoil the update.
    free_.push_back(var);
    factor_free_block(h);
    return;
  }
  chol_(nf, nf) = std::sqrt(d);
  free_.push_back(var);
}

void BoxQpSolver::remove_free(const Eigen::MatrixXd& h, int pos)
{
  const int nf = static_cast<int>(free_.size());
  const int m = nf - pos - 1;  // trailing block size
  Eigen::VectorXd v = chol_.col(pos).segment(pos + 1, m);

  // Shift rows below `pos` (their column `pos` entry drops out, diagonal
  // included in the move); the trailing factor absorbs v v' by rank-1 update.
  for (int r = pos + 1; r < nf; ++r) {
    chol_.row(r - 1).head(pos) = chol_.row(r).head(pos);
    chol_.row(r - 1).segment(pos, r - pos) = chol_.row(r).segment(pos + 1, r - pos);
  }
  for (int k = 0; k < m; ++k) {
    const double lkk = chol_(pos + k, pos + k);
    const double r = std::hypot(lkk, v[k]);
    if (!(r > 0.0) || !std::isfinite(r)) {
      free_.erase(free_.begin() + pos);
      factor_free_block(h);
      return;
    }
    const double c = r / lkk;
    const double s = v[k] / lkk;
    chol_(pos + k, pos + k) = r;
    for (int i = k + 1; i < m; ++i) {
      chol_(pos + i, pos + k) = (chol_(pos + i, pos + k) + s * v[i]) / c;
      v[i] = c * v[i] - s * chol_(pos + i, pos + k);
    }
  }
  free_.erase(free_.begin() + pos);
  chol_.conservativeResize(nf - 1, nf - 1);
}

Eigen::VectorXd BoxQpSolver::solve_free(const Eigen::VectorXd& rhs) const
{
  const int nf = static_cast<int>(free_.size());
  Eigen::VectorXd x = rhs;
  chol_.topLeftCorner(nf, nf).triangularView<Eigen::Lower>().solveInPlace(x);
  chol_.topLeftCorner(nf, nf).triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

BoxQpResult BoxQpSolver::solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                               const Eigen::VectorXd& z0)
{
  const int n = static_cast<int>(g.size());
  BoxQpResult res;
  res.z = z0.cwiseMax(lb).cwiseMin(ub);
  Eigen::VectorXd& z = res.z;

  bound_.assign(n, Bound::kFree);
  free_.clear();
  for (int i = 0; i < n; ++i) {
    if (z[i] <= lb[i]) {
      z[i] = lb[i];
      bound_[i] = Bound::kLower;
    } else if (z[i] >= ub[i]) {
      z[i] = ub[i];
      bound_[i] = Bound::kUpper;
    } else {
      free_.push_back(i);
    }
  }
  factor_free_block(h);

  const double lam_tol = settings_.tol * (1.0 + g.cwiseAbs().maxCoeff());

  Eigen::VectorXd grad(n), rhs, target, dir;
  for (res.iterations = 1; res.iterations <= settings_.max_iter; ++res.iterations) {
    const int nf = static_cast<int>(free_.size());

    // Equality-constrained minimizer over the free variables.
    grad = h * z + g;  // gradient with current z (free part enters linearly)
    if (nf > 0) {
      rhs.resize(nf);
      for (int r = 0; r < nf; ++r) {
        const int i = free_[r];
        // g_F + H_FB z_B = grad_i - (H z)_FF part; easier: grad_i - H_iF z_F
        double hz_free = 0.0;
        for (int c = 0; c < nf; ++c) hz_free += h(i, free_[c]) * z[free_[c]];
        rhs[r] = grad[i] - hz_free;
      }
      target = solve_free(-rhs);
      dir.resize(nf);
      for (int r = 0; r < nf; ++r) dir[r] = target[r] - z[free_[r]];
    } else {
      dir.resize(0);
    }

    // Ratio test against the box.
    double step = 1.0;
    int blocking = -1;
    for (int r = 0; r < nf; ++r) {
      const int i = free_[r];
      if (dir[r] > 0.0) {
        const double room = (ub[i] - z[i]) / dir[r];
        if (room < step) {
          step = room;
          blocking = r;
        }
      } else if (dir[r] < 0.0) {
        const double room = (lb[i] - z[i]) / dir[r];
        if (room < step) {
          step = room;
          blocking = r;
        }
      }
    }
    if (step < 0.0) step = 0.0;

    if (blocking >= 0 && step < 1.0) {
      for (int r = 0; r < nf; ++r) z[free_[r]] += step * dir[r];
      const int var = free_[blocking];
      const bool to_upper = dir[blocking] > 0.0;
      z[var] = to_upper ? ub[var] : lb[var];
      bound_[var] = to_upper ? Bound::kUpper : Bound::kLower;
      remove_free(h, blocking);
      continue;
    }

    for (int r = 0; r < nf; ++r) z[free_[r]] = target[r];

    // At the minimizer over the current free set; examine bound multipliers.
    grad = h * z + g;
    int release = -1;
    double worst = lam_tol;
    for (int i = 0; i < n; ++i) {
      if (bound_[i] == Bound::kLower && -grad[i] > worst) {
        worst = -grad[i];
        release = i;
      } else if (bound_[i] == Bound::kUpper && grad[i] > worst) {
        worst = grad[i];
        release = i;
      }
    }
    if (release < 0) break;  // KKT satisfied
    bound_[release] = Bound::kFree;
    append_free(h, release);
  }

  if (res.iterations > settings_.max_iter) {
    res.iterations = settings_.max_iter;
    res.hit_iteration_cap = true;
  }

  z = z.cwiseMax(lb).cwiseMin(ub);  // exact bound satisfaction under rounding
  grad = h * z + g;
  double kkt = 0.0;
  for (int i = 0; i < n; ++i) {
    switch (bound_[i]) {
      case Bound::kFree:
        kkt = std::max(kkt, std::abs(grad[i]));
        break;
      case Bound::kLower:
        kkt = std::max(kkt, std::max(0.0, -grad[i]));
        break;
      case Bound::kUpper:
        kkt = std::max(kkt, std::max(0.0, grad[i]));
        break;
    }
  }
  res.kkt_residual = kkt;
  return res;
}

}  // namespace tiltctl
