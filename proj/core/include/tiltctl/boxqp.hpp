#pragma once

#include <vector>

#include <Eigen/Core>

namespace tiltctl {

struct BoxQpSettings {
  double tol = 1e-8;
  int max_iter = 200;
};

struct BoxQpResult {
  Eigen::VectorXd z;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool hit_iteration_cap = false;
};

/// Primal active-set solver for  min 1/2 z'Hz + g'z  s.t. lb <= z <= ub  with
/// H symmetric positive definite. The Cholesky factor of the free block is
/// maintained incrementally: freeing a variable appends a row (one triangular
/// solve), fixing one deletes a row and rank-1-updates the trailing block.
/// Bounds are satisfied exactly at every iterate. Deterministic.
class BoxQpSolver {
 public:
  explicit BoxQpSolver(BoxQpSettings settings = {}) : settings_(settings) {}

  BoxQpResult solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                    const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                    const Eigen::VectorXd& z0);

 private:
  enum class Bound : unsigned char { kFree, kLower, kUpper };

  void factor_free_block(const Eigen::MatrixXd& h);
  void append_free(const Eigen::MatrixXd& h, int var);
  void remove_free(const Eigen::MatrixXd& h, int pos);
  Eigen::VectorXd solve_free(const Eigen::VectorXd& rhs) const;

  BoxQpSettings settings_;
  std::vector<int> free_;          // variable index per factor position
  std::vector<Bound> bound_;       // per variable
  Eigen::MatrixXd chol_;           // lower factor of H[free_, free_], top-left block
};

}  // namespace tiltctl
