#include "tiltctl/nmpc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace tiltctl {
namespace {

int residual_state_dim(const ModelLayout& layout)
{
  return 12 + (layout.servo_state ? layout.rotor_count : 0);
}

void clamp_input(Eigen::VectorXd& u, const RobotParams& p)
{
  const int np = p.rotor_count;
  u.head(np) = u.head(np).cwiseMax(p.thrust_min).cwiseMin(p.thrust_max);
  u.tail(np) = u.tail(np).cwiseMax(p.servo_min).cwiseMin(p.servo_max);
}

}  // namespace

Eigen::VectorXd OcpWeights::state_diag(const ModelLayout& layout) const
{
  Eigen::VectorXd d(residual_state_dim(layout));
  d.segment<3>(0) = Eigen::Vector3d(q_pos_xy, q_pos_xy, q_pos_z);
  d.segment<3>(3) = Eigen::Vector3d(q_vel_xy, q_vel_xy, q_vel_z);
  d.segment<3>(6) = Eigen::Vector3d(q_att_xy, q_att_xy, q_att_z);
  d.segment<3>(9) = Eigen::Vector3d(q_rate_xy, q_rate_xy, q_rate_z);
  if (layout.servo_state) d.segment(12, layout.rotor_count).setConstant(q_servo);
  return d;
}

Eigen::VectorXd OcpWeights::input_diag(int rotor_count) const
{
  Eigen::VectorXd d(2 * rotor_count);
  d.head(rotor_count).setConstant(r_thrust);
  d.tail(rotor_count).setConstant(r_servo_cmd);
  return d;
}

// Substituting alpha == alpha_c into the cost kills the servo-command error
// term (it is identically zero) and turns the servo-angle tracking term into
// a weak command anchor; the command is otherwise free within its limits.
Eigen::VectorXd instant_servo_input_diag(const OcpWeights& w, int rotor_count)
{
  Eigen::VectorXd d(2 * rotor_count);
  d.head(rotor_count).setConstant(w.r_thrust);
  d.tail(rotor_count).setConstant(w.q_servo);
  return d;
}

void OcpWeights::validate() const
{
  const double vals[] = {q_pos_xy, q_pos_z, q_vel_xy, q_vel_z, q_att_xy, q_att_z,
                         q_rate_xy, q_rate_z, q_servo, r_thrust, r_servo_cmd, terminal_scale};
  for (double v : vals)
    if (v < 0.0) throw std::invalid_argument("OcpWeights: weights must be >= 0");
  if (r_thrust <= 0.0 || r_servo_cmd <= 0.0)
    throw std::invalid_argument("OcpWeights: input weights must be > 0");
}

void OcpConfig::validate() const
{
  if (horizon < 1) throw std::invalid_argument("OcpConfig: horizon must be >= 1");
  if (!(t_integ > 0.0)) throw std::invalid_argument("OcpConfig: t_integ must be > 0");
  if (integ_substeps < 1) throw std::invalid_argument("OcpConfig: integ_substeps must be >= 1");
  if (v_limit < 0.0 || omega_limit < 0.0)
    throw std::invalid_argument("OcpConfig: state limits must be >= 0");
  if (soft_state_weight < 0.0)
    throw std::invalid_argument("OcpConfig: soft_state_weight must be >= 0");
}

Eigen::VectorXd stage_residual(const ModelLayout& layout, const OcpWeights& weights,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               const State& x_ref, const Input& u_ref)
{
  const int np = layout.rotor_count;
  const int ns = residual_state_dim(layout);
  const Eigen::VectorXd sq = weights.state_diag(layout).cwiseSqrt();
  const Eigen::VectorXd sr = (layout.servo_state ? weights.input_diag(np)
                                                 : instant_servo_input_diag(weights, np))
                                 .cwiseSqrt();

  Eigen::VectorXd r(ns + 2 * np);
  r.segment<3>(0) = x.segment<3>(ModelLayout::kPos) - x_ref.pos;
  r.segment<3>(3) = x.segment<3>(ModelLayout::kVel) - x_ref.vel;
  r.segment<3>(6) = quat_error_vec(x.segment<4>(ModelLayout::kQuat), x_ref.quat);
  r.segment<3>(9) = x.segment<3>(ModelLayout::kRate) - x_ref.rate;
  if (layout.servo_state)
    r.segment(12, np) = x.segment(layout.servo_offset(), np) - x_ref.servo.head(np);
  r.head(ns) = sq.cwiseProduct(r.head(ns));

  if (layout.thrust_state)
    r.segment(ns, np) = u.head(np) - x.segment(layout.thrust_offset(), np);
  else
    r.segment(ns, np) = u.head(np) - u_ref.thrust_cmd;
  if (layout.servo_state)
    r.segment(ns + np, np) = u.tail(np) - x.segment(layout.servo_offset(), np);
  else
    r.segment(ns + np, np) = u.tail(np) - u_ref.servo_cmd;
  r.tail(2 * np) = sr.cwiseProduct(r.tail(2 * np));
  return r;
}

void linearize_dynamics(const ModelLayout& layout, const RobotParams& params,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const Eigen::Vector3d& dist_force_w, double t_integ, int substeps,
                        Eigen::VectorXd& x_next, Eigen::MatrixXd& a, Eigen::MatrixXd& b)
{
  Disturbance d;
  d.force_w = dist_force_w;
  discrete_step_sens(layout, params, x, u, d, t_integ, substeps, x_next, a, b);
}

RtiSolver::RtiSolver(const RobotParams& params, const ModelLayout& layout,
                     const OcpWeights& weights, const OcpConfig& config)
    : params_(params), layout_(layout), weights_(weights), config_(config)
{
  params_.validate();
  weights_.validate();
  config_.validate();
  alloc_ = build_allocation(params_);

  BoxQpSettings qs;
  qs.tol = config_.qp_tol;
  qs.max_iter = config_.qp_max_iter;
  qp_ = BoxQpSolver(qs);

  const int n = config_.horizon;
  const int nx = layout_.nx();
  const int nu = layout_.nu();
  a_.assign(n, Eigen::MatrixXd(nx, nx));
  b_.assign(n, Eigen::MatrixXd(nx, nu));
  defect_.assign(n, Eigen::VectorXd(nx));
  h_.resize(n * nu, n * nu);
  m_.resize(nx, n * nu);
  m_tmp_.resize(nx, n * nu);
  grad_.resize(n * nu);
  lb_.resize(n * nu);
  ub_.resize(n * nu);
}

Eigen::VectorXd RtiSolver::pack_measurement(const State& s,
                                            const Eigen::VectorXd& thrust_meas) const
{
  Eigen::VectorXd x = layout_.pack(s);
  if (layout_.thrust_state)
    x.segment(layout_.thrust_offset(), layout_.rotor_count) = thrust_meas;
  return x;
}

WarmStart RtiSolver::cold_start(const Eigen::VectorXd& x_hat,
                                const ReferenceWindow& window) const
{
  const int n = config_.horizon;
  const Quat q_hat = x_hat.segment<4>(ModelLayout::kQuat);

  Wrench hover;
  hover.force = quat_to_rot(q_hat).transpose() *
                Eigen::Vector3d(0, 0, params_.mass * params_.gravity);
  const AllocationResult alloc = allocate(alloc_, hover, params_);
  Eigen::VectorXd u0(layout_.nu());
  u0 << alloc.thrust, alloc.angle;

  WarmStart w;
  w.x.assign(n + 1, x_hat);
  w.u.assign(n, u0);
  for (int k = 0; k <= n; ++k) {
    const Quat blended = quat_slerp(q_hat, window.x[k].quat, static_cast<double>(k) / n);
    w.x[k].segment<4>(ModelLayout::kQuat) = blended;
  }
  return w;
}

WarmStart RtiSolver::shift_warm_start(const SolveResult& result)
{
  const size_t n = result.u_pred.size();
  WarmStart w;
  w.x.resize(n + 1);
  w.u.resize(n);
  for (size_t k = 0; k < n; ++k) {
    w.x[k] = result.x_pred[k + 1];
    w.u[k] = k + 1 < n ? result.u_pred[k + 1] : result.u_pred[n - 1];
  }
  w.x[n] = result.x_pred[n];
  return w;
}

void RtiSolver::stage_residual_lin(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                   const State& x_ref, const Input& u_ref, bool terminal,
                                   Eigen::VectorXd& r, Eigen::MatrixXd& c,
                                   Eigen::MatrixXd& d) const
{
  const int np = layout_.rotor_count;
  const int ns = residual_state_dim(layout_);
  const int nx = layout_.nx();
  const int nu = layout_.nu();
  const int nr = terminal ? ns : ns + nu;

  Eigen::VectorXd sq = weights_.state_diag(layout_).cwiseSqrt();
  if (terminal) sq *= std::sqrt(weights_.terminal_scale);

  r.resize(nr);
  c.setZero(nr, nx);
  r.segment<3>(0) = x.segment<3>(ModelLayout::kPos) - x_ref.pos;
  r.segment<3>(3) = x.segment<3>(ModelLayout::kVel) - x_ref.vel;
  r.segment<3>(6) = quat_error_vec(x.segment<4>(ModelLayout::kQuat), x_ref.quat);
  r.segment<3>(9) = x.segment<3>(ModelLayout::kRate) - x_ref.rate;
  for (int i = 0; i < 3; ++i) {
    c(i, ModelLayout::kPos + i) = sq[i];
    c(3 + i, ModelLayout::kVel + i) = sq[3 + i];
    c(9 + i, ModelLayout::kRate + i) = sq[9 + i];
  }
  c.block<3, 4>(6, ModelLayout::kQuat) =
      sq.segment<3>(6).asDiagonal() *
      quat_error_vec_jac(x.segment<4>(ModelLayout::kQuat), x_ref.quat);
  if (layout_.servo_state) {
    r.segment(12, np) = x.segment(layout_.servo_offset(), np) - x_ref.servo.head(np);
    for (int i = 0; i < np; ++i) c(12 + i, layout_.servo_offset() + i) = sq[12 + i];
  }
  r.head(ns) = sq.cwiseProduct(r.head(ns));

  if (terminal) return;

  const Eigen::VectorXd sr = (layout_.servo_state ? weights_.input_diag(np)
                                                   : instant_servo_input_diag(weights_, np))
                                 .cwiseSqrt();
  d.setZero(nr, nu);
  if (layout_.thrust_state) {
    r.segment(ns, np) = u.head(np) - x.segment(layout_.thrust_offset(), np);
    for (int i = 0; i < np; ++i) {
      d(ns + i, i) = sr[i];
      c(ns + i, layout_.thrust_offset() + i) = -sr[i];
    }
  } else {
    r.segment(ns, np) = u.head(np) - u_ref.thrust_cmd;
    for (int i = 0; i < np; ++i) d(ns + i, i) = sr[i];
  }
  if (layout_.servo_state) {
    r.segment(ns + np, np) = u.tail(np) - x.segment(layout_.servo_offset(), np);
    for (int i = 0; i < np; ++i) {
      d(ns + np + i, np + i) = sr[np + i];
      c(ns + np + i, layout_.servo_offset() + i) = -sr[np + i];
    }
  } else {
    r.segment(ns + np, np) = u.tail(np) - u_ref.servo_cmd;
    for (int i = 0; i < np; ++i) d(ns + np + i, np + i) = sr[np + i];
  }
  r.tail(nu) = sr.cwiseProduct(r.tail(nu));
}

SolveResult RtiSolver::solve(const Eigen::VectorXd& x_hat, const ReferenceWindow& window,
                             const WarmStart& warm, const Eigen::Vector3d& dist_force_w)
{
  const auto t_start = std::chrono::steady_clock::now();
  const int n = config_.horizon;
  const int nu = layout_.nu();
  const int np = layout_.rotor_count;

  if (static_cast<int>(warm.x.size()) != n + 1 || static_cast<int>(warm.u.size()) != n)
    throw std::invalid_argument("RtiSolver::solve: warm start does not match the horizon");
  if (static_cast<int>(window.x.size()) != n + 1 || static_cast<int>(window.u.size()) != n)
    throw std::invalid_argument("RtiSolver::solve: reference window does not match the horizon");

  SolveResult res;
  auto finish = [&](SolveStatus st) {
    res.status = st;
    res.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return res;
  };

  std::vector<Eigen::VectorXd> xg = warm.x;
  std::vector<Eigen::VectorXd> ug = warm.u;
  for (auto& u : ug) clamp_input(u, params_);

  Disturbance dist;
  dist.force_w = dist_force_w;

  // Shooting linearization and defects.
  Eigen::VectorXd x_next;
  try {
    for (int k = 0; k < n; ++k) {
      discrete_step_sens(layout_, params_, xg[k], ug[k], dist, config_.t_integ,
                         config_.integ_substeps, x_next, a_[k], b_[k]);
      defect_[k] = x_next - xg[k + 1];
    }
  } catch (const NumericalError&) {
    res.u_now = Input::from_vec(ug[0]);
    return finish(SolveStatus::kDiverged);
  }

  // Condense residuals onto the input increments. Soft-bound rows of the
  // prediction map are stashed so penalties can be (re)evaluated at any
  // candidate increment below.
  h_.setZero();
  grad_.setZero();
  m_.setZero();
  Eigen::VectorXd w = x_hat - xg[0];

  constexpr int kSoftPerStage = 6;  // 3 velocity + 3 body-rate components
  Eigen::MatrixXd soft_rows(kSoftPerStage * (n + 1), n * nu);
  Eigen::VectorXd soft_val(kSoftPerStage * (n + 1));
  Eigen::VectorXd soft_lim(kSoftPerStage * (n + 1));
  soft_rows.setZero();

  Eigen::VectorXd r, rtil;
  Eigen::MatrixXd c, d, j;
  for (int k = 0; k <= n; ++k) {
    const bool terminal = (k == n);
    const int ncols = k * nu;
    const int jcols = terminal ? ncols : ncols + nu;

    stage_residual_lin(xg[k], terminal ? ug[n - 1] : ug[k], window.x[k],
                       terminal ? window.u[n - 1] : window.u[k], terminal, r, c, d);
    rtil = r + c * w;
    j.resize(r.size(), jcols);
    if (ncols > 0) j.leftCols(ncols).noalias() = c * m_.leftCols(ncols);
    if (!terminal) j.rightCols(nu) = d;
    if (jcols > 0) {
      h_.topLeftCorner(jcols, jcols)
          .selfadjointView<Eigen::Lower>()
          .rankUpdate(j.transpose());
      grad_.head(jcols).noalias() += j.transpose() * rtil;
    }

    for (int blk = 0; blk < 2; ++blk) {
      for (int ax = 0; ax < 3; ++ax) {
        const int idx = (blk == 0 ? ModelLayout::kVel : ModelLayout::kRate) + ax;
        const int row = kSoftPerStage * k + 3 * blk + ax;
        soft_rows.row(row).head(ncols) = m_.row(idx).head(ncols);
        soft_val[row] = xg[k][idx] + w[idx];
        soft_lim[row] = blk == 0 ? config_.v_limit : config_.omega_limit;
      }
    }

    if (!terminal) {
      w = a_[k] * w + defect_[k];
      if (ncols > 0) {
        m_tmp_.leftCols(ncols).noalias() = a_[k] * m_.leftCols(ncols);
        m_.leftCols(ncols) = m_tmp_.leftCols(ncols);
      }
      m_.middleCols(ncols, nu) = b_[k];
    }
  }
  h_ = h_.selfadjointView<Eigen::Lower>();

  for (int k = 0; k < n; ++k) {
    lb_.segment(k * nu, np) = Eigen::VectorXd::Constant(np, params_.thrust_min) - ug[k].head(np);
    ub_.segment(k * nu, np) = Eigen::VectorXd::Constant(np, params_.thrust_max) - ug[k].head(np);
    lb_.segment(k * nu + np, np) =
        Eigen::VectorXd::Constant(np, params_.servo_min) - ug[k].tail(np);
    ub_.segment(k * nu + np, np) =
        Eigen::VectorXd::Constant(np, params_.servo_max) - ug[k].tail(np);
  }

  // The quadratic penalty on velocity / body-rate bounds is piecewise
  // quadratic in the increments; solve it exactly by growing the activation
  // set until the minimizer stops leaving the penalized region. The first
  // stage is pinned by the initial condition and carries no penalty.
  const double mu = config_.soft_state_weight;
  BoxQpResult qp;
  std::vector<bool> active(soft_val.size(), false);
  Eigen::MatrixXd h_work = h_;
  Eigen::VectorXd grad_work = grad_;
  auto violation = [&](int row, const Eigen::VectorXd& z) {
    const double val = soft_val[row] + soft_rows.row(row).dot(z);
    if (val > soft_lim[row]) return val - soft_lim[row];
    if (val < -soft_lim[row]) return val + soft_lim[row];
    return 0.0;
  };
  try {
    for (int outer = 0; outer < 6; ++outer) {
      // Seed the active set from the clamped Newton step; a cold zero start
      // can need one ratio test per active bound, which a reference jump
      // exhausts.
      const Eigen::VectorXd newton = h_work.llt().solve(-grad_work);
      qp = qp_.solve(h_work, grad_work, lb_, ub_, newton);
      if (mu <= 0.0) break;
      bool grew = false;
      for (int row = kSoftPerStage; row < soft_val.size(); ++row) {
        if (active[row] || violation(row, qp.z) == 0.0) continue;
        active[row] = true;
        grew = true;
        h_work.selfadjointView<Eigen::Lower>().rankUpdate(soft_rows.row(row).transpose(), mu);
        // The penalty is centered on the nearest bound edge.
        const double val = soft_val[row] + soft_rows.row(row).dot(qp.z);
        const double edge = val > 0.0 ? soft_lim[row] : -soft_lim[row];
        grad_work.noalias() +=
            mu * (soft_val[row] - edge) * soft_rows.row(row).transpose();
      }
      if (!grew) break;
      h_work = h_work.selfadjointView<Eigen::Lower>();
    }
  } catch (const NumericalError&) {
    res.u_now = Input::from_vec(ug[0]);
    return finish(SolveStatus::kDiverged);
  }
  res.qp_iterations = qp.iterations;
  res.kkt_residual = qp.kkt_residual;
  res.qp_objective = 0.5 * qp.z.dot(h_work * qp.z) + grad_work.dot(qp.z);

  // Full Newton step: expand the increments back onto the trajectory.
  res.x_pred.resize(n + 1);
  res.u_pred.resize(n);
  Eigen::VectorXd dx = x_hat - xg[0];
  for (int k = 0; k <= n; ++k) {
    res.x_pred[k] = xg[k] + dx;
    res.x_pred[k].segment<4>(ModelLayout::kQuat).normalize();
    if (k < n) {
      const Eigen::VectorXd du = qp.z.segment(k * nu, nu);
      res.u_pred[k] = ug[k] + du;
      clamp_input(res.u_pred[k], params_);  // reconstruction can round 1 ulp past a bound
      dx = a_[k] * dx + b_[k] * du + defect_[k];
    }
  }

  double cost = 0.0;
  bool finite = true;
  for (int k = 0; k < n; ++k) {
    cost += stage_residual(layout_, weights_, res.x_pred[k], res.u_pred[k], window.x[k],
                           window.u[k])
                .squaredNorm();
    finite = finite && res.x_pred[k].allFinite() && res.u_pred[k].allFinite();
  }
  {
    Eigen::VectorXd rn;
    Eigen::MatrixXd cn, dn;
    stage_residual_lin(res.x_pred[n], ug[n - 1], window.x[n], window.u[n - 1], true, rn, cn, dn);
    cost += rn.squaredNorm();
    finite = finite && res.x_pred[n].allFinite();
  }
  res.cost = cost;
  res.u_now = Input::from_vec(res.u_pred[0]);

  if (!finite || !std::isfinite(cost)) return finish(SolveStatus::kDiverged);
  return finish(qp.hit_iteration_cap ? SolveStatus::kQpMaxIter : SolveStatus::kOk);
}

}  // namespace tiltctl
