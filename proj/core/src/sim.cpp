#include "tiltctl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tiltctl {
namespace {

PoseTarget active_reference(const Scenario& sc, double t)
{
  if (sc.trajectory) {
    PoseTarget p;
    p.pos = sc.trajectory->pos(t);
    p.quat = rpy_to_quat(sc.trajectory->rpy(t));
    return p;
  }
  PoseTarget active = sc.setpoints.front().target;
  for (const auto& sp : sc.setpoints)
    if (sp.t_switch <= t + 1e-12) active = sp.target;
  return active;
}

ReferenceWindow build_window(const Scenario& sc, const AllocationMap& map, double t)
{
  if (sc.trajectory)
    return trajectory_window(*sc.trajectory, t, sc.robot, map, sc.ocp.horizon, sc.ocp.t_integ);
  return setpoint_window(active_reference(sc, t), sc.robot, map, sc.ocp.horizon,
                         sc.ocp.t_integ);
}

State measure(const State& truth, const NoiseConfig& noise, std::mt19937_64& rng)
{
  if (!noise.enabled) return truth;
  std::normal_distribution<double> gauss(0.0, 1.0);
  State m = truth;
  for (int i = 0; i < 3; ++i) m.pos[i] += noise.sigma_pos * gauss(rng);
  for (int i = 0; i < 3; ++i) m.vel[i] += noise.sigma_vel * gauss(rng);
  Eigen::Vector3d tangent;
  for (int i = 0; i < 3; ++i) tangent[i] = noise.sigma_att * gauss(rng);
  m.quat = quat_normalized(
      quat_mul(truth.quat, Quat(1.0, 0.5 * tangent[0], 0.5 * tangent[1], 0.5 * tangent[2])));
  for (int i = 0; i < 3; ++i) m.rate[i] += noise.sigma_rate * gauss(rng);
  for (int i = 0; i < m.servo.size(); ++i) m.servo[i] += noise.sigma_servo * gauss(rng);
  return m;
}

Disturbance disturbance_at(const Scenario& sc, double t)
{
  Disturbance d;
  d.force_w.z() = sc.z_force_bias;
  for (const auto& ev : sc.disturbances) {
    if (t >= ev.t_start - 1e-12 && t < ev.t_start + ev.duration - 1e-12) {
      d.force_w += ev.force_w;
      d.torque_b += ev.torque_b;
    }
  }
  return d;
}

bool within_envelope(const State& s, const Scenario& sc)
{
  return s.pos.norm() <= sc.crash_pos_limit && s.vel.norm() <= sc.crash_vel_limit &&
         s.rate.norm() <= sc.crash_rate_limit;
}

bool state_finite(const PlantState& p)
{
  return p.state.pos.allFinite() && p.state.vel.allFinite() && p.state.quat.allFinite() &&
         p.state.rate.allFinite() && p.state.servo.allFinite() && p.thrust.allFinite();
}

double percentile(std::vector<double> v, double q)
{
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<size_t>(q * (v.size() - 1));
  return v[idx];
}

}  // namespace

ModelLayout variant_layout(ControllerVariant variant, int rotor_count)
{
  ModelLayout l;
  l.rotor_count = rotor_count;
  switch (variant) {
    case ControllerVariant::kNoServoNoThrust:
      l.servo_state = false;
      l.thrust_state = false;
      break;
    case ControllerVariant::kServoOnly:
      l.servo_state = true;
      l.thrust_state = false;
      break;
    case ControllerVariant::kServoThrust:
      l.servo_state = true;
      l.thrust_state = true;
      break;
  }
  return l;
}

std::string variant_name(ControllerVariant variant)
{
  switch (variant) {
    case ControllerVariant::kNoServoNoThrust: return "no_servo_no_thrust";
    case ControllerVariant::kServoOnly: return "servo_only";
    case ControllerVariant::kServoThrust: return "servo_and_thrust";
  }
  return "unknown";
}

std::string run_status_name(RunStatus s)
{
  switch (s) {
    case RunStatus::kOk: return "ok";
    case RunStatus::kDiverged: return "diverged";
    case RunStatus::kCrashed: return "crashed";
  }
  return "unknown";
}

void Scenario::validate() const
{
  robot.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("Scenario: duration must be > 0");
  if (!(plant_dt > 0.0)) throw std::invalid_argument("Scenario: plant_dt must be > 0");
  const double ratio = control_dt / plant_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
    throw std::invalid_argument("Scenario: control_dt must be an integer multiple of plant_dt");
  if (!trajectory) {
    if (setpoints.empty())
      throw std::invalid_argument("Scenario: needs a trajectory or at least one setpoint");
    if (setpoints.front().t_switch > 1e-12)
      throw std::invalid_argument("Scenario: first setpoint must start at t=0");
    for (size_t i = 0; i < setpoints.size(); ++i) {
      if (setpoints[i].t_switch > duration)
        throw std::invalid_argument("Scenario: setpoint switch time beyond duration");
      if (i > 0 && setpoints[i].t_switch < setpoints[i - 1].t_switch)
        throw std::invalid_argument("Scenario: setpoint switch times must be sorted");
    }
  }
}

RunLog run_closed_loop(const Scenario& sc)
{
  sc.validate();
  const int ratio = static_cast<int>(std::lround(sc.control_dt / sc.plant_dt));
  const int steps = static_cast<int>(std::lround(sc.duration / sc.plant_dt));

  const ModelLayout layout = variant_layout(sc.variant, sc.robot.rotor_count);
  RtiSolver solver(sc.robot, layout, sc.weights, sc.ocp);
  const AllocationMap map = build_allocation(sc.robot);

  // Initial plant state and a matching held input.
  State init = sc.initial;
  Eigen::VectorXd thrust0;
  Eigen::VectorXd servo0;
  if (sc.trajectory && sc.start_on_trajectory) {
    const PoseTrajectory& tr = *sc.trajectory;
    init.pos = tr.pos(0.0);
    init.vel = tr.vel(0.0);
    init.quat = rpy_to_quat(tr.rpy(0.0));
    Eigen::Vector3d omega, omega_dot;
    rpy_path_rates(tr.rpy(0.0), tr.rpy_rate(0.0), tr.rpy_acc(0.0), omega, omega_dot);
    init.rate = omega;
    Wrench w;
    w.force = quat_to_rot(init.quat).transpose() *
              (sc.robot.mass * (tr.acc(0.0) + Eigen::Vector3d(0, 0, sc.robot.gravity)));
    w.torque = sc.robot.inertia_diag.cwiseProduct(omega_dot);
    const AllocationResult alloc = allocate(map, w, sc.robot);
    init.servo = alloc.angle;
    thrust0 = alloc.thrust;
    servo0 = alloc.angle;
  } else {
    Wrench w;
    w.force = quat_to_rot(init.quat).transpose() *
              Eigen::Vector3d(0, 0, sc.robot.mass * sc.robot.gravity);
    const AllocationResult alloc = allocate(map, w, sc.robot);
    thrust0 = alloc.thrust;
    servo0 = init.servo;
  }
  PlantState plant = PlantState::hover_init(init, thrust0);

  Input u_applied;
  u_applied.thrust_cmd = thrust0;
  u_applied.servo_cmd = servo0;

  ITermState iterm;
  iterm.k_i = sc.k_i_z;
  iterm.t_s = sc.control_dt;
  iterm.u_min = -sc.f_d_limit;
  iterm.u_max = sc.f_d_limit;
  double f_dz = 0.0;

  std::mt19937_64 rng(sc.seed);
  WarmStart warm;
  bool have_warm = false;
  SolveStats last_stats;

  RunLog log;
  log.records.reserve(steps + 1);

  for (int step = 0; step <= steps; ++step) {
    const double t = step * sc.plant_dt;

    if (!within_envelope(plant.state, sc)) log.status = RunStatus::kCrashed;

    if (log.status == RunStatus::kOk && step % ratio == 0) {
      State meas = measure(plant.state, sc.noise, rng);
      meas.quat.normalize();
      const PoseTarget active = active_reference(sc, t);
      // The estimate-above-reference error drives the disturbance estimate up.
      const auto [u_i, iterm_next] = iterm_update(iterm, meas.pos.z() - active.pos.z());
      iterm = iterm_next;
      f_dz = u_i;

      const ReferenceWindow window = build_window(sc, map, t);
      const Eigen::VectorXd x_hat = solver.pack_measurement(meas, plant.thrust);
      if (!have_warm) {
        warm = solver.cold_start(x_hat, window);
        have_warm = true;
      }
      const SolveResult res = solver.solve(x_hat, window, warm, Eigen::Vector3d(0, 0, f_dz));
      last_stats = {res.solve_time_ms, res.qp_iterations, res.kkt_residual, res.cost};
      log.solves.push_back(last_stats);
      if (res.status == SolveStatus::kDiverged) {
        log.status = RunStatus::kDiverged;
      } else {
        u_applied = res.u_now;
        // The control period is a fraction of the shooting interval, so the
        // previous solution is already aligned with the new problem; shifting
        // a whole stage per tick would outrun real time tenfold.
        warm.x = res.x_pred;
        warm.u = res.u_pred;
      }
    }

    LogRecord rec;
    rec.t = t;
    rec.x = plant.state;
    rec.thrust = plant.thrust;
    rec.applied = u_applied;
    rec.ref = active_reference(sc, t);
    rec.f_dz = f_dz;
    rec.stats = last_stats;
    log.records.push_back(std::move(rec));

    if (log.status != RunStatus::kOk || step == steps) break;

    try {
      log.clamp_events +=
          step_plant(plant, u_applied, disturbance_at(sc, t), sc.robot, sc.plant, t, sc.plant_dt);
    } catch (const NumericalError&) {
      log.status = RunStatus::kCrashed;
      break;
    }
    if (!state_finite(plant)) {
      log.status = RunStatus::kCrashed;
      break;
    }
  }
  return log;
}

RunSummary metrics(const RunLog& log)
{
  RunSummary s;
  s.status = log.status;
  const auto& recs = log.records;
  if (recs.empty()) return s;

  Eigen::Vector3d se_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d se_att = Eigen::Vector3d::Zero();
  for (const auto& r : recs) {
    se_pos += (r.x.pos - r.ref.pos).cwiseAbs2();
    const Eigen::Vector3d rpy = quat_to_rpy(r.x.quat);
    const Eigen::Vector3d rpy_ref = quat_to_rpy(r.ref.quat);
    for (int i = 0; i < 3; ++i) {
      const double e = wrap_angle(rpy[i] - rpy_ref[i]);
      se_att[i] += e * e;
    }
  }
  const double n = static_cast<double>(recs.size());
  s.rmse_pos = (se_pos / n).cwiseSqrt();
  s.rmse_att_deg = rad2deg(1.0) * (se_att / n).cwiseSqrt();

  // Overshoot and 5%-band settling on the first Z step, while the Z reference
  // holds its initial value.
  const double z0 = recs.front().x.pos.z();
  const double z_ref = recs.front().ref.pos.z();
  const double dz = z_ref - z0;
  if (std::abs(dz) > 1e-6) {
    size_t seg_end = recs.size();
    for (size_t i = 0; i < recs.size(); ++i) {
      if (std::abs(recs[i].ref.pos.z() - z_ref) > 1e-9) {
        seg_end = i;
        break;
      }
    }
    double beyond = 0.0;
    for (size_t i = 0; i < seg_end; ++i) {
      const double sgn = dz > 0 ? 1.0 : -1.0;
      beyond = std::max(beyond, sgn * (recs[i].x.pos.z() - z_ref));
    }
    s.overshoot_z_pct = 100.0 * beyond / std::abs(dz);
    const double band = 0.05 * std::abs(dz);
    double settle = 0.0;
    for (size_t i = 0; i < seg_end; ++i)
      if (std::abs(recs[i].x.pos.z() - z_ref) > band)
        settle = (i + 1 < seg_end) ? recs[i + 1].t : recs[i].t;
    s.settle_s = settle;
  }

  for (size_t i = 1; i < recs.size(); ++i) {
    const Eigen::VectorXd dthr = recs[i].applied.thrust_cmd - recs[i - 1].applied.thrust_cmd;
    const Eigen::VectorXd dsrv = recs[i].applied.servo_cmd - recs[i - 1].applied.servo_cmd;
    s.tv_thrust_cmd += dthr.lpNorm<1>();
    s.tv_servo_cmd += dsrv.lpNorm<1>();
    if (dthr.size() > 0)
      s.max_thrust_cmd_step = std::max(s.max_thrust_cmd_step, dthr.cwiseAbs().maxCoeff());
  }
  s.tv_total_cmd = s.tv_thrust_cmd + s.tv_servo_cmd;

  std::vector<double> times;
  times.reserve(log.solves.size());
  for (const auto& st : log.solves) times.push_back(st.solve_time_ms);
  s.solve_ms_p50 = percentile(times, 0.50);
  s.solve_ms_p99 = percentile(times, 0.99);
  return s;
}

double max_pos_error_between(const RunLog& log, double t_from, double t_to)
{
  double worst = 0.0;
  for (const auto& r : log.records)
    if (r.t >= t_from - 1e-12 && r.t <= t_to + 1e-12)
      worst = std::max(worst, (r.x.pos - r.ref.pos).norm());
  return worst;
}

AblationReport ablation_compare(const Scenario& base)
{
  Scenario sc = base;
  sc.plant.thrust_model = true;  // identical plants across every arm
  sc.noise.enabled = false;

  auto run_variant = [&sc](ControllerVariant v) {
    Scenario s = sc;
    s.variant = v;
    const RunLog log = run_closed_loop(s);
    VariantOutcome out;
    out.variant = v;
    out.summary = metrics(log);
    out.status = log.status;
    return out;
  };

  AblationReport rep;
  rep.no_servo = run_variant(ControllerVariant::kNoServoNoThrust);
  rep.servo = run_variant(ControllerVariant::kServoOnly);
  rep.servo_thrust = run_variant(ControllerVariant::kServoThrust);

  const double tv_servo = rep.servo.summary.tv_servo_cmd;
  rep.servo_tv_ratio =
      tv_servo > 0.0 ? rep.no_servo.summary.tv_servo_cmd / tv_servo
                     : std::numeric_limits<double>::infinity();
  // A crashed no-servo arm counts as oscillation a fortiori.
  rep.oscillation_ordering =
      rep.no_servo.status != RunStatus::kOk || rep.servo_tv_ratio >= 2.0;
  rep.smoothness_ordering =
      rep.servo_thrust.status == RunStatus::kOk && rep.servo.status == RunStatus::kOk &&
      rep.servo_thrust.summary.rmse_pos.norm() <= 1.05 * rep.servo.summary.rmse_pos.norm();
  rep.thrust_step_ordering =
      rep.servo_thrust.summary.max_thrust_cmd_step < rep.servo.summary.max_thrust_cmd_step;
  return rep;
}

LagSensitivity lag_sensitivity(double angle_from, double angle_to, double thrust_from,
                               double thrust_to, double lag_fraction)
{
  LagSensitivity out;
  const double angle_lag = angle_to + (angle_from - angle_to) * lag_fraction;
  out.servo_pct = 100.0 * (std::cos(angle_lag) - std::cos(angle_to)) / std::cos(angle_to);
  const double thrust_lag = thrust_to + (thrust_from - thrust_to) * lag_fraction;
  out.thrust_pct = 100.0 * (thrust_lag - thrust_to) / thrust_to;
  return out;
}

Scenario hover_scenario(double duration)
{
  Scenario sc;
  sc.duration = duration;
  sc.initial.pos = Eigen::Vector3d(0, 0, 1);
  Scenario::TimedTarget tgt;
  tgt.t_switch = 0.0;
  tgt.target.pos = sc.initial.pos;
  sc.setpoints = {tgt};
  return sc;
}

Scenario step_pose_scenario(double duration)
{
  Scenario sc;
  sc.duration = duration;
  sc.k_i_z = 0.0;  // the ideal step experiment runs with zero disturbance force
  Scenario::TimedTarget first;
  first.t_switch = 0.0;
  first.target.pos = Eigen::Vector3d(0.3, 0.6, 1.0);
  Scenario::TimedTarget second = first;
  second.t_switch = 2.0;
  second.target.quat = rpy_to_quat(deg2rad(30.0), deg2rad(60.0), deg2rad(90.0));
  sc.setpoints = {first, second};
  return sc;
}

Scenario setpoint_sequence_scenario()
{
  Scenario sc;
  sc.duration = 24.0;
  sc.initial.pos = Eigen::Vector3d(0, 0, 1);
  Scenario::TimedTarget a, b, c;
  a.t_switch = 0.0;
  a.target.pos = Eigen::Vector3d(0.3, 0.2, 1.2);
  a.target.quat = rpy_to_quat(0.5, 0.0, 0.3);
  b.t_switch = 8.0;
  b.target.pos = Eigen::Vector3d(-0.3, 0.0, 1.0);
  b.target.quat = rpy_to_quat(0.5, 0.5, -0.3);
  c.t_switch = 16.0;
  c.target.pos = sc.initial.pos;
  sc.setpoints = {a, b, c};
  return sc;
}

Scenario figure8_scenario(double period, double duration)
{
  Scenario sc;
  sc.trajectory = build_figure8(period);
  sc.start_on_trajectory = true;
  sc.duration = duration > 0.0 ? duration : period;
  return sc;
}

Scenario disturbance_scenario()
{
  Scenario sc = hover_scenario(6.0);
  DisturbanceEvent ev;
  ev.t_start = 2.0;
  ev.duration = 0.3;
  ev.force_w = Eigen::Vector3d(3.0, 0.0, 0.0);
  sc.disturbances = {ev};
  return sc;
}

}  // namespace tiltctl
