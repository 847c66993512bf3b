#include "tiltctl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tiltctl {
namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ParseCtx {
  std::string where;  // "file:line"
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where + ": " + msg); }
};

double to_double(const std::string& v, const ParseCtx& ctx)
{
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') ctx.fail("expected a number, got '" + v + "'");
  return d;
}

int to_int(const std::string& v, const ParseCtx& ctx)
{
  const double d = to_double(v, ctx);
  if (d != std::floor(d)) ctx.fail("expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string& v, const ParseCtx& ctx)
{
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  ctx.fail("expected true/false, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, const ParseCtx& ctx, F convert)
{
  std::vector<T> out;
  std::istringstream row(v);
  std::string cell;
  while (std::getline(row, cell, ',')) out.push_back(convert(trim(cell), ctx));
  if (out.empty()) ctx.fail("expected a comma-separated list");
  return out;
}

using Setter = std::function<void(FullConfig&, const std::string&, const ParseCtx&)>;
using SectionMap = std::map<std::string, Setter>;

#define NUM_KEY(field) \
  {#field, [](FullConfig& c, const std::string& v, const ParseCtx& x) { c.field = to_double(v, x); }}
#define INT_KEY(field) \
  {#field, [](FullConfig& c, const std::string& v, const ParseCtx& x) { c.field = to_int(v, x); }}
#define BOOL_KEY(field) \
  {#field, [](FullConfig& c, const std::string& v, const ParseCtx& x) { c.field = to_bool(v, x); }}

const std::map<std::string, SectionMap>& registry()
{
  static const std::map<std::string, SectionMap> reg = {
      {"robot",
       {NUM_KEY(mass), NUM_KEY(inertia_xx), NUM_KEY(inertia_yy), NUM_KEY(inertia_zz),
        NUM_KEY(gravity), INT_KEY(rotor_count), NUM_KEY(arm_length),
        {"arm_azimuth_deg",
         [](FullConfig& c, const std::string& v, const ParseCtx& x) {
           c.arm_azimuth_deg = to_list<double>(v, x, to_double);
         }},
        {"spin_direction",
         [](FullConfig& c, const std::string& v, const ParseCtx& x) {
           c.spin_direction = to_list<int>(v, x, to_int);
         }},
        NUM_KEY(thrust_coeff), NUM_KEY(torque_ratio), NUM_KEY(thrust_min), NUM_KEY(thrust_max),
        NUM_KEY(servo_min_deg), NUM_KEY(servo_max_deg), NUM_KEY(t_servo), NUM_KEY(t_thrust),
        NUM_KEY(t_dead)}},
      {"nmpc",
       {INT_KEY(horizon), NUM_KEY(t_integ), INT_KEY(integ_substeps), NUM_KEY(q_pos_xy),
        NUM_KEY(q_pos_z), NUM_KEY(q_vel_xy), NUM_KEY(q_vel_z), NUM_KEY(q_att_xy),
        NUM_KEY(q_att_z), NUM_KEY(q_rate_xy), NUM_KEY(q_rate_z), NUM_KEY(q_servo),
        NUM_KEY(r_thrust), NUM_KEY(r_servo_cmd), NUM_KEY(terminal_scale), NUM_KEY(v_limit),
        NUM_KEY(omega_limit), NUM_KEY(soft_state_weight), NUM_KEY(qp_tol), INT_KEY(qp_max_iter),
        NUM_KEY(k_i_z), NUM_KEY(f_d_limit)}},
      {"sim",
       {NUM_KEY(plant_dt), NUM_KEY(control_dt), BOOL_KEY(thrust_model), BOOL_KEY(dead_time),
        BOOL_KEY(noise), NUM_KEY(sigma_pos), NUM_KEY(sigma_vel), NUM_KEY(sigma_att_deg),
        NUM_KEY(sigma_rate_deg), NUM_KEY(sigma_servo_deg)}},
      {"scenario",
       {NUM_KEY(duration), NUM_KEY(traj_period), NUM_KEY(z_force_bias), NUM_KEY(dist_time),
        NUM_KEY(dist_duration), NUM_KEY(dist_force_x), NUM_KEY(dist_force_y),
        NUM_KEY(dist_force_z), NUM_KEY(dist_torque_x), NUM_KEY(dist_torque_y),
        NUM_KEY(dist_torque_z)}},
  };
  return reg;
}

#undef NUM_KEY
#undef INT_KEY
#undef BOOL_KEY

}  // namespace

RobotParams FullConfig::robot_params() const
{
  RobotParams p;
  p.mass = mass;
  p.inertia_diag = Eigen::Vector3d(inertia_xx, inertia_yy, inertia_zz);
  p.gravity = gravity;
  p.rotor_count = rotor_count;
  if (static_cast<int>(arm_azimuth_deg.size()) != rotor_count ||
      static_cast<int>(spin_direction.size()) != rotor_count)
    throw ConfigError("robot: arm_azimuth_deg and spin_direction must have rotor_count entries");
  p.rotor_pos.clear();
  p.arm_azimuth.clear();
  p.spin_dir.clear();
  for (int i = 0; i < rotor_count; ++i) {
    const double az = deg2rad(arm_azimuth_deg[i]);
    p.arm_azimuth.push_back(az);
    p.rotor_pos.emplace_back(arm_length * std::cos(az), arm_length * std::sin(az), 0.0);
    p.spin_dir.push_back(spin_direction[i]);
  }
  p.thrust_coeff = thrust_coeff;
  p.torque_ratio = torque_ratio;
  p.thrust_min = thrust_min;
  p.thrust_max = thrust_max;
  p.servo_min = deg2rad(servo_min_deg);
  p.servo_max = deg2rad(servo_max_deg);
  p.t_servo = t_servo;
  p.t_thrust = t_thrust;
  p.t_dead = t_dead;
  p.validate();
  return p;
}

void FullConfig::apply(Scenario& sc) const
{
  sc.robot = robot_params();

  sc.weights.q_pos_xy = q_pos_xy;
  sc.weights.q_pos_z = q_pos_z;
  sc.weights.q_vel_xy = q_vel_xy;
  sc.weights.q_vel_z = q_vel_z;
  sc.weights.q_att_xy = q_att_xy;
  sc.weights.q_att_z = q_att_z;
  sc.weights.q_rate_xy = q_rate_xy;
  sc.weights.q_rate_z = q_rate_z;
  sc.weights.q_servo = q_servo;
  sc.weights.r_thrust = r_thrust;
  sc.weights.r_servo_cmd = r_servo_cmd;
  sc.weights.terminal_scale = terminal_scale;

  sc.ocp.horizon = horizon;
  sc.ocp.t_integ = t_integ;
  sc.ocp.integ_substeps = integ_substeps;
  sc.ocp.v_limit = v_limit;
  sc.ocp.omega_limit = omega_limit;
  sc.ocp.soft_state_weight = soft_state_weight;
  sc.ocp.qp_tol = qp_tol;
  sc.ocp.qp_max_iter = qp_max_iter;

  sc.k_i_z = k_i_z;
  sc.f_d_limit = f_d_limit;

  sc.plant_dt = plant_dt;
  sc.control_dt = control_dt;
  sc.plant.thrust_model = thrust_model;
  sc.plant.dead_time = dead_time;
  sc.noise.enabled = noise;
  sc.noise.sigma_pos = sigma_pos;
  sc.noise.sigma_vel = sigma_vel;
  sc.noise.sigma_att = deg2rad(sigma_att_deg);
  sc.noise.sigma_rate = deg2rad(sigma_rate_deg);
  sc.noise.sigma_servo = deg2rad(sigma_servo_deg);

  if (duration > 0.0) sc.duration = duration;
  sc.z_force_bias = z_force_bias;
  if (dist_duration > 0.0) {
    DisturbanceEvent ev;
    ev.t_start = dist_time;
    ev.duration = dist_duration;
    ev.force_w = Eigen::Vector3d(dist_force_x, dist_force_y, dist_force_z);
    ev.torque_b = Eigen::Vector3d(dist_torque_x, dist_torque_y, dist_torque_z);
    sc.disturbances.push_back(ev);
  }
}

FullConfig parse_config_text(const std::string& text, const std::string& name)
{
  FullConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ParseCtx ctx{name + ":" + std::to_string(line_no)};
    std::string s = trim(line);
    if (const auto hash = s.find('#'); hash != std::string::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') ctx.fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (registry().find(section) == registry().end())
        ctx.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) ctx.fail("expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) ctx.fail("key '" + key + "' outside of any section");
    const auto& sec = registry().at(section);
    const auto it = sec.find(key);
    if (it == sec.end()) ctx.fail("unknown key '" + key + "' in [" + section + "]");
    it->second(cfg, value, ctx);
  }
  return cfg;
}

FullConfig parse_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const FullConfig& c)
{
  std::ostringstream out;
  out.precision(17);
  auto kv = [&out](const char* key, auto value) { out << key << " = " << value << "\n"; };
  auto kv_bool = [&out](const char* key, bool value) {
    out << key << " = " << (value ? "true" : "false") << "\n";
  };

  out << "[robot]\n";
  kv("mass", c.mass);
  kv("inertia_xx", c.inertia_xx);
  kv("inertia_yy", c.inertia_yy);
  kv("inertia_zz", c.inertia_zz);
  kv("gravity", c.gravity);
  kv("rotor_count", c.rotor_count);
  kv("arm_length", c.arm_length);
  out << "arm_azimuth_deg = ";
  for (size_t i = 0; i < c.arm_azimuth_deg.size(); ++i)
    out << (i ? ", " : "") << c.arm_azimuth_deg[i];
  out << "\nspin_direction = ";
  for (size_t i = 0; i < c.spin_direction.size(); ++i)
    out << (i ? ", " : "") << c.spin_direction[i];
  out << "\n";
  kv("thrust_coeff", c.thrust_coeff);
  kv("torque_ratio", c.torque_ratio);
  kv("thrust_min", c.thrust_min);
  kv("thrust_max", c.thrust_max);
  kv("servo_min_deg", c.servo_min_deg);
  kv("servo_max_deg", c.servo_max_deg);
  kv("t_servo", c.t_servo);
  kv("t_thrust", c.t_thrust);
  kv("t_dead", c.t_dead);

  out << "\n[nmpc]\n";
  kv("horizon", c.horizon);
  kv("t_integ", c.t_integ);
  kv("integ_substeps", c.integ_substeps);
  kv("q_pos_xy", c.q_pos_xy);
  kv("q_pos_z", c.q_pos_z);
  kv("q_vel_xy", c.q_vel_xy);
  kv("q_vel_z", c.q_vel_z);
  kv("q_att_xy", c.q_att_xy);
  kv("q_att_z", c.q_att_z);
  kv("q_rate_xy", c.q_rate_xy);
  kv("q_rate_z", c.q_rate_z);
  kv("q_servo", c.q_servo);
  kv("r_thrust", c.r_thrust);
  kv("r_servo_cmd", c.r_servo_cmd);
  kv("terminal_scale", c.terminal_scale);
  kv("v_limit", c.v_limit);
  kv("omega_limit", c.omega_limit);
  kv("soft_state_weight", c.soft_state_weight);
  kv("qp_tol", c.qp_tol);
  kv("qp_max_iter", c.qp_max_iter);
  kv("k_i_z", c.k_i_z);
  kv("f_d_limit", c.f_d_limit);

  out << "\n[sim]\n";
  kv("plant_dt", c.plant_dt);
  kv("control_dt", c.control_dt);
  kv_bool("thrust_model", c.thrust_model);
  kv_bool("dead_time", c.dead_time);
  kv_bool("noise", c.noise);
  kv("sigma_pos", c.sigma_pos);
  kv("sigma_vel", c.sigma_vel);
  kv("sigma_att_deg", c.sigma_att_deg);
  kv("sigma_rate_deg", c.sigma_rate_deg);
  kv("sigma_servo_deg", c.sigma_servo_deg);

  out << "\n[scenario]\n";
  kv("duration", c.duration);
  kv("traj_period", c.traj_period);
  kv("z_force_bias", c.z_force_bias);
  kv("dist_time", c.dist_time);
  kv("dist_duration", c.dist_duration);
  kv("dist_force_x", c.dist_force_x);
  kv("dist_force_y", c.dist_force_y);
  kv("dist_force_z", c.dist_force_z);
  kv("dist_torque_x", c.dist_torque_x);
  kv("dist_torque_y", c.dist_torque_y);
  kv("dist_torque_z", c.dist_torque_z);
  return out.str();
}

}  // namespace tiltctl
