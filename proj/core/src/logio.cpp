#include "tiltctl/logio.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace tiltctl {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void write_run_csv(const std::string& path, const RunLog& log)
{
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "w"));
  if (!f) throw std::runtime_error("write_run_csv: cannot open " + path);

  std::fputs(
      "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,"
      "alpha1,alpha2,alpha3,alpha4,thrust1,thrust2,thrust3,thrust4,"
      "fc1,fc2,fc3,fc4,ac1,ac2,ac3,ac4,"
      "ref_px,ref_py,ref_pz,ref_qw,ref_qx,ref_qy,ref_qz,f_dz,"
      "solve_time_ms,qp_iters,kkt_residual,cost\n",
      f.get());

  auto put = [&f](double v) { std::fprintf(f.get(), ",%.12g", v); };
  for (const auto& r : log.records) {
    std::fprintf(f.get(), "%.12g", r.t);
    for (int i = 0; i < 3; ++i) put(r.x.pos[i]);
    for (int i = 0; i < 3; ++i) put(r.x.vel[i]);
    for (int i = 0; i < 4; ++i) put(r.x.quat[i]);
    for (int i = 0; i < 3; ++i) put(r.x.rate[i]);
    for (int i = 0; i < 4; ++i) put(i < r.x.servo.size() ? r.x.servo[i] : 0.0);
    for (int i = 0; i < 4; ++i) put(i < r.thrust.size() ? r.thrust[i] : 0.0);
    for (int i = 0; i < 4; ++i) put(i < r.applied.thrust_cmd.size() ? r.applied.thrust_cmd[i] : 0.0);
    for (int i = 0; i < 4; ++i) put(i < r.applied.servo_cmd.size() ? r.applied.servo_cmd[i] : 0.0);
    for (int i = 0; i < 3; ++i) put(r.ref.pos[i]);
    for (int i = 0; i < 4; ++i) put(r.ref.quat[i]);
    put(r.f_dz);
    put(r.stats.solve_time_ms);
    std::fprintf(f.get(), ",%d", r.stats.qp_iters);
    put(r.stats.kkt_residual);
    put(r.stats.cost);
    std::fputc('\n', f.get());
  }
}

std::string metrics_json(const RunSummary& s)
{
  nlohmann::json j;
  auto num_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j["rmse_pos_x_m"] = num_or_null(s.rmse_pos[0]);
  j["rmse_pos_y_m"] = num_or_null(s.rmse_pos[1]);
  j["rmse_pos_z_m"] = num_or_null(s.rmse_pos[2]);
  j["rmse_att_roll_deg"] = num_or_null(s.rmse_att_deg[0]);
  j["rmse_att_pitch_deg"] = num_or_null(s.rmse_att_deg[1]);
  j["rmse_att_yaw_deg"] = num_or_null(s.rmse_att_deg[2]);
  j["overshoot_z_pct"] = num_or_null(s.overshoot_z_pct);
  j["settle_s"] = num_or_null(s.settle_s);
  j["cmd_total_variation"] = num_or_null(s.tv_total_cmd);
  j["tv_servo_cmd"] = num_or_null(s.tv_servo_cmd);
  j["tv_thrust_cmd"] = num_or_null(s.tv_thrust_cmd);
  j["solve_time_ms_p50"] = num_or_null(s.solve_ms_p50);
  j["solve_time_ms_p99"] = num_or_null(s.solve_ms_p99);
  j["status"] = run_status_name(s.status);
  return j.dump(2) + "\n";
}

void write_metrics_json(const std::string& path, const RunSummary& summary)
{
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "w"));
  if (!f) throw std::runtime_error("write_metrics_json: cannot open " + path);
  const std::string body = metrics_json(summary);
  std::fwrite(body.data(), 1, body.size(), f.get());
}

}  // namespace tiltctl
