#include "dreamplan/env/config.hpp"

#include "dreamplan/error.hpp"
#include "dreamplan/rng.hpp"

namespace dreamplan::env {

const char* noise_level_name(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kOff:
      return "off";
    case NoiseLevel::kLow:
      return "low";
    case NoiseLevel::kMedium:
      return "medium";
    case NoiseLevel::kHigh:
      return "high";
  }
  return "off";
}

NoiseLevel noise_level_from_name(const std::string& name) {
  if (name == "off") return NoiseLevel::kOff;
  if (name == "low") return NoiseLevel::kLow;
  if (name == "medium") return NoiseLevel::kMedium;
  if (name == "high") return NoiseLevel::kHigh;
  throw ValueError("unknown noise level: " + name);
}

double noise_level_sigma(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kOff:
      return 0.0;
    case NoiseLevel::kLow:
      return 0.005;
    case NoiseLevel::kMedium:
      return 0.01;
    case NoiseLevel::kHigh:
      return 0.05;
  }
  return 0.0;
}

NoiseScales observation_noise_scales() { return NoiseScales{}; }

void EnvConfig::validate() const {
  if (joint_count <= 0) throw ShapeError("joint_count must be positive");
  if (dt <= 0.0) throw ValueError("dt must be positive");
  if (q_nominal.size() != joint_count) {
    throw ShapeError("q_nominal length does not match joint_count");
  }
  if (q_soft_limit.size() != joint_count) {
    throw ShapeError("q_soft_limit length does not match joint_count");
  }
  if ((q_soft_limit.array() <= 0.0).any()) {
    throw ValueError("q_soft_limit entries must be positive");
  }
  if (twist_from_q.rows() != 3 || twist_from_q.cols() != joint_count ||
      twist_from_qd.rows() != 3 || twist_from_qd.cols() != joint_count) {
    throw ShapeError("twist coupling matrices must be 3 x joint_count");
  }
  if (tilt_from_qd.rows() != 2 || tilt_from_qd.cols() != joint_count) {
    throw ShapeError("tilt coupling matrix must be 2 x joint_count");
  }
  if (kp <= 0.0 || kd < 0.0 || base_damping <= 0.0 || tilt_stiffness <= 0.0 ||
      tilt_damping < 0.0) {
    throw ValueError("dynamics gains must be positive");
  }
  if (action_bound <= 0.0) throw ValueError("action_bound must be positive");
  if (fall_threshold <= 0.0) throw ValueError("fall_threshold must be positive");
  if (max_steps <= 0) throw ValueError("max_steps must be positive");
  if ((command_limit.array() <= 0.0).any()) {
    throw ValueError("command_limit entries must be positive");
  }
  if (reward.barrier_delta <= 0.0) {
    throw ValueError("barrier_delta must be positive");
  }
  if (reward.sigma_lin <= 0.0 || reward.sigma_ang <= 0.0) {
    throw ValueError("tracking kernel widths must be positive");
  }
}

namespace {

// Rows drawn uniformly on [-1, 1), normalized, then scaled; fixed draw order
// keeps a given seed reproducible.
Mat seeded_coupling(Rng& rng, int rows, int cols, double row_gain) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = rng.uniform(-1.0, 1.0);
    }
    double norm = m.row(r).norm();
    if (norm > 1e-12) m.row(r) *= row_gain / norm;
  }
  return m;
}

}  // namespace

EnvConfig EnvConfig::make_default(int joint_count, std::uint64_t coupling_seed) {
  EnvConfig config;
  config.joint_count = joint_count;
  config.q_nominal = Vec::Zero(joint_count);
  config.q_soft_limit = Vec::Ones(joint_count);

  Rng rng(coupling_seed);
  config.twist_from_q = seeded_coupling(rng, 3, joint_count, 1.0);
  config.twist_from_qd = seeded_coupling(rng, 3, joint_count, 0.1);
  config.tilt_from_qd = seeded_coupling(rng, 2, joint_count, 0.3);

  config.validate();
  return config;
}

namespace {

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ValueError("expected matrix rows");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValueError("ragged matrix rows in config");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

Vec vector_from_json(const nlohmann::json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

nlohmann::json vector_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

void to_json(nlohmann::json& j, const RewardParams& p) {
  j = nlohmann::json{{"w_track_lin", p.w_track_lin},
                     {"w_track_ang", p.w_track_ang},
                     {"w_orientation", p.w_orientation},
                     {"w_action_rate", p.w_action_rate},
                     {"w_joint_vel", p.w_joint_vel},
                     {"w_barrier", p.w_barrier},
                     {"sigma_lin", p.sigma_lin},
                     {"sigma_ang", p.sigma_ang},
                     {"barrier_delta", p.barrier_delta}};
}

void from_json(const nlohmann::json& j, RewardParams& p) {
  j.at("w_track_lin").get_to(p.w_track_lin);
  j.at("w_track_ang").get_to(p.w_track_ang);
  j.at("w_orientation").get_to(p.w_orientation);
  j.at("w_action_rate").get_to(p.w_action_rate);
  j.at("w_joint_vel").get_to(p.w_joint_vel);
  j.at("w_barrier").get_to(p.w_barrier);
  j.at("sigma_lin").get_to(p.sigma_lin);
  j.at("sigma_ang").get_to(p.sigma_ang);
  j.at("barrier_delta").get_to(p.barrier_delta);
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{
      {"joint_count", c.joint_count},
      {"dt", c.dt},
      {"q_nominal", vector_to_json(c.q_nominal)},
      {"kp", c.kp},
      {"kd", c.kd},
      {"q_soft_limit", vector_to_json(c.q_soft_limit)},
      {"twist_from_q", matrix_to_json(c.twist_from_q)},
      {"twist_from_qd", matrix_to_json(c.twist_from_qd)},
      {"base_damping", c.base_damping},
      {"tilt_from_qd", matrix_to_json(c.tilt_from_qd)},
      {"tilt_stiffness", c.tilt_stiffness},
      {"tilt_damping", c.tilt_damping},
      {"action_bound", c.action_bound},
      {"fall_threshold", c.fall_threshold},
      {"max_steps", c.max_steps},
      {"reset_joint_noise", c.reset_joint_noise},
      {"command_limit",
       nlohmann::json::array(
           {c.command_limit.x(), c.command_limit.y(), c.command_limit.z()})},
      {"noise_level", noise_level_name(c.noise_level)},
      {"reward", c.reward}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  j.at("joint_count").get_to(c.joint_count);
  j.at("dt").get_to(c.dt);
  c.q_nominal = vector_from_json(j.at("q_nominal"));
  j.at("kp").get_to(c.kp);
  j.at("kd").get_to(c.kd);
  c.q_soft_limit = vector_from_json(j.at("q_soft_limit"));
  c.twist_from_q = matrix_from_json(j.at("twist_from_q"));
  c.twist_from_qd = matrix_from_json(j.at("twist_from_qd"));
  j.at("base_damping").get_to(c.base_damping);
  c.tilt_from_qd = matrix_from_json(j.at("tilt_from_qd"));
  j.at("tilt_stiffness").get_to(c.tilt_stiffness);
  j.at("tilt_damping").get_to(c.tilt_damping);
  j.at("action_bound").get_to(c.action_bound);
  j.at("fall_threshold").get_to(c.fall_threshold);
  j.at("max_steps").get_to(c.max_steps);
  j.at("reset_joint_noise").get_to(c.reset_joint_noise);
  const auto& cl = j.at("command_limit");
  c.command_limit = Eigen::Vector3d(cl.at(0).get<double>(),
                                    cl.at(1).get<double>(),
                                    cl.at(2).get<double>());
  c.noise_level = noise_level_from_name(j.at("noise_level").get<std::string>());
  j.at("reward").get_to(c.reward);
  c.validate();
}

}  // namespace dreamplan::env
