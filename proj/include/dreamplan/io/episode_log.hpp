#ifndef DREAMPLAN_IO_EPISODE_LOG_HPP_
#define DREAMPLAN_IO_EPISODE_LOG_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

namespace dreamplan::io {

// Per-step episode CSV, schema dreamplan/episode/1. The file starts with
// `# schema=...` followed by `# key=value` metadata lines (joint count and
// the limits plots draw), then a header row and one row per control step.
// Numbers round-trip exactly (shortest lossless formatting).
constexpr const char* kEpisodeSchema = "dreamplan/episode/1";

struct EpisodeRow {
  int step = 0;
  std::string mode;  // "policy" or "planner"
  double roll = 0.0;
  double pitch = 0.0;
  std::vector<double> joint_pos;  // q - q_nominal, size joint_count
  Eigen::Vector3d target = Eigen::Vector3d::Zero();     // commanded twist
  Eigen::Vector3d optimized = Eigen::Vector3d::Zero();  // executed twist
  Eigen::Vector3d twist = Eigen::Vector3d::Zero();      // realized twist
  double reward = 0.0;
  bool joint_exceed = false;  // any joint past its soft limit this step
  bool feasible = true;       // planner found a feasible plan (policy: true)
};

struct EpisodeLog {
  int joint_count = 0;
  Eigen::VectorXd q_soft_limit;  // size joint_count
  double roll_limit = 0.0;
  double pitch_limit = 0.0;
  std::vector<EpisodeRow> rows;
};

// Throws IoError when the path cannot be written or the rows disagree with
// the metadata's joint count.
void write_episode_csv(const std::string& path, const EpisodeLog& log);

// Throws IoError on missing files, wrong schema lines, or malformed rows.
EpisodeLog read_episode_csv(const std::string& path);

}  // namespace dreamplan::io

#endif  // DREAMPLAN_IO_EPISODE_LOG_HPP_
