#include "dreamplan/io/episode_log.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dreamplan/error.hpp"

namespace dreamplan::io {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw IoError("malformed number '" + s + "' in " + path);
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_episode_csv(const std::string& path, const EpisodeLog& log) {
  const int k = log.joint_count;
  if (k <= 0 || log.q_soft_limit.size() != k) {
    throw IoError("episode log metadata is inconsistent: " + path);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);

  f << "# schema=" << kEpisodeSchema << "\n";
  f << "# joints=" << k << "\n";
  f << "# q_soft_limit=";
  for (int i = 0; i < k; ++i) f << (i ? "," : "") << fmt(log.q_soft_limit(i));
  f << "\n";
  f << "# roll_limit=" << fmt(log.roll_limit) << "\n";
  f << "# pitch_limit=" << fmt(log.pitch_limit) << "\n";

  f << "step,mode,roll,pitch";
  for (int i = 0; i < k; ++i) f << ",q" << i;
  f << ",target_vx,target_vy,target_wz,opt_vx,opt_vy,opt_wz"
    << ",twist_vx,twist_vy,twist_wz,reward,joint_exceed,feasible\n";

  for (const EpisodeRow& r : log.rows) {
    if (static_cast<int>(r.joint_pos.size()) != k) {
      throw IoError("episode row joint count mismatch: " + path);
    }
    f << r.step << ',' << r.mode << ',' << fmt(r.roll) << ',' << fmt(r.pitch);
    for (int i = 0; i < k; ++i) f << ',' << fmt(r.joint_pos[i]);
    for (int i = 0; i < 3; ++i) f << ',' << fmt(r.target(i));
    for (int i = 0; i < 3; ++i) f << ',' << fmt(r.optimized(i));
    for (int i = 0; i < 3; ++i) f << ',' << fmt(r.twist(i));
    f << ',' << fmt(r.reward) << ',' << (r.joint_exceed ? 1 : 0) << ','
      << (r.feasible ? 1 : 0) << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

EpisodeLog read_episode_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(f, line) ||
      line != std::string("# schema=") + kEpisodeSchema) {
    throw IoError("missing or wrong schema line: " + path);
  }

  EpisodeLog log;
  // Metadata lines until the header row.
  while (std::getline(f, line) && !line.empty() && line[0] == '#') {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("bad metadata line: " + path);
    const std::string key = line.substr(2, eq - 2);
    const std::string value = line.substr(eq + 1);
    if (key == "joints") {
      log.joint_count = static_cast<int>(parse_double(value, path));
    } else if (key == "q_soft_limit") {
      const auto parts = split(value, ',');
      log.q_soft_limit.resize(static_cast<Eigen::Index>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i) {
        log.q_soft_limit(static_cast<Eigen::Index>(i)) =
            parse_double(parts[i], path);
      }
    } else if (key == "roll_limit") {
      log.roll_limit = parse_double(value, path);
    } else if (key == "pitch_limit") {
      log.pitch_limit = parse_double(value, path);
    }  // unknown keys are forward-compatible and skipped
  }
  const int k = log.joint_count;
  if (k <= 0 || log.q_soft_limit.size() != k) {
    throw IoError("episode metadata missing or inconsistent: " + path);
  }

  // `line` now holds the header row.
  const int expected_fields = 4 + k + 9 + 3;
  if (static_cast<int>(split(line, ',').size()) != expected_fields) {
    throw IoError("unexpected episode header: " + path);
  }

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (static_cast<int>(fields.size()) != expected_fields) {
      throw IoError("bad episode row in " + path);
    }
    EpisodeRow r;
    int c = 0;
    r.step = static_cast<int>(parse_double(fields[c++], path));
    r.mode = fields[c++];
    r.roll = parse_double(fields[c++], path);
    r.pitch = parse_double(fields[c++], path);
    r.joint_pos.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      r.joint_pos[static_cast<std::size_t>(i)] = parse_double(fields[c++], path);
    }
    for (int i = 0; i < 3; ++i) r.target(i) = parse_double(fields[c++], path);
    for (int i = 0; i < 3; ++i) {
      r.optimized(i) = parse_double(fields[c++], path);
    }
    for (int i = 0; i < 3; ++i) r.twist(i) = parse_double(fields[c++], path);
    r.reward = parse_double(fields[c++], path);
    r.joint_exceed = parse_double(fields[c++], path) != 0.0;
    r.feasible = parse_double(fields[c++], path) != 0.0;
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace dreamplan::io
