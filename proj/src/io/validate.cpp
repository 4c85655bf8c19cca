#include "dreamplan/io/validate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "dreamplan/error.hpp"
#include "dreamplan/io/episode_log.hpp"
#include "dreamplan/io/svg.hpp"
#include "dreamplan/net/checkpoint.hpp"

namespace dreamplan::io {

namespace {

namespace fs = std::filesystem;

std::string json_schema(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
    return "";
  }
  const std::string s = j["schema"].get<std::string>();
  return s.rfind("dreamplan/", 0) == 0 ? s : "";
}

FileCheck check_file(const fs::path& p) {
  FileCheck c;
  c.path = p.string();
  const std::string ext = p.extension().string();
  try {
    if (ext == ".csv") {
      std::ifstream f(p);
      std::string first;
      std::getline(f, first);
      const std::string prefix = "# schema=dreamplan/";
      if (first.rfind(prefix, 0) != 0) {
        c.detail = "missing schema line";
        return c;
      }
      c.schema = first.substr(2 + std::string("schema=").size());
      if (c.schema == kEpisodeSchema) {
        read_episode_csv(p.string());  // full parse
      }
      c.ok = true;
    } else if (ext == ".json") {
      std::ifstream f(p);
      nlohmann::json j = nlohmann::json::parse(f);
      c.schema = json_schema(j);
      if (c.schema.empty()) {
        c.detail = "no dreamplan schema field";
        return c;
      }
      c.ok = true;
    } else if (ext == ".jsonl") {
      std::ifstream f(p);
      std::string line;
      int n = 0;
      while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string s = json_schema(j);
        if (s.empty()) {
          c.detail = "line " + std::to_string(n + 1) + " has no schema";
          return c;
        }
        if (n == 0) c.schema = s;
        ++n;
      }
      // Zero records is valid output (a run with zero iterations).
      if (n == 0) c.schema = "(empty)";
      c.ok = true;
    } else if (ext == ".svg") {
      std::ifstream f(p);
      std::string head(256, '\0');
      f.read(head.data(), static_cast<std::streamsize>(head.size()));
      const std::string marker = std::string("schema=") + kPlotSchema;
      if (head.find(marker) == std::string::npos) {
        c.detail = "missing plot schema marker";
        return c;
      }
      c.schema = kPlotSchema;
      c.ok = true;
    } else if (ext == ".bin") {
      net::Checkpoint ckpt = net::load_checkpoint(p.string());
      c.schema = ckpt.meta.value("schema", "");
      if (c.schema.rfind("dreamplan/", 0) != 0) {
        c.detail = "checkpoint metadata has no schema";
        return c;
      }
      c.ok = true;
    } else {
      c.schema = "(skipped)";
      c.ok = true;
    }
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = e.what();
  }
  return c;
}

}  // namespace

std::vector<FileCheck> validate_log_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("not a directory: " + dir);
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<FileCheck> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(check_file(p));
  return out;
}

}  // namespace dreamplan::io
