#ifndef DREAMPLAN_IO_VALIDATE_HPP_
#define DREAMPLAN_IO_VALIDATE_HPP_

#include <string>
#include <vector>

namespace dreamplan::io {

struct FileCheck {
  std::string path;
  std::string schema;  // detected schema id, or "(skipped)"
  bool ok = false;
  std::string detail;  // failure reason when !ok
};

// Walks a directory tree and checks every emitted artifact for a valid,
// recognized schema: CSV logs, JSON/JSONL metrics and summaries, SVG plots,
// and binary checkpoints. Episode CSVs are fully parsed. Files with other
// extensions are reported as skipped. Throws IoError when the directory
// does not exist.
std::vector<FileCheck> validate_log_dir(const std::string& dir);

}  // namespace dreamplan::io

#endif  // DREAMPLAN_IO_VALIDATE_HPP_
