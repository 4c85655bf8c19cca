#ifndef DREAMPLAN_NET_CHECKPOINT_HPP_
#define DREAMPLAN_NET_CHECKPOINT_HPP_

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "dreamplan/net/mlp.hpp"

namespace dreamplan::net {

// Binary checkpoint container. Layout (all integers little-endian):
//
//   magic   8 bytes  "DPCKPT01"
//   version u32      currently 1
//   count   u32      number of named entries
//   entry*:
//     name_len u32, name bytes
//     kind     u8   0 = mlp, 1 = raw vector
//     mlp:  activation u8 (0 tanh, 1 elu), layer_count u32,
//           per layer: in u32, out u32,
//           then per layer: W as row-major float64, b as float64
//     vec:  length u32, float64 payload
//
// Doubles are serialized via their IEEE-754 bit pattern, so save/load
// round-trips are exact to the bit. A JSON sidecar (same path with a .json
// extension) carries free-form architecture metadata.
struct CheckpointEntry {
  enum class Kind { kMlp, kVector };
  Kind kind = Kind::kMlp;
  MlpParams mlp;
  Vec vector;
};

struct Checkpoint {
  // Insertion-ordered so serialization is deterministic.
  std::vector<std::pair<std::string, CheckpointEntry>> entries;
  nlohmann::json meta;

  void add(const std::string& name, MlpParams params);
  void add(const std::string& name, Vec values);
  bool has(const std::string& name) const;
  const MlpParams& mlp(const std::string& name) const;
  const Vec& vector(const std::string& name) const;
};

// Writes the binary file at `path` and the metadata sidecar next to it.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

// Loads the binary file; the sidecar is optional (meta stays empty if the
// sidecar is missing). Throws IoError on malformed input.
Checkpoint load_checkpoint(const std::string& path);

// Path of the JSON sidecar belonging to a checkpoint file.
std::string checkpoint_sidecar_path(const std::string& path);

}  // namespace dreamplan::net

#endif  // DREAMPLAN_NET_CHECKPOINT_HPP_
