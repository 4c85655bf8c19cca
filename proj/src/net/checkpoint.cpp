#include "dreamplan/net/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dreamplan/error.hpp"

namespace dreamplan::net {

namespace {

constexpr char kMagic[8] = {'D', 'P', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double d) {
  auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++]))
           << (8 * i);
    }
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++]))
              << (8 * i);
    }
    return std::bit_cast<double>(bits);
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw IoError("truncated checkpoint: " + path_);
    }
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(const std::string& name, MlpParams params) {
  CheckpointEntry entry;
  entry.kind = CheckpointEntry::Kind::kMlp;
  entry.mlp = std::move(params);
  entries.emplace_back(name, std::move(entry));
}

void Checkpoint::add(const std::string& name, Vec values) {
  CheckpointEntry entry;
  entry.kind = CheckpointEntry::Kind::kVector;
  entry.vector = std::move(values);
  entries.emplace_back(name, std::move(entry));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, e] : entries) {
    if (n == name) return true;
  }
  return false;
}

const MlpParams& Checkpoint::mlp(const std::string& name) const {
  for (const auto& [n, e] : entries) {
    if (n == name && e.kind == CheckpointEntry::Kind::kMlp) return e.mlp;
  }
  throw IoError("checkpoint has no mlp entry named " + name);
}

const Vec& Checkpoint::vector(const std::string& name) const {
  for (const auto& [n, e] : entries) {
    if (n == name && e.kind == CheckpointEntry::Kind::kVector) return e.vector;
  }
  throw IoError("checkpoint has no vector entry named " + name);
}

std::string checkpoint_sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".json");
  return p.string();
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.entries.size()));

  for (const auto& [name, entry] : checkpoint.entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    if (entry.kind == CheckpointEntry::Kind::kMlp) {
      entry.mlp.validate();
      out.push_back(0);
      out.push_back(entry.mlp.activation == Activation::kTanh ? 0 : 1);
      put_u32(out, static_cast<std::uint32_t>(entry.mlp.layers.size()));
      for (const Layer& layer : entry.mlp.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.W.cols()));
        put_u32(out, static_cast<std::uint32_t>(layer.W.rows()));
      }
      for (const Layer& layer : entry.mlp.layers) {
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.W.cols(); ++c) {
            put_f64(out, layer.W(r, c));
          }
        }
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) {
          put_f64(out, layer.b(i));
        }
      }
    } else {
      out.push_back(1);
      put_u32(out, static_cast<std::uint32_t>(entry.vector.size()));
      for (Eigen::Index i = 0; i < entry.vector.size(); ++i) {
        put_f64(out, entry.vector(i));
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open checkpoint for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing checkpoint: " + path);
  file.close();

  std::ofstream side(checkpoint_sidecar_path(path), std::ios::trunc);
  if (!side) {
    throw IoError("cannot open checkpoint sidecar for writing: " +
                  checkpoint_sidecar_path(path));
  }
  side << checkpoint.meta.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());

  Reader reader(data, path);
  std::string magic = reader.bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("bad checkpoint magic: " + path);
  }
  std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) +
                  ": " + path);
  }

  Checkpoint checkpoint;
  std::uint32_t count = reader.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    std::uint32_t name_len = reader.u32();
    std::string name = reader.bytes(name_len);
    std::uint8_t kind = reader.u8();
    if (kind == 0) {
      MlpParams params;
      std::uint8_t act = reader.u8();
      if (act > 1) throw IoError("bad activation tag in checkpoint: " + path);
      params.activation = act == 0 ? Activation::kTanh : Activation::kElu;
      std::uint32_t layer_count = reader.u32();
      std::vector<std::pair<std::uint32_t, std::uint32_t>> dims(layer_count);
      for (auto& [in, out_dim] : dims) {
        in = reader.u32();
        out_dim = reader.u32();
      }
      params.layers.resize(layer_count);
      for (std::uint32_t i = 0; i < layer_count; ++i) {
        auto [in, out_dim] = dims[i];
        Layer& layer = params.layers[i];
        layer.W.resize(out_dim, in);
        for (std::uint32_t r = 0; r < out_dim; ++r) {
          for (std::uint32_t c = 0; c < in; ++c) {
            layer.W(r, c) = reader.f64();
          }
        }
        layer.b.resize(out_dim);
        for (std::uint32_t r = 0; r < out_dim; ++r) {
          layer.b(r) = reader.f64();
        }
      }
      params.validate();
      checkpoint.add(name, std::move(params));
    } else if (kind == 1) {
      std::uint32_t len = reader.u32();
      Vec values(len);
      for (std::uint32_t i = 0; i < len; ++i) {
        values(i) = reader.f64();
      }
      checkpoint.add(name, std::move(values));
    } else {
      throw IoError("bad entry kind in checkpoint: " + path);
    }
  }
  if (!reader.exhausted()) {
    throw IoError("trailing bytes in checkpoint: " + path);
  }

  std::ifstream side(checkpoint_sidecar_path(path));
  if (side) {
    try {
      side >> checkpoint.meta;
    } catch (const nlohmann::json::exception&) {
      throw IoError("malformed checkpoint sidecar: " +
                    checkpoint_sidecar_path(path));
    }
  }
  return checkpoint;
}

}  // namespace dreamplan::net
