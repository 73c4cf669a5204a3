// SPDX-License-Identifier: Apache-2.0

#include "drgd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace drgd {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'G', 'D'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_le(std::ofstream& f, T value) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::ifstream& f) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  if (!f.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(buf[i]) << (8 * i);
  }
  return value;
}

void write_f64(std::ofstream& f, double v) {
  write_le(f, std::bit_cast<std::uint64_t>(v));
}

double read_f64(std::ifstream& f) {
  return std::bit_cast<double>(read_le<std::uint64_t>(f));
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw std::runtime_error("checkpoint: cannot write " + path);
  }
  f.write(kMagic, 4);
  write_le(f, kVersion);
  const ModelConfig& c = params.config;
  write_le(f, static_cast<std::uint64_t>(c.embed_dim));
  write_le(f, static_cast<std::uint64_t>(c.hidden_dim));
  write_le(f, static_cast<std::uint64_t>(c.latent_dim));
  write_le(f, static_cast<std::uint64_t>(c.source_vocab));
  write_le(f, static_cast<std::uint64_t>(c.target_vocab));
  write_le(f, static_cast<std::uint64_t>(c.max_src_len));
  write_le(f, static_cast<std::uint64_t>(c.max_tgt_len));
  write_le(f, static_cast<std::uint8_t>(c.mode == DecoderMode::kDrgd ? 0 : 1));

  std::vector<nn::Param*> census = params.census();
  write_le(f, static_cast<std::uint64_t>(census.size()));
  for (nn::Param* p : census) {
    write_le(f, static_cast<std::uint32_t>(p->name.size()));
    f.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    const ad::Mat& m = p->value();
    write_le(f, static_cast<std::uint64_t>(m.rows()));
    write_le(f, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c2 = 0; c2 < m.cols(); ++c2) {
        write_f64(f, m(r, c2));
      }
    }
  }
  if (!f) {
    throw std::runtime_error("checkpoint: write to " + path + " failed");
  }
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("checkpoint: cannot read " + path);
  }
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad checkpoint header: " + path);
  }
  const std::uint32_t version = read_le<std::uint32_t>(f);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  ModelConfig config;
  config.embed_dim = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
  config.hidden_dim = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
  config.latent_dim = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
  config.source_vocab = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
  config.target_vocab = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
  config.max_src_len = static_cast<std::size_t>(read_le<std::uint64_t>(f));
  config.max_tgt_len = static_cast<std::size_t>(read_le<std::uint64_t>(f));
  const std::uint8_t mode = read_le<std::uint8_t>(f);
  if (mode > 1) {
    throw std::runtime_error("checkpoint: unknown decoder mode byte");
  }
  config.mode = mode == 0 ? DecoderMode::kDrgd : DecoderMode::kStand;

  ModelParams params(config, /*seed=*/0);
  std::vector<nn::Param*> census = params.census();
  const std::uint64_t count = read_le<std::uint64_t>(f);
  if (count != census.size()) {
    throw std::runtime_error(
        "checkpoint: expected " + std::to_string(census.size()) +
        " parameters for this config, file holds " + std::to_string(count));
  }
  for (nn::Param* p : census) {
    const std::uint32_t name_len = read_le<std::uint32_t>(f);
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len)) {
      throw std::runtime_error("checkpoint: truncated file");
    }
    if (name != p->name) {
      throw std::runtime_error("checkpoint: parameter '" + name +
                               "' does not match expected '" + p->name + "'");
    }
    const auto rows = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
    const auto cols = static_cast<Eigen::Index>(read_le<std::uint64_t>(f));
    if (rows != p->value().rows() || cols != p->value().cols()) {
      throw std::runtime_error(
          "checkpoint: parameter '" + name + "' has shape " +
          std::to_string(rows) + "x" + std::to_string(cols) +
          " in the file but the config implies " +
          std::to_string(p->value().rows()) + "x" +
          std::to_string(p->value().cols()));
    }
    ad::Mat& m = p->value();
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c2 = 0; c2 < cols; ++c2) {
        m(r, c2) = read_f64(f);
      }
    }
  }
  return params;
}

}  // namespace drgd
