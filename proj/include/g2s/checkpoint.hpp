#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2s/config.hpp"
#include "g2s/errors.hpp"
#include "g2s/model.hpp"
#include "g2s/params.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

struct Checkpoint {
  TrainConfig config;
  Vocabulary vocab;
  ParamSet params;
  std::size_t epoch = 0;
  double best_dev_metric = 0.0;
  std::size_t max_decode_len = 0;  // 0 means "derive from the evaluated set"

  Model model() const { return Model(config.model_config(), vocab, params); }
};

// File layout (integers little-endian):
//   "G2SCKPT\n" | u32 version | u64 payload length | payload | u64 FNV-1a(payload)
// payload = u64 header length | JSON header | float64 arrays in header order
// (value, then Adam first and second moments, per parameter).
inline constexpr std::string_view kCheckpointMagic = "G2SCKPT\n";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_uint(std::string_view bytes, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  return v;
}

inline void put_doubles(std::string& out, const std::vector<double>& xs) {
  for (double x : xs) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  nlohmann::json header;
  header["config"] = ck.config;
  header["vocab"] = ck.vocab.tokens();
  header["epoch"] = ck.epoch;
  header["best_dev_metric"] = ck.best_dev_metric;
  header["max_decode_len"] = ck.max_decode_len;
  header["adam_step"] = ck.params.step();
  nlohmann::json plist = nlohmann::json::array();
  std::string arrays;
  for (const auto& e : ck.params.entries()) {
    plist.push_back({{"name", e.name}, {"shape", e.value.shape}});
    detail::put_doubles(arrays, e.value.data);
    detail::put_doubles(arrays, e.m);
    detail::put_doubles(arrays, e.v);
  }
  header["params"] = plist;
  const std::string h = header.dump();
  std::string payload;
  detail::put_u64(payload, h.size());
  payload += h;
  payload += arrays;

  std::string out(kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, payload.size());
  out += payload;
  detail::put_u64(out, detail::fnv1a(payload));
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  const std::size_t prefix = kCheckpointMagic.size() + 4 + 8;
  if (bytes.size() < prefix || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw IntegrityError("not a checkpoint file (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(detail::get_uint(bytes, kCheckpointMagic.size(), 4));
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t len = detail::get_uint(bytes, kCheckpointMagic.size() + 4, 8);
  if (bytes.size() != prefix + len + 8) throw IntegrityError("checkpoint is truncated or has trailing bytes");
  const std::string_view payload = bytes.substr(prefix, len);
  if (detail::fnv1a(payload) != detail::get_uint(bytes, prefix + len, 8)) {
    throw IntegrityError("checkpoint checksum mismatch");
  }
  try {
    if (payload.size() < 8) throw IntegrityError("checkpoint payload too short");
    const std::uint64_t hlen = detail::get_uint(payload, 0, 8);
    if (hlen > payload.size() - 8) throw IntegrityError("checkpoint header overruns payload");
    const auto header = nlohmann::json::parse(payload.substr(8, hlen));
    Checkpoint ck{header.at("config").get<TrainConfig>(),
                  Vocabulary::from_ordered(header.at("vocab").get<std::vector<std::string>>()),
                  {},
                  header.at("epoch").get<std::size_t>(),
                  header.at("best_dev_metric").get<double>(),
                  header.at("max_decode_len").get<std::size_t>()};
    std::size_t pos = 8 + hlen;
    auto read_doubles = [&](std::size_t n) {
      if ((payload.size() - pos) / 8 < n) throw IntegrityError("checkpoint arrays overrun payload");
      std::vector<double> xs(n);
      for (std::size_t i = 0; i < n; ++i, pos += 8) xs[i] = std::bit_cast<double>(detail::get_uint(payload, pos, 8));
      return xs;
    };
    for (const auto& p : header.at("params")) {
      Shape shape = p.at("shape").get<Shape>();
      const std::size_t n = shape_numel(shape);
      ck.params.add(p.at("name").get<std::string>(), Tensor(shape, read_doubles(n)));
      auto& e = ck.params.entries().back();
      e.m = read_doubles(n);
      e.v = read_doubles(n);
    }
    if (pos != payload.size()) throw IntegrityError("checkpoint has unread array data");
    ck.params.set_step(header.at("adam_step").get<std::size_t>());
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed checkpoint header: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open for writing: " + path);
  const std::string bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArgumentError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open checkpoint: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace g2s
