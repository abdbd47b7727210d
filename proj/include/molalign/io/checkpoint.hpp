#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "molalign/nn/tensor.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::io {

// Single-file parameter archive: 8-byte magic, 8-byte little-endian manifest
// length, manifest JSON, then one contiguous float32 little-endian payload.
// The manifest is validated before any payload byte is interpreted, and
// save(load(x)) reproduces x byte for byte.
inline constexpr char kCheckpointMagic[9] = "MOLALNCK";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  std::string config_digest;
  std::map<std::string, nn::Tensor> tensors;
};

namespace detail {

inline void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline std::uint64_t get_u64(const std::string &bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

inline void put_f32(std::string &out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i)
    out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

inline float get_f32(const std::string &bytes, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

} // namespace detail

inline void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  nlohmann::json manifest;
  manifest["format_version"] = ckpt.format_version;
  manifest["config_digest"] = ckpt.config_digest;
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  std::uint64_t offset = 0;
  for (const auto &[name, tensor] : ckpt.tensors) { // map order keeps names sorted
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape;
    std::uint64_t bytes = static_cast<std::uint64_t>(tensor.data.size()) * 4;
    entry["offset"] = offset;
    entry["bytes"] = bytes;
    tensors.push_back(entry);
    for (double v : tensor.data) {
      float f = static_cast<float>(v);
      if (!std::isfinite(f))
        throw NumericError("tensor '" + name + "' does not fit float32 in checkpoint " + path);
      detail::put_f32(payload, f);
    }
    offset += bytes;
  }
  manifest["tensors"] = tensors;
  std::string manifest_text = manifest.dump();

  std::string blob;
  blob.reserve(16 + manifest_text.size() + payload.size());
  blob.append(kCheckpointMagic, 8);
  detail::put_u64(blob, manifest_text.size());
  blob += manifest_text;
  blob += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open checkpoint for writing: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out)
    throw IoError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 16)
    throw IoError("checkpoint truncated before header: " + path);
  if (bytes.compare(0, 8, kCheckpointMagic, 8) != 0)
    throw IoError("not a checkpoint file (bad magic): " + path);
  std::uint64_t manifest_size = detail::get_u64(bytes, 8);
  if (16 + manifest_size > bytes.size())
    throw IoError("checkpoint truncated inside manifest: " + path);
  std::string manifest_text = bytes.substr(16, manifest_size);
  std::size_t payload_start = 16 + manifest_size;
  std::size_t payload_size = bytes.size() - payload_start;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::exception &e) {
    throw IoError("checkpoint manifest is not valid json: " + std::string(e.what()));
  }
  if (!manifest.is_object() || !manifest.contains("format_version") ||
      !manifest["format_version"].is_number_integer())
    throw IoError("checkpoint manifest missing format_version: " + path);
  int version = manifest["format_version"].get<int>();
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint format version " + std::to_string(version) +
                  " (expected " + std::to_string(kCheckpointVersion) + ")");
  if (!manifest.contains("config_digest") || !manifest["config_digest"].is_string() ||
      !manifest.contains("tensors") || !manifest["tensors"].is_array())
    throw IoError("checkpoint manifest missing config_digest or tensors: " + path);

  struct Span {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
    std::uint64_t bytes;
  };
  std::vector<Span> spans;
  for (const nlohmann::json &entry : manifest["tensors"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("shape") || !entry["shape"].is_array() || !entry.contains("offset") ||
        !entry.contains("bytes"))
      throw IoError("checkpoint manifest has a malformed tensor entry: " + path);
    Span span;
    span.name = entry["name"].get<std::string>();
    std::uint64_t count = 1;
    for (const nlohmann::json &d : entry["shape"]) {
      if (!d.is_number_unsigned() && !d.is_number_integer())
        throw IoError("checkpoint tensor '" + span.name + "' has a non-integer shape");
      span.shape.push_back(d.get<std::size_t>());
      count *= span.shape.back();
    }
    span.offset = entry["offset"].get<std::uint64_t>();
    span.bytes = entry["bytes"].get<std::uint64_t>();
    if (span.bytes != count * 4)
      throw IoError("checkpoint tensor '" + span.name + "' byte count disagrees with its shape");
    spans.push_back(std::move(span));
  }

  // offsets must tile the payload exactly, in order, with no overlap
  std::uint64_t cursor = 0;
  for (const Span &span : spans) {
    if (span.offset != cursor)
      throw IoError("checkpoint tensor '" + span.name + "' offset " +
                    std::to_string(span.offset) + " overlaps or leaves a gap (expected " +
                    std::to_string(cursor) + ")");
    cursor += span.bytes;
  }
  if (cursor != payload_size)
    throw IoError("checkpoint payload is " + std::to_string(payload_size) +
                  " bytes but the manifest covers " + std::to_string(cursor));

  Checkpoint ckpt;
  ckpt.format_version = version;
  ckpt.config_digest = manifest["config_digest"].get<std::string>();
  for (const Span &span : spans) {
    if (ckpt.tensors.count(span.name))
      throw IoError("checkpoint lists tensor '" + span.name + "' twice");
    nn::Tensor tensor;
    tensor.shape = span.shape;
    tensor.data.resize(span.bytes / 4);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      float f = detail::get_f32(bytes, payload_start + span.offset + i * 4);
      if (!std::isfinite(f))
        throw NumericError("checkpoint tensor '" + span.name + "' holds a non-finite value");
      tensor.data[i] = static_cast<double>(f);
    }
    ckpt.tensors[span.name] = std::move(tensor);
  }
  return ckpt;
}

} // namespace molalign::io
