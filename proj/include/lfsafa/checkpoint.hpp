#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptation.hpp"
#include "backbone.hpp"

namespace lfsafa {

// Container layout: "LFSA" magic, u32 version, u32 metadata length, UTF-8
// JSON metadata, raw little-endian f32 payload in metadata tensor order,
// 8-byte FNV-1a payload digest. All integers little-endian.
inline constexpr uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

inline void put_u64(std::string& out, uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline std::string serialize_checkpoint(const nlohmann::json& meta,
                                        const std::vector<const Tensor<float>*>& tensors) {
  std::string out = "LFSA";
  put_u32(out, kCheckpointVersion);
  const std::string mjson = meta.dump();
  put_u32(out, static_cast<uint32_t>(mjson.size()));
  out += mjson;
  const size_t payload_at = out.size();
  for (const Tensor<float>* t : tensors)
    out.append(reinterpret_cast<const char*>(t->data.data()), t->data.size() * sizeof(float));
  put_u64(out, fnv1a64(out.data() + payload_at, out.size() - payload_at));
  return out;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorKind::Io, "cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.flush();
  require(f.good(), ErrorKind::Io, "write to " + path + " failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::Io, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

// Owns the file bytes; the payload is an offset, not a pointer, so the
// struct stays valid after the move out of parse_checkpoint.
struct ParsedCheckpoint {
  nlohmann::json meta;
  std::string bytes;
  size_t payload_off = 0;
  size_t payload_len = 0;
  const char* payload() const { return bytes.data() + payload_off; }
};

inline ParsedCheckpoint parse_checkpoint(std::string file_bytes, const std::string& path) {
  ParsedCheckpoint pc;
  pc.bytes = std::move(file_bytes);
  const std::string& bytes = pc.bytes;
  require(bytes.size() >= 12 && bytes.compare(0, 4, "LFSA") == 0, ErrorKind::Format,
          path + " is not a checkpoint (bad magic)");
  uint32_t version = 0, mlen = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&mlen, bytes.data() + 8, 4);
  require(version == kCheckpointVersion, ErrorKind::Format,
          path + ": unsupported checkpoint version " + std::to_string(version));
  require(bytes.size() >= 12 + static_cast<size_t>(mlen) + 8, ErrorKind::Format,
          path + ": truncated checkpoint");
  try {
    pc.meta = nlohmann::json::parse(bytes.substr(12, mlen));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path + ": bad checkpoint metadata: " + e.what());
  }
  pc.payload_off = 12 + mlen;
  pc.payload_len = bytes.size() - 12 - mlen - 8;
  uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  require(fnv1a64(pc.payload(), pc.payload_len) == stored, ErrorKind::Format,
          path + ": payload digest mismatch, file is corrupt");
  return pc;
}

template <typename Params>
nlohmann::json tensor_manifest(const Params& p) {
  nlohmann::json list = nlohmann::json::array();
  for_each_param(p, [&](const std::string& name, const Tensor<float>& t) {
    list.push_back({{"name", name}, {"shape", t.shape}});
  });
  return list;
}

// Fills every tensor of a freshly shaped Params from the payload, checking
// each name and shape against the metadata manifest.
template <typename Params>
void load_payload(Params& p, const ParsedCheckpoint& pc, const std::string& path) {
  const nlohmann::json& manifest = pc.meta.at("tensors");
  size_t idx = 0, offset = 0;
  for_each_param(p, [&](const std::string& name, Tensor<float>& t) {
    require(idx < manifest.size(), ErrorKind::Format,
            path + ": metadata lists too few tensors");
    const nlohmann::json& entry = manifest[idx];
    require(entry.at("name") == name, ErrorKind::Format,
            path + ": tensor " + std::to_string(idx) + " is '" +
                entry.at("name").get<std::string>() + "', expected '" + name + "'");
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    require(shape == t.shape, ErrorKind::Format,
            path + ": tensor " + name + " has shape " + shape_str(shape) + ", expected " +
                shape_str(t.shape));
    const size_t bytes = t.data.size() * sizeof(float);
    require(offset + bytes <= pc.payload_len, ErrorKind::Format,
            path + ": payload too short for tensor " + name);
    std::memcpy(t.data.data(), pc.payload() + offset, bytes);
    offset += bytes;
    ++idx;
  });
  require(idx == manifest.size(), ErrorKind::Format, path + ": metadata lists extra tensors");
  require(offset == pc.payload_len, ErrorKind::Format,
          path + ": payload has " + std::to_string(pc.payload_len - offset) + " trailing bytes");
}

}  // namespace detail

inline nlohmann::json read_checkpoint_meta(const std::string& path) {
  return detail::parse_checkpoint(detail::read_file(path), path).meta;
}

inline void save_backbone(const std::string& path, const BackboneParams<float>& p) {
  p.validate();
  nlohmann::json meta = {{"kind", "backbone"},
                         {"scale", p.scale},
                         {"img_channels", p.img_channels()},
                         {"width", p.width()},
                         {"blocks", static_cast<int>(p.body.size())},
                         {"frozen", p.frozen},
                         {"tensors", detail::tensor_manifest(p)}};
  std::vector<const Tensor<float>*> tensors;
  for_each_param(p, [&](const std::string&, const Tensor<float>& t) { tensors.push_back(&t); });
  detail::write_file(path, detail::serialize_checkpoint(meta, tensors));
}

inline BackboneParams<float> load_backbone(const std::string& path) {
  detail::ParsedCheckpoint pc = detail::parse_checkpoint(detail::read_file(path), path);
  require(pc.meta.value("kind", "") == "backbone", ErrorKind::Format,
          path + " holds a '" + pc.meta.value("kind", "?") + "' checkpoint, expected 'backbone'");
  const int scale = pc.meta.at("scale").get<int>();
  const int c_img = pc.meta.at("img_channels").get<int>();
  const int c_i = pc.meta.at("width").get<int>();
  const int blocks = pc.meta.at("blocks").get<int>();
  require(scale == 2 || scale == 4, ErrorKind::Format, path + ": bad scale in metadata");
  BackboneParams<float> p;
  p.scale = scale;
  p.frozen = pc.meta.at("frozen").get<bool>();
  p.head = zero_conv<float>(c_img, c_i, 3);
  for (int i = 0; i < blocks; ++i)
    p.body.push_back({zero_conv<float>(c_i, c_i, 3), zero_conv<float>(c_i, c_i, 3)});
  p.body_tail = zero_conv<float>(c_i, c_i, 3);
  for (int s = 0; s < (scale == 2 ? 1 : 2); ++s) p.up.push_back(zero_conv<float>(c_i, 4 * c_i, 3));
  p.tail = zero_conv<float>(c_i, c_img, 3);
  detail::load_payload(p, pc, path);
  p.validate();
  return p;
}

inline void save_adaptation(const std::string& path, const AdaptationParams<float>& p) {
  p.validate();
  nlohmann::json meta = {{"kind", "adaptation"},
                         {"angular", p.a},
                         {"feat_channels", p.feat_channels()},
                         {"exchange_channels", p.exchange_channels()},
                         {"kernel", p.sas_ksize()},
                         {"use_difference", p.flags.use_difference},
                         {"use_residual", p.flags.use_residual},
                         {"tensors", detail::tensor_manifest(p)}};
  std::vector<const Tensor<float>*> tensors;
  for_each_param(p, [&](const std::string&, const Tensor<float>& t) { tensors.push_back(&t); });
  detail::write_file(path, detail::serialize_checkpoint(meta, tensors));
}

inline AdaptationParams<float> load_adaptation(const std::string& path) {
  detail::ParsedCheckpoint pc = detail::parse_checkpoint(detail::read_file(path), path);
  require(pc.meta.value("kind", "") == "adaptation", ErrorKind::Format,
          path + " holds a '" + pc.meta.value("kind", "?") +
              "' checkpoint, expected 'adaptation'");
  const int a = pc.meta.at("angular").get<int>();
  const int c_i = pc.meta.at("feat_channels").get<int>();
  const int c_x = pc.meta.at("exchange_channels").get<int>();
  const int k = pc.meta.at("kernel").get<int>();
  AdaptationParams<float> p;
  p.a = a;
  p.flags.use_difference = pc.meta.at("use_difference").get<bool>();
  p.flags.use_residual = pc.meta.at("use_residual").get<bool>();
  const int entry_in = p.flags.use_difference ? 2 * c_i : c_i;
  for (int j = 0; j < a * a; ++j) {
    SasParams<float> s;
    s.entry = zero_conv<float>(entry_in, c_x, k);
    for (int b = 0; b < 3; ++b)
      s.blocks.push_back({zero_conv<float>(c_x, c_x, k), zero_conv<float>(c_x, c_x, k)});
    p.sas.push_back(std::move(s));
  }
  p.fusion.blend = zero_conv<float>(a * a * c_x, c_i, 1);
  p.fusion.process = zero_conv<float>(c_i, c_i, 3);
  detail::load_payload(p, pc, path);
  p.validate();
  return p;
}

}  // namespace lfsafa
