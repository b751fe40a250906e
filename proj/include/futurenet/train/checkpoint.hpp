// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/core/error.hpp"
#include "futurenet/core/params.hpp"
#include "futurenet/model/config.hpp"
#include "futurenet/model/decoder.hpp"
#include "futurenet/train/optimizer.hpp"

namespace futurenet {

// Layout: magic "FNLOF", u32 format version, u64 header length, header JSON,
// then every parameter tensor as raw little-endian doubles in registration
// order, then (if the header says so) the optimizer step count and the two
// Adam moment buffers in the same order. The header alone identifies the
// model; parameters need not be read to inspect it.
inline constexpr char kCheckpointMagic[5] = {'F', 'N', 'L', 'O', 'F'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  ModelConfig model;
  std::int64_t step = 0;
  std::int64_t n_tensors = 0;
  std::int64_t numel = 0;
  bool has_optimizer = false;
};

struct Checkpoint {
  CheckpointHeader header;
  ParamStore params{0};
  std::int64_t adam_step = 0;
  std::vector<Tensor<double>> adam_m;
  std::vector<Tensor<double>> adam_v;
};

namespace ckpt_detail {

inline void put_u32(std::string & out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string & out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_doubles(std::string & out, const Tensor<double> & t) {
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    put_u64(out, std::bit_cast<std::uint64_t>(t.data()[i]));
  }
}

struct Reader {
  const std::string & buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  void doubles(Tensor<double> & t) {
    for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = std::bit_cast<double>(u64());
  }
};

inline std::string read_file(const std::string & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

inline nlohmann::json header_json(const CheckpointHeader & h) {
  return nlohmann::json{
    {"model", h.model},
    {"step", h.step},
    {"n_tensors", h.n_tensors},
    {"numel", h.numel},
    {"has_optimizer", h.has_optimizer}};
}

inline CheckpointHeader parse_header(const std::string & text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &) {
    throw CheckpointError("unreadable checkpoint header");
  }
  CheckpointHeader h;
  h.model = j.at("model").get<ModelConfig>();
  h.step = j.at("step").get<std::int64_t>();
  h.n_tensors = j.at("n_tensors").get<std::int64_t>();
  h.numel = j.at("numel").get<std::int64_t>();
  h.has_optimizer = j.at("has_optimizer").get<bool>();
  return h;
}

/// Magic + version + header; leaves the reader at the first parameter byte.
inline CheckpointHeader read_preamble(Reader & r) {
  r.need(sizeof(kCheckpointMagic));
  for (std::size_t i = 0; i < sizeof(kCheckpointMagic); ++i) {
    if (r.buf[r.pos + i] != kCheckpointMagic[i]) throw CheckpointError("not a checkpoint file");
  }
  r.pos += sizeof(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(
      "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t len = r.u64();
  r.need(len);
  const CheckpointHeader h = parse_header(r.buf.substr(r.pos, len));
  r.pos += len;
  return h;
}

}  // namespace ckpt_detail

inline void save_checkpoint(
  const std::string & path, const ModelConfig & cfg, const ParamStore & ps, std::int64_t step,
  AdamW * optimizer = nullptr) {
  CheckpointHeader h;
  h.model = cfg;
  h.step = step;
  h.n_tensors = static_cast<std::int64_t>(ps.size());
  h.numel = ps.numel();
  h.has_optimizer = optimizer != nullptr;

  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  ckpt_detail::put_u32(out, kCheckpointVersion);
  const std::string header = ckpt_detail::header_json(h).dump();
  ckpt_detail::put_u64(out, header.size());
  out += header;
  for (std::size_t i = 0; i < ps.size(); ++i) ckpt_detail::put_doubles(out, ps.tensor(i));
  if (optimizer != nullptr) {
    ckpt_detail::put_u64(out, static_cast<std::uint64_t>(optimizer->step_count()));
    for (const auto & t : optimizer->first_moments()) ckpt_detail::put_doubles(out, t);
    for (const auto & t : optimizer->second_moments()) ckpt_detail::put_doubles(out, t);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for checkpoint '" + path + "'");
}

inline CheckpointHeader read_checkpoint_header(const std::string & path) {
  const std::string buf = ckpt_detail::read_file(path);
  ckpt_detail::Reader r{buf};
  return ckpt_detail::read_preamble(r);
}

/// Rebuilds the parameter set for the stored model config and fills it with
/// the stored bytes. The result is bitwise-equal to what was saved.
inline Checkpoint load_checkpoint(const std::string & path) {
  const std::string buf = ckpt_detail::read_file(path);
  ckpt_detail::Reader r{buf};

  Checkpoint ck;
  ck.header = ckpt_detail::read_preamble(r);
  ck.header.model.validate();
  register_model(ck.params, ck.header.model);
  if (static_cast<std::int64_t>(ck.params.size()) != ck.header.n_tensors ||
      ck.params.numel() != ck.header.numel) {
    throw CheckpointError("checkpoint parameter set does not match its model config");
  }
  for (std::size_t i = 0; i < ck.params.size(); ++i) r.doubles(ck.params.tensor(i));
  if (ck.header.has_optimizer) {
    ck.adam_step = static_cast<std::int64_t>(r.u64());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      ck.adam_m.push_back(Tensor<double>::zeros(ck.params.tensor(i).shape()));
      r.doubles(ck.adam_m.back());
    }
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      ck.adam_v.push_back(Tensor<double>::zeros(ck.params.tensor(i).shape()));
      r.doubles(ck.adam_v.back());
    }
  }
  return ck;
}

}  // namespace futurenet
