/*
 * Copyright 2026 The contrast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "contrast/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "contrast/error.hpp"
#include "json.hpp"

namespace contrast {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'C', 'X', 'C', 'K'};

json config_json(const DecoderLMConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},
          {"num_layers", c.num_layers}, {"num_heads", c.num_heads},
          {"context_len", c.context_len}, {"seed", c.seed},
          {"layer_norm", c.layer_norm}};
}

DecoderLMConfig config_from_json(const json& j) {
  DecoderLMConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.context_len = j.at("context_len").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.layer_norm = j.at("layer_norm").get<bool>();
  return c;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(const std::string& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

template <class P>
void write_file(const char* kind, const DecoderLMConfig& config, const P& params,
                const Vocab& vocab, const std::filesystem::path& path,
                const std::string& provenance) {
  json tensors = json::array();
  std::string payload;
  visit_params(params, "", [&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (double v : m.values()) put_f64(payload, v);
  });
  json header = {{"format_version", kCheckpointFormatVersion},
                 {"kind", kind},
                 {"config", config_json(config)},
                 {"vocab", {{"tokens", vocab.tokens()}, {"frequency", vocab.frequencies()}}},
                 {"tensors", tensors},
                 {"payload_bytes", payload.size()}};
  if (!provenance.empty()) {
    try {
      header["provenance"] = json::parse(provenance);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "provenance is not JSON: " + std::string(e.what()));
    }
  }
  const std::string header_text = header.dump();
  std::string bytes(kMagic, 4);
  put_u32(bytes, static_cast<std::uint32_t>(header_text.size()));
  bytes += header_text;
  bytes += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

template <class P>
P read_params(P params, const json& header, const std::string& bytes, std::size_t offset) {
  const json& tensors = header.at("tensors");
  std::size_t index = 0;
  visit_params(params, "", [&](const std::string& name, Matrix& m) {
    if (index >= tensors.size()) {
      throw Error(ErrorCode::ValidationError, "checkpoint lacks tensor " + name);
    }
    const json& t = tensors[index++];
    if (t.at("name").get<std::string>() != name || t.at("rows").get<std::size_t>() != m.rows() ||
        t.at("cols").get<std::size_t>() != m.cols()) {
      throw Error(ErrorCode::ValidationError,
                  "checkpoint tensor " + t.at("name").get<std::string>() +
                      " does not match config at " + name);
    }
    for (double& v : m.values()) {
      v = get_f64(bytes, offset);
      offset += 8;
    }
  });
  if (index != tensors.size()) {
    throw Error(ErrorCode::ValidationError, "checkpoint has extra tensors");
  }
  return params;
}

}  // namespace

void save_checkpoint(const DecoderLM& lm, const Vocab& vocab, const std::filesystem::path& path,
                     const std::string& provenance) {
  write_file("decoder", lm.config(), lm.params(), vocab, path, provenance);
}

void save_checkpoint(const Seq2SeqLM& lm, const Vocab& vocab, const std::filesystem::path& path,
                     const std::string& provenance) {
  write_file("seq2seq", lm.config(), lm.params(), vocab, path, provenance);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw Error(ErrorCode::Io, "truncated checkpoint " + path.string());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a checkpoint");
  }
  const std::size_t header_len = get_u32(bytes, 4);
  if (bytes.size() < 8 + header_len) {
    throw Error(ErrorCode::Io, "truncated checkpoint header in " + path.string());
  }
  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, "corrupt checkpoint header: " + std::string(e.what()));
  }
  try {
    if (header.value("format_version", -1) != kCheckpointFormatVersion) {
      throw Error(ErrorCode::FormatVersionMismatch,
                  "checkpoint format_version " + header.value("format_version", json()).dump() +
                      ", expected " + std::to_string(kCheckpointFormatVersion));
    }
    const std::size_t offset = 8 + header_len;
    const std::size_t payload = header.at("payload_bytes").get<std::size_t>();
    if (bytes.size() != offset + payload) {
      throw Error(ErrorCode::Io, "checkpoint payload is " + std::to_string(bytes.size() - offset) +
                                     " bytes, header says " + std::to_string(payload));
    }
    Vocab vocab;
    const auto tokens = header.at("vocab").at("tokens").get<std::vector<std::string>>();
    const auto freq = header.at("vocab").at("frequency").get<std::vector<std::uint64_t>>();
    if (tokens.size() != freq.size()) {
      throw Error(ErrorCode::ValidationError, "vocab token/frequency length mismatch");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (vocab.add(tokens[i], freq[i]) != i) {
        throw Error(ErrorCode::ValidationError, "duplicate vocab token " + tokens[i]);
      }
    }
    const DecoderLMConfig config = config_from_json(header.at("config"));
    config.validate();
    if (config.vocab_size != vocab.size()) {
      throw Error(ErrorCode::ValidationError, "config vocab_size differs from stored vocab");
    }
    const std::string kind = header.at("kind").get<std::string>();
    const std::string provenance =
        header.contains("provenance") ? header.at("provenance").dump() : std::string();
    if (kind == "decoder") {
      DecoderParams p = read_params(DecoderLM(config).params(), header, bytes, offset);
      return {std::move(vocab), DecoderLM(config, std::move(p)), provenance};
    }
    if (kind == "seq2seq") {
      Seq2SeqParams p = read_params(Seq2SeqLM(config).params(), header, bytes, offset);
      return {std::move(vocab), Seq2SeqLM(config, std::move(p)), provenance};
    }
    throw Error(ErrorCode::FormatVersionMismatch, "unknown model kind " + kind);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ValidationError, "malformed checkpoint header: " + std::string(e.what()));
  }
}

Checkpoint load_decoder_checkpoint(const std::filesystem::path& path) {
  Checkpoint c = load_checkpoint(path);
  if (!std::holds_alternative<DecoderLM>(c.model)) {
    throw Error(ErrorCode::ValidationError, path.string() + " is not a decoder-only model");
  }
  return c;
}

}  // namespace contrast
