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

#ifndef CONTRAST_CHECKPOINT_HPP_
#define CONTRAST_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <variant>

#include "contrast/decoder_lm.hpp"
#include "contrast/seq2seq_lm.hpp"
#include "contrast/vocab.hpp"

namespace contrast {

// Binary checkpoint layout:
//   "CXCK" | u32 header length | JSON header | f64 tensor payload
// All integers and doubles are little-endian; tensors are row-major and appear
// in the order listed by the header. The header carries "format_version": 1,
// the model kind, its config, the vocabulary, and an optional caller-supplied
// "provenance" object.
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  Vocab vocab;
  std::variant<DecoderLM, Seq2SeqLM> model;
  std::string provenance;  // serialized JSON, empty when absent
};

// `provenance`, when non-empty, must be a JSON object.
void save_checkpoint(const DecoderLM& lm, const Vocab& vocab, const std::filesystem::path& path,
                     const std::string& provenance = {});
void save_checkpoint(const Seq2SeqLM& lm, const Vocab& vocab, const std::filesystem::path& path,
                     const std::string& provenance = {});

// Throws IoError for unreadable or truncated files, FormatVersionMismatch for
// foreign or future formats, and ValidationError for shape inconsistencies.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Convenience for callers that require a decoder-only model.
Checkpoint load_decoder_checkpoint(const std::filesystem::path& path);

}  // namespace contrast

#endif  // CONTRAST_CHECKPOINT_HPP_
