/*
 * Copyright 2026 the mtlrank authors.
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

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtlrank/errors.hpp"

namespace mtlrank::text {

/// Lowercased word tokens split on whitespace and ASCII punctuation. Bytes
/// outside ASCII are treated as word characters so multi-byte UTF-8 words
/// survive intact.
inline std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (uc >= 0x80 || std::isalnum(uc)) {
      cur += static_cast<char>(uc < 0x80 ? std::tolower(uc) : uc);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Frequency-capped token->id map with dense ids. Ids 0..2 are reserved and
/// never reassigned: 0 = PAD, 1 = UNK, 2 = CLS.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kReserved = 3;

  Vocabulary() = default;

  /// Builds from a corpus of raw strings, keeping the max_vocab - 3 most
  /// frequent tokens (ties broken lexicographically for determinism).
  static Vocabulary build(const std::vector<std::string>& corpus,
                          std::size_t max_vocab = 8192) {
    if (max_vocab < kReserved + 1)
      throw ConfigError("vocabulary: max_vocab must exceed the reserved ids");
    std::map<std::string, std::size_t> freq;
    for (const auto& s : corpus)
      for (auto& tok : word_tokens(s)) ++freq[tok];

    std::vector<std::pair<std::string, std::size_t>> by_freq(freq.begin(),
                                                             freq.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    Vocabulary v;
    const std::size_t keep = std::min(by_freq.size(), max_vocab - kReserved);
    v.tokens_.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      v.ids_[by_freq[i].first] = static_cast<int>(kReserved + i);
      v.tokens_.push_back(by_freq[i].first);
    }
    return v;
  }

  int id(const std::string& token) const {
    const auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
  }

  /// Total id space including the reserved ids.
  std::size_t size() const { return tokens_.size() + kReserved; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tokens"] = tokens_;
    return j;
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    v.tokens_ = j.at("tokens").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
      v.ids_[v.tokens_[i]] = static_cast<int>(kReserved + i);
    return v;
  }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

/// Word-tokenizes, maps through the vocabulary (UNK for misses) and
/// truncates to max_len. No CLS is prepended; the encoder pools with max,
/// not a CLS readout. Empty text yields an empty sequence.
inline std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab,
                                 std::size_t max_len) {
  std::vector<int> ids;
  for (const auto& tok : word_tokens(text)) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.id(tok));
  }
  return ids;
}

}  // namespace mtlrank::text
