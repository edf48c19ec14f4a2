/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Plain-text corpora: one whitespace-tokenised sentence per line, and a
// vocabulary file with one token per line whose line number is the token id.

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "knnmt/decode/toy_model.hpp"
#include "knnmt/error.hpp"
#include "knnmt/vecstore/record.hpp"

namespace knnmt {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  for (const auto& l : lines) out << l << '\n';
  out.close();
  require(!out.fail(), ErrorCode::io, "failed writing " + path);
}

inline std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    require(tokens_.size() > kEosId, ErrorCode::empty_vocab, "vocabulary must list pad, bos and eos first");
    for (size_t i = 0; i < tokens_.size(); ++i) {
      require(!tokens_[i].empty(), ErrorCode::invalid_argument, "empty vocabulary entry at line " + std::to_string(i + 1));
      bool fresh = ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second;
      require(fresh, ErrorCode::invalid_argument, "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }

  static Vocabulary load(const std::string& path) { return Vocabulary(read_lines(path)); }

  void save(const std::string& path) const { write_lines(path, tokens_); }

  size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }

  bool contains(const std::string& token) const { return ids_.count(token) != 0; }

  TokenId id(const std::string& token) const {
    auto it = ids_.find(token);
    require(it != ids_.end(), ErrorCode::invalid_argument, "token '" + token + "' is not in the vocabulary");
    return it->second;
  }

  std::vector<TokenId> encode(const std::string& line) const {
    std::vector<TokenId> out;
    for (const auto& tok : split_whitespace(line)) out.push_back(id(tok));
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId t : ids) {
      if (t == kPadId || t == kBosId || t == kEosId) continue;
      if (!out.empty()) out += ' ';
      out += token(t);
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Line-aligned `<name>.<src>` / `<name>.<tgt>` files.
struct ParallelText {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

inline std::string corpus_path(const std::string& name, const std::string& lang) { return name + "." + lang; }

inline ParallelText read_parallel_text(const std::string& name, const std::string& src, const std::string& tgt) {
  ParallelText text{read_lines(corpus_path(name, src)), read_lines(corpus_path(name, tgt))};
  require(text.source.size() == text.target.size(), ErrorCode::misaligned_corpora,
          name + ": " + std::to_string(text.source.size()) + " source lines vs " +
              std::to_string(text.target.size()) + " target lines");
  return text;
}

inline std::vector<SentencePair> encode_parallel(const ParallelText& text, const Vocabulary& vocab) {
  std::vector<SentencePair> out;
  out.reserve(text.source.size());
  for (size_t i = 0; i < text.source.size(); ++i)
    out.push_back({vocab.encode(text.source[i]), vocab.encode(text.target[i])});
  return out;
}

}  // namespace knnmt
