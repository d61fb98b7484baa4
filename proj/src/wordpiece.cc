// Copyright 2026 The DocDS Authors.
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

#include "docds/wordpiece.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "docds/document_builder.h"
#include "docds/errors.h"

namespace docds {
namespace {

const std::vector<std::string>& special_pieces() {
  static const std::vector<std::string> kSpecials = {kPadPiece, kUnkPiece, kClsPiece, kSepPiece,
                                                     kSentenceSeparator};
  return kSpecials;
}

bool is_special(const std::string& word) {
  const auto& s = special_pieces();
  return std::find(s.begin(), s.end(), word) != s.end();
}

std::vector<std::string> by_count(const std::map<std::string, std::size_t>& counts,
                                  std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> items;
  for (const auto& [k, c] : counts) {
    if (c >= min_count) items.emplace_back(k, c);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [k, c] : items) out.push_back(std::move(k));
  return out;
}

}  // namespace

std::vector<std::string> utf8_chars(const std::string& word) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size();) {
    const unsigned char c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    if (i + len > word.size()) len = 1;
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

WordPieceVocab::WordPieceVocab(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  for (int i = 0; i < static_cast<int>(pieces_.size()); ++i) {
    if (pieces_[i].empty()) throw ValidationError("empty vocabulary entry at line " + std::to_string(i + 1));
    if (!ids_.emplace(pieces_[i], i).second) {
      throw ValidationError("duplicate vocabulary entry: " + pieces_[i]);
    }
  }
  pad_id_ = id(kPadPiece);
  unk_id_ = id(kUnkPiece);
  cls_id_ = id(kClsPiece);
  sep_id_ = id(kSepPiece);
  if (pad_id_ < 0 || unk_id_ < 0 || cls_id_ < 0 || sep_id_ < 0) {
    throw ValidationError("vocabulary lacks one of [PAD] [UNK] [CLS] [SEP]");
  }
}

WordPieceVocab WordPieceVocab::train(const std::vector<std::vector<std::string>>& token_streams,
                                     const TrainOptions& options) {
  std::map<std::string, std::size_t> words;
  for (const auto& stream : token_streams) {
    for (const auto& w : stream) {
      if (!w.empty() && !is_special(w)) ++words[w];
    }
  }

  std::vector<std::string> pieces = special_pieces();
  std::set<std::string> have(pieces.begin(), pieces.end());
  auto add = [&](const std::string& p) {
    if (pieces.size() < std::max(options.max_size, special_pieces().size()) && have.insert(p).second) {
      pieces.push_back(p);
    }
  };

  // Every character as a word-initial and a continuation piece, so any word
  // built from seen characters can be segmented.
  std::set<std::string> chars;
  for (const auto& [w, c] : words) {
    for (auto& ch : utf8_chars(w)) chars.insert(ch);
  }
  for (const auto& ch : chars) add(ch);
  for (const auto& ch : chars) add(kContinuationPrefix + ch);

  for (const auto& w : by_count(words, options.min_word_count)) add(w);

  std::map<std::string, std::size_t> affixes;
  for (const auto& [w, c] : words) {
    const auto cs = utf8_chars(w);
    const int n = static_cast<int>(cs.size());
    // Word-initial pieces, then "##" pieces starting anywhere inside.
    for (int len = 2; len <= std::min(n - 1, options.max_piece_chars); ++len) {
      std::string prefix;
      for (int i = 0; i < len; ++i) prefix += cs[i];
      affixes[prefix] += c;
    }
    for (int start = 1; start + 1 < n; ++start) {
      std::string piece = kContinuationPrefix;
      for (int end = start; end < std::min(n, start + options.max_piece_chars); ++end) {
        piece += cs[end];
        if (end > start) affixes[piece] += c;
      }
    }
  }
  for (const auto& p : by_count(affixes, options.min_piece_count)) add(p);
  return WordPieceVocab(std::move(pieces));
}

WordPieceVocab WordPieceVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  return WordPieceVocab(std::move(pieces));
}

void WordPieceVocab::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : pieces_) out << p << '\n';
}

int WordPieceVocab::id(const std::string& piece) const {
  auto it = ids_.find(piece);
  return it == ids_.end() ? -1 : it->second;
}

std::vector<int> WordPieceVocab::tokenize_word(const std::string& word) const {
  if (int whole = id(word); whole >= 0) return {whole};
  const auto cs = utf8_chars(word);
  const int n = static_cast<int>(cs.size());
  std::vector<int> out;
  int start = 0;
  while (start < n) {
    int found = -1;
    int end = n;
    for (; end > start; --end) {
      std::string sub = start > 0 ? kContinuationPrefix : "";
      for (int i = start; i < end; ++i) sub += cs[i];
      found = id(sub);
      if (found >= 0) break;
    }
    if (found < 0) return {unk_id_};
    out.push_back(found);
    start = end;
  }
  return out;
}

}  // namespace docds
