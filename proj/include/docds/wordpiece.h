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

#ifndef DOCDS_WORDPIECE_H_
#define DOCDS_WORDPIECE_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace docds {

inline constexpr const char* kPadPiece = "[PAD]";
inline constexpr const char* kUnkPiece = "[UNK]";
inline constexpr const char* kClsPiece = "[CLS]";
inline constexpr const char* kSepPiece = "[SEP]";
inline constexpr const char* kContinuationPrefix = "##";

// Sub-word vocabulary with greedy longest-match-first segmentation.
// Word-internal pieces carry the "##" prefix. Special tokens (including the
// document sentence separator) are whole-word entries and never split.
class WordPieceVocab {
 public:
  struct TrainOptions {
    std::size_t max_size = 8000;
    // Whole words seen at least this often become single pieces.
    std::size_t min_word_count = 2;
    // Longest sub-word piece, in characters, learned for rarer words.
    int max_piece_chars = 6;
    std::size_t min_piece_count = 2;
  };

  WordPieceVocab() = default;
  explicit WordPieceVocab(std::vector<std::string> pieces);

  // Learns a vocabulary from whitespace tokens.
  static WordPieceVocab train(const std::vector<std::vector<std::string>>& token_streams,
                              const TrainOptions& options);
  static WordPieceVocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(pieces_.size()); }
  // -1 when absent.
  int id(const std::string& piece) const;
  const std::string& piece(int id) const { return pieces_.at(id); }
  const std::vector<std::string>& pieces() const { return pieces_; }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  // Piece ids of one whitespace token; a single [UNK] if it cannot be covered.
  std::vector<int> tokenize_word(const std::string& word) const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
  int pad_id_ = -1;
  int unk_id_ = -1;
  int cls_id_ = -1;
  int sep_id_ = -1;
};

// Splits a UTF-8 word into code points (malformed bytes become single units).
std::vector<std::string> utf8_chars(const std::string& word);

}  // namespace docds

#endif  // DOCDS_WORDPIECE_H_
