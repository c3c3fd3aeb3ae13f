#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace svqa {

// Special token ids occupy the first six slots in this fixed order.
enum SpecialToken : int {
  kPadId = 0,
  kUnkId = 1,
  kClsId = 2,
  kSepId = 3,
  kStartId = 4,
  kEndId = 5,
};
constexpr int kNumSpecials = 6;

// WordPiece-style vocabulary. Immutable after training; continuation pieces
// carry the "##" prefix.
class Vocab {
 public:
  static const std::vector<std::string>& special_tokens();

  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  // -1 when absent.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const {
    return id(token) >= 0;
  }

  // One token per line, line number = id; the first six lines are the
  // special tokens.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Word-token stream with the index trails the embedding tables consume.
struct EncodedText {
  std::vector<int> ids;
  std::vector<int> segment_ids;    // all 0 for text
  std::vector<int> position_ids;   // 0..L-1
  std::vector<int> attention_mask;  // 1 real, 0 pad

  int real_length() const {
    int n = 0;
    for (int m : attention_mask) n += m;
    return n;
  }
};

// Lowercases and splits on whitespace, with {. , ? !} as standalone tokens.
std::vector<std::string> pretokenize(const std::string& text);

// WordPiece-style training: words with frequency >= min_freq become whole
// entries; the rest are covered by greedy pair merges over character pieces
// (a pair must repeat to be merged; ties pick the lexicographically smaller
// pair). Deterministic for a fixed corpus.
Vocab train_vocab(const std::vector<std::string>& corpus, int target_size,
                  int min_freq);

// [CLS] pieces [SEP], greedy longest-match-first segmentation, padded or
// truncated to max_len. Unknown segments degrade to [UNK].
EncodedText encode(const std::string& text, const Vocab& vocab, int max_len);

// [start] pieces [end], padded to max_len; the decoder-side target layout.
std::vector<int> encode_answer(const std::string& text, const Vocab& vocab,
                               int max_len);

// Strips specials and pads, fuses "##" continuations, joins with spaces.
std::string decode(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace svqa
