#include "svqa/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace svqa {

const std::vector<std::string>& Vocab::special_tokens() {
  static const std::vector<std::string> specials = {
      "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[start]", "[end]"};
  return specials;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& specials = special_tokens();
  if (tokens_.size() < specials.size())
    throw std::invalid_argument("vocab must start with the 6 special tokens");
  for (size_t i = 0; i < specials.size(); ++i)
    if (tokens_[i] != specials[i])
      throw std::invalid_argument("vocab slot " + std::to_string(i) +
                                  " must be " + specials[i] + ", got " +
                                  tokens_[i]);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocab token: " + tokens_[i]);
  }
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocab of size " + std::to_string(size()));
  return tokens_[static_cast<size_t>(id)];
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write vocab file: " + path);
  for (const std::string& t : tokens_) os << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read vocab file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocab(std::move(tokens));
}

std::vector<std::string> pretokenize(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    unsigned char u = static_cast<unsigned char>(ch);
    char c = static_cast<char>(std::tolower(u));
    if (std::isspace(u)) {
      flush();
    } else if (c == '.' || c == ',' || c == '?' || c == '!') {
      flush();
      words.push_back(std::string(1, c));
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return words;
}

namespace {

std::string piece_text(const std::string& p) {
  return p.rfind("##", 0) == 0 ? p.substr(2) : p;
}

std::string merge_pieces(const std::string& a, const std::string& b) {
  bool cont = a.rfind("##", 0) == 0;
  return (cont ? "##" : "") + piece_text(a) + piece_text(b);
}

}  // namespace

Vocab train_vocab(const std::vector<std::string>& corpus, int target_size,
                  int min_freq) {
  if (corpus.empty()) throw std::invalid_argument("train_vocab: empty corpus");

  // Ordered map keeps everything deterministic regardless of hash seeds.
  std::map<std::string, long long> freq;
  for (const std::string& line : corpus)
    for (const std::string& w : pretokenize(line)) ++freq[w];
  if (freq.empty())
    throw std::invalid_argument("train_vocab: corpus has no tokens");

  // Base alphabet: every initial character and every continuation form.
  std::set<std::string> alphabet;
  for (const auto& [word, count] : freq) {
    for (size_t i = 0; i < word.size(); ++i) {
      std::string piece = word.substr(i, 1);
      alphabet.insert(i == 0 ? piece : "##" + piece);
    }
  }
  const int required = kNumSpecials + static_cast<int>(alphabet.size());
  if (target_size <= required)
    throw std::invalid_argument(
        "train_vocab: target_size " + std::to_string(target_size) +
        " must exceed specials + alphabet = " + std::to_string(required));

  std::vector<std::string> tokens = Vocab::special_tokens();
  std::set<std::string> have(tokens.begin(), tokens.end());
  auto push = [&](const std::string& t) {
    if (have.insert(t).second) tokens.push_back(t);
  };
  for (const std::string& a : alphabet) push(a);

  // Whole words by (frequency desc, lexicographic asc).
  std::vector<std::pair<std::string, long long>> by_freq(freq.begin(),
                                                         freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  std::set<std::string> whole;
  for (const auto& [word, count] : by_freq) {
    if (static_cast<int>(tokens.size()) >= target_size) break;
    if (count < min_freq) continue;
    whole.insert(word);
    push(word);
  }

  // Residual coverage: greedy pair merges over the words that were not kept
  // whole, weighted by word frequency.
  std::vector<std::pair<std::vector<std::string>, long long>> residual;
  for (const auto& [word, count] : freq) {
    if (whole.count(word)) continue;
    std::vector<std::string> pieces;
    for (size_t i = 0; i < word.size(); ++i)
      pieces.push_back(i == 0 ? word.substr(i, 1) : "##" + word.substr(i, 1));
    if (pieces.size() > 1) residual.emplace_back(std::move(pieces), count);
  }
  while (static_cast<int>(tokens.size()) < target_size) {
    std::map<std::pair<std::string, std::string>, long long> pair_count;
    for (const auto& [pieces, count] : residual)
      for (size_t i = 0; i + 1 < pieces.size(); ++i)
        pair_count[{pieces[i], pieces[i + 1]}] += count;
    std::pair<std::string, std::string> best;
    long long best_count = 0;
    for (const auto& [pr, count] : pair_count) {
      if (count > best_count) {
        best_count = count;
        best = pr;
      }
    }
    if (best_count < 2) break;  // singleton merges add no coverage
    const std::string merged = merge_pieces(best.first, best.second);
    push(merged);
    for (auto& [pieces, count] : residual) {
      std::vector<std::string> next;
      for (size_t i = 0; i < pieces.size(); ++i) {
        if (i + 1 < pieces.size() && pieces[i] == best.first &&
            pieces[i + 1] == best.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(pieces[i]);
        }
      }
      pieces = std::move(next);
    }
  }

  return Vocab(std::move(tokens));
}

namespace {

// Greedy longest-match-first segmentation; empty result means [UNK].
std::vector<int> wordpiece_segment(const std::string& word,
                                   const Vocab& vocab) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t take = word.size() - pos;
    int id = -1;
    while (take > 0) {
      std::string piece = word.substr(pos, take);
      if (pos > 0) piece = "##" + piece;
      id = vocab.id(piece);
      if (id >= 0) break;
      --take;
    }
    if (id < 0) return {};
    out.push_back(id);
    pos += take;
  }
  return out;
}

}  // namespace

EncodedText encode(const std::string& text, const Vocab& vocab, int max_len) {
  if (max_len < 3)
    throw std::invalid_argument("encode: max_len must be at least 3");
  std::vector<int> ids;
  ids.push_back(kClsId);
  for (const std::string& word : pretokenize(text)) {
    std::vector<int> pieces = wordpiece_segment(word, vocab);
    if (pieces.empty())
      ids.push_back(kUnkId);
    else
      ids.insert(ids.end(), pieces.begin(), pieces.end());
  }
  if (static_cast<int>(ids.size()) > max_len - 1)
    ids.resize(static_cast<size_t>(max_len - 1));
  ids.push_back(kSepId);

  EncodedText enc;
  enc.ids = std::move(ids);
  const int real = static_cast<int>(enc.ids.size());
  enc.ids.resize(static_cast<size_t>(max_len), kPadId);
  for (int i = 0; i < max_len; ++i) {
    enc.segment_ids.push_back(0);
    enc.position_ids.push_back(i);
    enc.attention_mask.push_back(i < real ? 1 : 0);
  }
  return enc;
}

std::vector<int> encode_answer(const std::string& text, const Vocab& vocab,
                               int max_len) {
  if (max_len < 2)
    throw std::invalid_argument("encode_answer: max_len must be at least 2");
  std::vector<int> ids;
  ids.push_back(kStartId);
  for (const std::string& word : pretokenize(text)) {
    std::vector<int> pieces = wordpiece_segment(word, vocab);
    if (pieces.empty())
      ids.push_back(kUnkId);
    else
      ids.insert(ids.end(), pieces.begin(), pieces.end());
  }
  if (static_cast<int>(ids.size()) > max_len - 1)
    ids.resize(static_cast<size_t>(max_len - 1));
  ids.push_back(kEndId);
  ids.resize(static_cast<size_t>(max_len), kPadId);
  return ids;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& tok = vocab.token(id);  // throws on bad id
    if (id < kNumSpecials) continue;
    if (tok.rfind("##", 0) == 0) {
      out += tok.substr(2);
    } else {
      if (!out.empty()) out += ' ';
      out += tok;
    }
  }
  return out;
}

}  // namespace svqa
