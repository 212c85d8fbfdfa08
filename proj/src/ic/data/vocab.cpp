#include "ic/data/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ic/error.hpp"

namespace ic::data {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) append(t);
}

void Vocabulary::append(const std::string& token) {
  token_to_id_[token] = static_cast<int32_t>(id_to_token_.size());
  id_to_token_.push_back(token);
}

std::string normalize_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

namespace {
std::vector<std::string> words_of(const std::string& text) {
  std::istringstream is(normalize_text(text));
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}
}  // namespace

Vocabulary Vocabulary::build(const std::vector<world::Trajectory>& corpus) {
  check(!corpus.empty(), "configuration error: cannot build a vocabulary from an empty corpus");
  std::set<std::string> words;
  for (const auto& traj : corpus) {
    for (const auto& w : words_of(traj.goal_text)) words.insert(w);
    for (const auto& seg : traj.segments)
      for (const auto& w : words_of(seg.text)) words.insert(w);
  }
  Vocabulary v;
  for (const auto& w : words) v.append(w);
  return v;
}

Vocabulary Vocabulary::with_extra_words(const std::vector<std::string>& words) const {
  std::vector<std::string> missing;
  for (const auto& w : words)
    if (token_to_id_.count(normalize_text(w)) == 0) missing.push_back(normalize_text(w));
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  Vocabulary v = *this;
  for (const auto& w : missing) v.append(w);
  return v;
}

int32_t Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int32_t id) const {
  check(id >= 0 && id < size(), "vocabulary error: id ", id, " outside [0, ", size(), ")");
  return id_to_token_[static_cast<size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  check(static_cast<bool>(os), "I/O error: cannot write vocabulary to ", path);
  for (const auto& t : id_to_token_) os << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  check(static_cast<bool>(is), "I/O error: cannot open vocabulary ", path);
  Vocabulary v;
  std::string line;
  int32_t idx = 0;
  while (std::getline(is, line)) {
    if (idx < 4) {
      check(line == v.id_to_token_[static_cast<size_t>(idx)],
            "format error: vocabulary reserved slot ", idx, " is ", line);
    } else {
      v.append(line);
    }
    ++idx;
  }
  return v;
}

std::vector<int32_t> tokenize(const std::string& text, const Vocabulary& vocab) {
  std::vector<int32_t> out;
  for (const auto& w : words_of(text)) out.push_back(vocab.id(w));
  return out;
}

std::string detokenize(const std::vector<int32_t>& ids, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(ids[i]);
  }
  return out;
}

}  // namespace ic::data
