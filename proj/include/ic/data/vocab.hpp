#pragma once
#include <string>
#include <unordered_map>
#include <vector>

#include "ic/world/oracle.hpp"

namespace ic::data {

// Word-level vocabulary with fixed reserved slots. Non-reserved tokens are
// sorted lexicographically so rebuilding from the same corpus is stable.
class Vocabulary {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kBos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kUnk = 3;

  Vocabulary();
  static Vocabulary build(const std::vector<world::Trajectory>& corpus);
  // Appends words absent so far (sorted); the forward-prediction objective
  // adds the action words this way.
  Vocabulary with_extra_words(const std::vector<std::string>& words) const;

  int32_t size() const { return static_cast<int32_t>(id_to_token_.size()); }
  int32_t id(const std::string& token) const;  // kUnk when unknown
  const std::string& token(int32_t id) const;

  void save(const std::string& path) const;  // ordered token list, one per line
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int32_t> token_to_id_;
  void append(const std::string& token);
};

// Lowercase then whitespace-split; unknown words map to UNK.
std::vector<int32_t> tokenize(const std::string& text, const Vocabulary& vocab);
std::string detokenize(const std::vector<int32_t>& ids, const Vocabulary& vocab);
std::string normalize_text(const std::string& text);

}  // namespace ic::data
