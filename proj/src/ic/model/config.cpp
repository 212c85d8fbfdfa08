#include "ic/model/config.hpp"

#include <map>
#include <sstream>

#include "ic/error.hpp"

namespace ic::model {

const char* observability_name(Observability o) {
  return o == Observability::Full ? "full" : "partial";
}

const char* mask_mode_name(MaskMode m) {
  switch (m) {
    case MaskMode::Onset: return "onset";
    case MaskMode::Execution: return "execution";
    default: return "unmasked";
  }
}

Observability parse_observability(const std::string& s) {
  if (s == "full") return Observability::Full;
  if (s == "partial") return Observability::Partial;
  fail("configuration error: unknown observability '", s, "' (full|partial)");
}

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "onset") return MaskMode::Onset;
  if (s == "execution") return MaskMode::Execution;
  if (s == "unmasked") return MaskMode::Unmasked;
  fail("configuration error: unknown mask_mode '", s, "' (onset|execution|unmasked)");
}

void ModelConfig::validate() const {
  check(embed_dim > 0 && heads > 0 && embed_dim % heads == 0,
        "configuration error: embed_dim ", embed_dim, " not divisible by heads ", heads);
  check(encoder_blocks >= 1 && decoder_blocks >= 1,
        "configuration error: need at least one encoder and one decoder block");
  check(obs_vocab_size > 1 && text_vocab_size > 1,
        "configuration error: vocabulary sizes not set");
  check(obs_tokens > 0, "configuration error: obs_tokens not set");
  check(action_count > 1, "configuration error: action_count not set");
  check(dropout >= 0.0 && dropout < 1.0, "configuration error: dropout ", dropout);
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "encoder_blocks = " << encoder_blocks << "\n";
  os << "decoder_blocks = " << decoder_blocks << "\n";
  os << "embed_dim = " << embed_dim << "\n";
  os << "mlp_dim = " << mlp_dim << "\n";
  os << "heads = " << heads << "\n";
  os << "dropout = " << dropout << "\n";
  os << "max_seq_len = " << max_seq_len << "\n";
  os << "max_goal_len = " << max_goal_len << "\n";
  os << "max_instr_len = " << max_instr_len << "\n";
  os << "max_ctx_len = " << max_ctx_len << "\n";
  os << "obs_vocab_size = " << obs_vocab_size << "\n";
  os << "text_vocab_size = " << text_vocab_size << "\n";
  os << "action_count = " << action_count << "\n";
  os << "obs_tokens = " << obs_tokens << "\n";
  os << "observability = " << observability_name(observability) << "\n";
  os << "mask_mode = " << mask_mode_name(mask_mode) << "\n";
  os << "decoder_attends_goal = " << (decoder_attends_goal ? 1 : 0) << "\n";
  os << "instruction_context = " << (instruction_context ? 1 : 0) << "\n";
  os << "dtype = " << ic::num::dtype_name(dtype) << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  ModelConfig c;
  auto geti = [&](const char* k, int64_t& out) {
    if (kv.count(k)) out = std::stoll(kv.at(k));
  };
  geti("encoder_blocks", c.encoder_blocks);
  geti("decoder_blocks", c.decoder_blocks);
  geti("embed_dim", c.embed_dim);
  geti("mlp_dim", c.mlp_dim);
  geti("heads", c.heads);
  if (kv.count("dropout")) c.dropout = std::stod(kv.at("dropout"));
  geti("max_seq_len", c.max_seq_len);
  geti("max_goal_len", c.max_goal_len);
  geti("max_instr_len", c.max_instr_len);
  geti("max_ctx_len", c.max_ctx_len);
  geti("obs_vocab_size", c.obs_vocab_size);
  geti("text_vocab_size", c.text_vocab_size);
  geti("action_count", c.action_count);
  geti("obs_tokens", c.obs_tokens);
  if (kv.count("observability")) c.observability = parse_observability(kv.at("observability"));
  if (kv.count("mask_mode")) c.mask_mode = parse_mask_mode(kv.at("mask_mode"));
  if (kv.count("decoder_attends_goal")) c.decoder_attends_goal = kv.at("decoder_attends_goal") == "1";
  if (kv.count("instruction_context")) c.instruction_context = kv.at("instruction_context") == "1";
  if (kv.count("dtype"))
    c.dtype = kv.at("dtype") == "f64" ? ic::num::DType::f64 : ic::num::DType::f32;
  return c;
}

}  // namespace ic::model
