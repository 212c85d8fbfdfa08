#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ic::eval {

struct ReportRow {
  std::string objective;
  int64_t demos = 0;
  double annotation_fraction = 1.0;
  std::string mask_mode;
  uint64_t seed = 0;
  int64_t episodes = 0;
  double success = 0.0;
  // language metrics are absent for objectives without a trained decoder
  std::optional<double> token_accuracy, bleu_score, heldout_lang_nll;
  std::array<int64_t, 5> diff_success{};  // by difficulty 1..5
  std::array<int64_t, 5> diff_episodes{};
  std::string config_hash;

  std::string to_csv_line() const;
  static ReportRow from_csv_line(const std::string& line);
};

struct EvalReport {
  std::vector<ReportRow> rows;
};

extern const char* kReportHeader;

// Fixed header, one row per cell, newline-terminated UTF-8. Empty -> error.
void emit_csv_report(const EvalReport& report, const std::string& path);
EvalReport read_csv_report(const std::string& path);

}  // namespace ic::eval
