#include "ic/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ic/error.hpp"

namespace ic::eval {

const char* kReportHeader =
    "objective,demos,annotation_fraction,mask_mode,seed,episodes,success_rate,"
    "token_accuracy,bleu,heldout_lang_nll,"
    "succ_d1,n_d1,succ_d2,n_d2,succ_d3,n_d3,succ_d4,n_d4,succ_d5,n_d5,config_hash";

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string("n/a");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s == "n/a") return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::string ReportRow::to_csv_line() const {
  std::ostringstream os;
  os << objective << ',' << demos << ',' << fmt_double(annotation_fraction) << ',' << mask_mode
     << ',' << seed << ',' << episodes << ',' << fmt_double(success) << ','
     << fmt_opt(token_accuracy) << ',' << fmt_opt(bleu_score) << ','
     << fmt_opt(heldout_lang_nll);
  for (int d = 0; d < 5; ++d)
    os << ',' << diff_success[static_cast<size_t>(d)] << ','
       << diff_episodes[static_cast<size_t>(d)];
  os << ',' << config_hash;
  return os.str();
}

ReportRow ReportRow::from_csv_line(const std::string& line) {
  const auto f = split_csv(line);
  check(f.size() == 21, "format error: report row with ", f.size(), " fields");
  ReportRow r;
  r.objective = f[0];
  r.demos = std::stoll(f[1]);
  r.annotation_fraction = std::stod(f[2]);
  r.mask_mode = f[3];
  r.seed = std::stoull(f[4]);
  r.episodes = std::stoll(f[5]);
  r.success = std::stod(f[6]);
  r.token_accuracy = parse_opt(f[7]);
  r.bleu_score = parse_opt(f[8]);
  r.heldout_lang_nll = parse_opt(f[9]);
  for (int d = 0; d < 5; ++d) {
    r.diff_success[static_cast<size_t>(d)] = std::stoll(f[10 + 2 * static_cast<size_t>(d)]);
    r.diff_episodes[static_cast<size_t>(d)] = std::stoll(f[11 + 2 * static_cast<size_t>(d)]);
  }
  r.config_hash = f[20];
  return r;
}

void emit_csv_report(const EvalReport& report, const std::string& path) {
  check(!report.rows.empty(), "empty-report error: refusing to write a report with no rows");
  std::ofstream os(path, std::ios::trunc);
  check(static_cast<bool>(os), "I/O error: cannot write report to ", path);
  os << kReportHeader << "\n";
  for (const auto& r : report.rows) os << r.to_csv_line() << "\n";
  check(static_cast<bool>(os), "I/O error: failed writing report to ", path);
}

EvalReport read_csv_report(const std::string& path) {
  std::ifstream is(path);
  check(static_cast<bool>(is), "I/O error: cannot open report ", path);
  std::string line;
  check(static_cast<bool>(std::getline(is, line)), "format error: empty report file");
  check(line == kReportHeader, "format error: unexpected report header");
  EvalReport out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.rows.push_back(ReportRow::from_csv_line(line));
  }
  return out;
}

}  // namespace ic::eval
