#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace icl {

// Shortest round-trip decimal for a double; identical bytes across runs.
std::string fmt_g17(double v);

// One sweep output row. CSV columns, in order:
// model,n_context,d,r,seed,mean_err,std_err,metric
struct ResultRow {
  std::string model;
  int n_context = 0;
  int d = 0;
  int r = 0;
  std::uint64_t seed = 0;
  double mean_err = 0.0;
  double std_err = 0.0;  // across-task standard error of the mean
  std::string metric;
};

extern const char* const kResultCsvHeader;

std::string to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);
// Throws ValidationError naming the offending line on malformed input.
std::vector<ResultRow> parse_result_csv(const std::string& text);
std::vector<ResultRow> read_csv(const std::string& path);

// Key/value report serialization in the same columnar CSV style:
// header "report,field,value", one row per field.
using ReportMap = std::vector<std::pair<std::string, std::map<std::string, std::string>>>;
std::string reports_to_csv(const ReportMap& reports);
ReportMap parse_reports_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace icl
