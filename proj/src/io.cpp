#include "icl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "icl/errors.hpp"

namespace icl {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* const kResultCsvHeader = "model,n_context,d,r,seed,mean_err,std_err,metric";

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << kResultCsvHeader << "\n";
  for (const ResultRow& r : rows) {
    out << r.model << ',' << r.n_context << ',' << r.d << ',' << r.r << ',' << r.seed << ','
        << fmt_g17(r.mean_err) << ',' << fmt_g17(r.std_err) << ',' << r.metric << "\n";
  }
  return out.str();
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  write_file(path, to_csv(rows));
}

namespace {
std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

long long parse_int(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("csv line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}
}  // namespace

std::vector<ResultRow> parse_result_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kResultCsvHeader)
        throw ValidationError("csv line 1: expected header '" + std::string(kResultCsvHeader) + "'");
      continue;
    }
    const auto fields = split_line(line, ',');
    if (fields.size() != 8)
      throw ValidationError("csv line " + std::to_string(line_no) + ": expected 8 fields, got " +
                            std::to_string(fields.size()));
    ResultRow r;
    r.model = fields[0];
    r.n_context = static_cast<int>(parse_int(fields[1], line_no));
    r.d = static_cast<int>(parse_int(fields[2], line_no));
    r.r = static_cast<int>(parse_int(fields[3], line_no));
    r.seed = static_cast<std::uint64_t>(parse_int(fields[4], line_no));
    r.mean_err = parse_double(fields[5], line_no);
    r.std_err = parse_double(fields[6], line_no);
    r.metric = fields[7];
    if (r.metric != "abs" && r.metric != "sq")
      throw ValidationError("csv line " + std::to_string(line_no) + ": metric must be abs or sq");
    rows.push_back(std::move(r));
  }
  if (line_no == 0) throw ValidationError("csv: empty input");
  return rows;
}

std::vector<ResultRow> read_csv(const std::string& path) {
  return parse_result_csv(read_file(path));
}

std::string reports_to_csv(const ReportMap& reports) {
  std::ostringstream out;
  out << "report,field,value\n";
  for (const auto& [name, fields] : reports)
    for (const auto& [key, value] : fields) out << name << ',' << key << ',' << value << "\n";
  return out.str();
}

ReportMap parse_reports_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  ReportMap reports;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "report,field,value")
        throw ValidationError("reports csv line 1: bad header");
      continue;
    }
    const auto fields = split_line(line, ',');
    if (fields.size() != 3)
      throw ValidationError("reports csv line " + std::to_string(line_no) + ": expected 3 fields");
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const auto& r) { return r.first == fields[0]; });
    if (it == reports.end()) {
      reports.push_back({fields[0], {}});
      it = std::prev(reports.end());
    }
    it->second[fields[1]] = fields[2];
  }
  return reports;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace icl
