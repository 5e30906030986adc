#include "didcc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "didcc/error.hpp"

namespace didcc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Locator {
  std::size_t row = 0;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& column, const std::string& what) const {
    std::ostringstream os;
    os << "row " << row << " (line " << line << "), column '" << column << "': " << what;
    throw IngestionError(os.str());
  }
};

double parse_double(const std::string& raw, const std::string& column, const Locator& at) {
  const std::string s = trim(raw);
  if (s.empty()) at.fail(column, "missing value");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) at.fail(column, "cannot parse '" + s + "' as a number");
  if (!std::isfinite(v)) at.fail(column, "non-finite value '" + s + "'");
  return v;
}

long long parse_integer(const std::string& raw, const std::string& column, const Locator& at) {
  const std::string s = trim(raw);
  if (s.empty()) at.fail(column, "missing value");
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  // Accept integral values written as decimals, e.g. "2.0".
  const double d = parse_double(s, column, at);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) at.fail(column, "expected an integer, got '" + s + "'");
  return static_cast<long long>(d);
}

int parse_binary(const std::string& raw, const std::string& column, const Locator& at) {
  const long long v = parse_integer(raw, column, at);
  if (v != 0 && v != 1) at.fail(column, "value " + std::to_string(v) + " is not 0 or 1");
  return static_cast<int>(v);
}

}  // namespace

void ColumnMapping::validate() const {
  if (outcome.empty() || treatment.empty() || period.empty()) {
    throw ConfigError("column mapping needs outcome, treatment and period columns");
  }
  std::set<std::string> seen;
  auto add = [&](const std::string& name) {
    if (name.empty()) throw ConfigError("column mapping contains an empty column name");
    if (!seen.insert(name).second) throw ConfigError("column '" + name + "' is mapped more than once");
  };
  add(outcome);
  add(treatment);
  add(period);
  for (const auto& c : continuous) add(c);
  for (const auto& c : unordered) add(c);
  for (const auto& c : ordered) add(c);
  if (cluster) add(*cluster);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

IngestResult ingest_csv(std::istream& in, const ColumnMapping& mapping, const IngestOptions& options) {
  mapping.validate();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw IngestionError("input has no header row");
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string name = trim(header[k]);
    if (!column.emplace(name, k).second) throw IngestionError("duplicate header column '" + name + "'");
  }
  auto find = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) throw IngestionError("missing column '" + name + "' in header");
    return it->second;
  };
  const std::size_t iy = find(mapping.outcome);
  const std::size_t id = find(mapping.treatment);
  const std::size_t it = find(mapping.period);
  std::vector<std::size_t> ic, iu, io;
  for (const auto& c : mapping.continuous) ic.push_back(find(c));
  for (const auto& c : mapping.unordered) iu.push_back(find(c));
  for (const auto& c : mapping.ordered) io.push_back(find(c));
  const std::optional<std::size_t> ig = mapping.cluster ? std::optional(find(*mapping.cluster)) : std::nullopt;

  IngestResult out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++row;
    const Locator at{row, line_no};
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "row " << row << " (line " << line_no << "): expected " << header.size() << " fields, found "
         << fields.size();
      throw IngestionError(os.str());
    }
    Sample s;
    s.y = parse_double(fields[iy], mapping.outcome, at);
    s.d = parse_binary(fields[id], mapping.treatment, at);
    s.t = parse_binary(fields[it], mapping.period, at);
    for (std::size_t k = 0; k < ic.size(); ++k) s.x_c.push_back(parse_double(fields[ic[k]], mapping.continuous[k], at));
    for (std::size_t k = 0; k < iu.size(); ++k) {
      s.x_u.push_back(static_cast<int>(parse_integer(fields[iu[k]], mapping.unordered[k], at)));
    }
    for (std::size_t k = 0; k < io.size(); ++k) {
      s.x_o.push_back(static_cast<int>(parse_integer(fields[io[k]], mapping.ordered[k], at)));
    }
    if (ig) s.cluster = parse_integer(fields[*ig], *mapping.cluster, at);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw IngestionError("input has no data rows");

  out.continuous_ranges.resize(ic.size());
  for (std::size_t k = 0; k < ic.size(); ++k) {
    ColumnRange r{out.samples.front().x_c[k], out.samples.front().x_c[k]};
    for (const auto& s : out.samples) {
      r.min = std::min(r.min, s.x_c[k]);
      r.max = std::max(r.max, s.x_c[k]);
    }
    out.continuous_ranges[k] = r;
    if (!options.rescale) continue;
    const double span = r.max - r.min;
    for (auto& s : out.samples) s.x_c[k] = span > 0.0 ? (s.x_c[k] - r.min) / span : 0.0;
  }
  return out;
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping,
                        const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open input file '" + path.string() + "'");
  return ingest_csv(in, mapping, options);
}

}  // namespace didcc
