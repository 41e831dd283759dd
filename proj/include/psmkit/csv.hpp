#pragma once

// File schemas: allocation draws, PSMs, partitions, responses, kernel
// weights, categorical data and result tables. Numbers are written with
// 17 significant digits so write(read(x)) reproduces canonical files.

#include "psmkit/common.hpp"
#include "psmkit/psm.hpp"
#include "psmkit/simplemkl.hpp"
#include "psmkit/synthetic.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace psmkit::csv {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

// Line-oriented reader that reports "source:line" in errors and skips blank lines.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      fields = split(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << source_ << ":" << line_ << ": " << what;
    throw DataError(msg.str());
  }

  template <typename T>
  T number(const std::string& field, const char* what) const {
    auto v = parse_number<T>(field);
    if (!v) fail(std::string("expected ") + what + ", got '" + field + "'");
    return *v;
  }

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

inline bool all_integers(const std::vector<std::string>& fields) {
  for (const auto& f : fields)
    if (!parse_number<long long>(f)) return false;
  return true;
}

// ---- allocation draws: one row per draw, one column per item ----

inline AllocationSampleSet read_allocations(std::istream& in, const std::string& source) {
  Reader r(in, source);
  std::vector<std::string> fields;
  std::vector<std::vector<long long>> rows;
  std::size_t width = 0;
  bool first = true;
  while (r.next(fields)) {
    if (first && !all_integers(fields)) {
      first = false;
      width = fields.size();
      continue;  // header item_1,...,item_N
    }
    first = false;
    if (width == 0) width = fields.size();
    if (fields.size() != width) r.fail("expected " + std::to_string(width) + " columns, got " + std::to_string(fields.size()));
    std::vector<long long> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(r.number<long long>(f, "integer cluster label"));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) r.fail("no allocation draws found");
  return AllocationSampleSet(std::move(rows));
}

inline void write_allocations(std::ostream& out, const AllocationSampleSet& draws, bool header = true) {
  if (header) {
    for (std::size_t i = 0; i < draws.n_items(); ++i) out << (i ? "," : "") << "item_" << i + 1;
    out << '\n';
  }
  for (const auto& row : draws.labels()) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

// ---- square matrices (PSMs): N rows x N columns, no header ----

inline Matrix read_matrix(std::istream& in, const std::string& source) {
  Reader r(in, source);
  std::vector<std::string> fields;
  std::vector<std::vector<double>> rows;
  while (r.next(fields)) {
    if (!rows.empty() && fields.size() != rows.front().size())
      r.fail("expected " + std::to_string(rows.front().size()) + " columns, got " + std::to_string(fields.size()));
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(r.number<double>(f, "decimal"));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) r.fail("empty matrix");
  if (rows.size() != rows.front().size())
    r.fail("matrix is " + std::to_string(rows.size()) + "x" + std::to_string(rows.front().size()) + ", expected square");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

// Reads a PSM and repairs round-off; schema and kernel violations become DataError.
inline SimilarityKernel read_psm(std::istream& in, const std::string& source, double psd_tol = kDefaultPsdTolerance) {
  Matrix m = read_matrix(in, source);
  try {
    return clamp_to_kernel(m, psd_tol, source);
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(source + ": " + e.what());
  }
}

// ---- two-column item tables: `item,label` and `item,class` ----

struct ItemColumn {
  std::vector<std::string> items;
  std::vector<std::string> values;
  std::vector<std::size_t> lines;  // file line of each row
};

inline ItemColumn read_item_column(std::istream& in, const std::string& source, const std::string& value_name) {
  Reader r(in, source);
  std::vector<std::string> fields;
  ItemColumn col;
  bool first = true;
  while (r.next(fields)) {
    if (fields.size() != 2) r.fail("expected 2 columns (item," + value_name + "), got " + std::to_string(fields.size()));
    if (first && fields[0] == "item") {
      first = false;
      continue;
    }
    first = false;
    col.items.push_back(fields[0]);
    col.values.push_back(fields[1]);
    col.lines.push_back(r.line());
  }
  if (col.items.empty()) r.fail("no rows found");
  return col;
}

inline Partition read_partition(std::istream& in, const std::string& source) {
  const auto col = read_item_column(in, source, "label");
  std::vector<long long> labels;
  for (std::size_t i = 0; i < col.values.size(); ++i) {
    auto v = parse_number<long long>(col.values[i]);
    if (!v) throw DataError(source + ":" + std::to_string(col.lines[i]) + ": expected integer label, got '" + col.values[i] + "'");
    labels.push_back(*v);
  }
  return make_partition(labels);
}

inline void write_partition(std::ostream& out, const Partition& p) {
  out << "item,label\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << i + 1 << ',' << p.labels[i] + 1 << '\n';
}

inline ResponseVector read_response(std::istream& in, const std::string& source) {
  return make_response(read_item_column(in, source, "class").values);
}

inline void write_response(std::ostream& out, const std::vector<int>& y) {
  out << "item,class\n";
  for (std::size_t i = 0; i < y.size(); ++i) out << i + 1 << ',' << y[i] << '\n';
}

// ---- kernel weights: N rows x M columns, then a row of column means ----

inline void write_weights(std::ostream& out, const Matrix& weights) {
  write_matrix(out, weights);
  const Vector means = weights.colwise().mean().transpose();
  for (Eigen::Index m = 0; m < means.size(); ++m) out << (m ? "," : "") << format_double(means(m));
  out << '\n';
}

// Global weights are written as a single row.
inline void write_global_weights(std::ostream& out, const Vector& theta) {
  for (Eigen::Index m = 0; m < theta.size(); ++m) out << (m ? "," : "") << format_double(theta(m));
  out << '\n';
}

// ---- categorical data: header, integer columns, optional truth/response ----

struct CategoricalData {
  std::vector<std::vector<int>> values;
  std::optional<std::vector<long long>> truth;
  std::optional<std::vector<int>> response;
};

inline CategoricalData read_categorical(std::istream& in, const std::string& source) {
  Reader r(in, source);
  std::vector<std::string> fields;
  CategoricalData data;
  std::vector<std::string> header;
  std::ptrdiff_t truth_col = -1, response_col = -1;
  std::size_t width = 0;
  bool first = true;
  while (r.next(fields)) {
    if (first) {
      first = false;
      width = fields.size();
      if (!all_integers(fields)) {
        header = fields;
        for (std::size_t c = 0; c < header.size(); ++c) {
          if (header[c] == "truth") truth_col = static_cast<std::ptrdiff_t>(c);
          if (header[c] == "response") response_col = static_cast<std::ptrdiff_t>(c);
        }
        if (truth_col >= 0) data.truth.emplace();
        if (response_col >= 0) data.response.emplace();
        continue;
      }
    }
    if (fields.size() != width) r.fail("expected " + std::to_string(width) + " columns, got " + std::to_string(fields.size()));
    std::vector<int> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = r.number<long long>(fields[c], "integer");
      if (static_cast<std::ptrdiff_t>(c) == truth_col) {
        data.truth->push_back(v);
      } else if (static_cast<std::ptrdiff_t>(c) == response_col) {
        data.response->push_back(static_cast<int>(v));
      } else {
        if (v < 0) r.fail("categories must be nonnegative, got " + fields[c]);
        row.push_back(static_cast<int>(v));
      }
    }
    data.values.push_back(std::move(row));
  }
  if (data.values.empty()) r.fail("no data rows found");
  return data;
}

inline void write_categorical(std::ostream& out, const SyntheticDataset& ds) {
  const std::size_t p = ds.data.empty() ? 0 : ds.data.front().size();
  for (std::size_t j = 0; j < p; ++j) out << "x" << j + 1 << ',';
  out << "truth,response\n";
  for (std::size_t i = 0; i < ds.data.size(); ++i) {
    for (int v : ds.data[i]) out << v << ',';
    out << ds.truth.labels[i] + 1 << ',' << ds.response[i] << '\n';
  }
}

// ---- file helpers ----

template <typename F>
auto with_input(const std::string& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file for reading");
  return f(in, path);
}

template <typename F>
void with_output(const std::string& path, F&& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open file for writing");
  f(out);
  out.flush();
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace psmkit::csv
