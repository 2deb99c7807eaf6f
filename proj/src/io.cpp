#include "rsn/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/SparseCore>

namespace rsn {

namespace {

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size() && errno == 0;
}

bool parse_index(const std::string& token, long& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtol(token.c_str(), &end, 10);
  return end == token.c_str() + token.size() && errno == 0;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(current);
  return out;
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> labels;
  Index d = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line
    double label;
    if (!parse_double(token, label))
      throw ParseError("bad label '" + token + "'", line_no);
    Index sample = static_cast<Index>(labels.size());
    labels.push_back(label);
    long previous = 0;
    while (tokens >> token) {
      std::size_t colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("feature without ':' separator: '" + token + "'", line_no);
      long index;
      double val;
      if (!parse_index(token.substr(0, colon), index) || index < 1)
        throw ParseError("bad feature index in '" + token + "'", line_no);
      if (!parse_double(token.substr(colon + 1), val))
        throw ParseError("bad feature value in '" + token + "'", line_no);
      if (index <= previous)
        throw NonMonotoneIndex("feature indices must be strictly increasing, got " +
                                   std::to_string(index) + " after " + std::to_string(previous),
                               line_no);
      previous = index;
      d = std::max(d, static_cast<Index>(index));
      entries.emplace_back(static_cast<Index>(index - 1), sample, val);
    }
  }

  Dataset data;
  Index n = static_cast<Index>(labels.size());
  data.a = SparseMatrix(d, n);
  data.a.setFromTriplets(entries.begin(), entries.end());
  data.a.makeCompressed();
  data.targets.resize(n);
  for (Index i = 0; i < n; ++i) data.targets(i) = labels[static_cast<std::size_t>(i)];

  std::set<double> distinct(labels.begin(), labels.end());
  if (distinct.size() == 2) {
    double lo = *distinct.begin();
    double hi = *distinct.rbegin();
    for (Index i = 0; i < n; ++i) data.targets(i) = data.targets(i) == lo ? -1.0 : 1.0;
  }
  return data;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (Index j = 0; j < data.a.cols(); ++j) {
    out << format_g17(data.targets(j));
    for (SparseMatrix::InnerIterator it(data.a, j); it; ++it)
      out << ' ' << (it.row() + 1) << ':' << format_g17(it.value());
    out << '\n';
  }
  if (!out) throw IoError("write failure while emitting dataset");
}

Dataset preprocess(const Dataset& raw) {
  if (raw.preprocessed)
    throw DoublePreprocess("dataset already has its intercept row appended");
  Index n = raw.a.cols();
  if (n < 1) throw EmptyDataset("dataset has no samples");

  std::vector<bool> live(static_cast<std::size_t>(raw.a.rows()), false);
  for (Index j = 0; j < n; ++j)
    for (SparseMatrix::InnerIterator it(raw.a, j); it; ++it)
      if (it.value() != 0) live[static_cast<std::size_t>(it.row())] = true;

  std::vector<Index> new_row(static_cast<std::size_t>(raw.a.rows()), -1);
  Dataset out;
  Index kept = 0;
  for (Index r = 0; r < raw.a.rows(); ++r)
    if (live[static_cast<std::size_t>(r)]) {
      new_row[static_cast<std::size_t>(r)] = kept++;
      out.feature_ids.push_back(r + 1);
    }
  out.feature_ids.push_back(0);  // intercept

  std::vector<Eigen::Triplet<double>> entries;
  for (Index j = 0; j < n; ++j)
    for (SparseMatrix::InnerIterator it(raw.a, j); it; ++it)
      if (it.value() != 0)
        entries.emplace_back(new_row[static_cast<std::size_t>(it.row())], j, it.value());
  for (Index j = 0; j < n; ++j) entries.emplace_back(kept, j, 1.0);

  out.a = SparseMatrix(kept + 1, n);
  out.a.setFromTriplets(entries.begin(), entries.end());
  out.a.makeCompressed();
  out.targets = raw.targets;
  out.preprocessed = true;
  return out;
}

std::string format_g17(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

namespace {

std::string format_row(const TraceRow& row, bool mask_wall) {
  std::ostringstream line;
  line << row.k << ',' << format_g17(row.f) << ',' << format_g17(row.grad_norm) << ','
       << format_g17(row.step_size) << ',' << row.sketch_size << ','
       << format_g17(mask_wall ? 0.0 : row.wall_clock_seconds);
  return line.str();
}

}  // namespace

void write_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace file for writing: " + path);
  out << kTraceHeader << '\n';
  for (const TraceRow& row : rows) out << format_row(row, false) << '\n';
  out.flush();
  if (!out) throw IoError("write failure on trace file: " + path);
}

std::vector<TraceRow> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("trace file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw SchemaMismatch("unexpected trace header '" + line + "' in " + path);

  std::vector<TraceRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 6)
      throw SchemaMismatch("expected 6 columns, got " + std::to_string(fields.size()) +
                           " at line " + std::to_string(line_no));
    TraceRow row;
    long k, sketch;
    if (!parse_index(fields[0], k) || !parse_double(fields[1], row.f) ||
        !parse_double(fields[2], row.grad_norm) || !parse_double(fields[3], row.step_size) ||
        !parse_index(fields[4], sketch) || !parse_double(fields[5], row.wall_clock_seconds))
      throw ParseError("bad trace row", line_no);
    row.k = static_cast<Index>(k);
    row.sketch_size = static_cast<Index>(sketch);
    rows.push_back(row);
  }
  return rows;
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  for (const auto& [key, val] : entries) out << key << '=' << val << '\n';
  out.flush();
  if (!out) throw IoError("write failure on file: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t trace_digest(const std::vector<TraceRow>& rows) {
  std::ostringstream buffer;
  buffer << kTraceHeader << '\n';
  for (const TraceRow& row : rows) buffer << format_row(row, true) << '\n';
  return fnv1a64(buffer.str());
}

}  // namespace rsn
