#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rsn/solver.hpp"
#include "rsn/types.hpp"

namespace rsn {

/// A parsed dataset: samples are columns of A, one target per column.
struct Dataset {
  SparseMatrix a;  // d x n
  Vector targets;
  bool preprocessed = false;
  std::vector<Index> feature_ids;  // original 1-based feature ids after preprocessing; 0 = intercept
};

/// Reads `label idx:val idx:val ...` lines with 1-based strictly increasing
/// indices. Two-valued label sets are mapped onto {-1,+1} (smaller -> -1).
Dataset parse_libsvm(std::istream& in);
Dataset load_libsvm(const std::string& path);

void write_libsvm(std::ostream& out, const Dataset& data);

/// Drops all-zero feature rows and appends a constant-1 intercept row.
/// Refuses to run twice on the same data.
Dataset preprocess(const Dataset& raw);

inline constexpr const char* kTraceHeader = "k,f,grad_norm,step_size,sketch_size,wall_clock_seconds";

void write_trace(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace(const std::string& path);

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries);

std::string read_file(const std::string& path);

/// 17-significant-digit formatting: doubles survive a round trip exactly.
std::string format_g17(double v);

std::uint64_t fnv1a64(const std::string& bytes);

/// Digest of a trace with the wall-clock column masked, so timing jitter
/// never changes it.
std::uint64_t trace_digest(const std::vector<TraceRow>& rows);

}  // namespace rsn
