#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace rsn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Data matrix storage: column-compressed, one sample per column.
using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Base of every failure surfaced by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct NotPsd : Error { using Error::Error; };
struct ZeroMatrix : Error { using Error::Error; };
struct Degenerate : Error { using Error::Error; };
struct DegenerateColumn : Error { using Error::Error; };
struct AscentDetected : Error { using Error::Error; };
struct NotDescent : Error { using Error::Error; };
struct Unbounded : Error { using Error::Error; };
struct NonBinaryLabels : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct DoublePreprocess : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(const std::string& what, long line) : Error(what), line_number(line) {}
  long line_number;
};
struct NonMonotoneIndex : ParseError { using ParseError::ParseError; };

inline void require_finite(const Vector& v, const char* where) {
  if (!v.allFinite()) throw NonFinite(std::string(where) + ": vector has NaN/Inf entries");
}

}  // namespace rsn
