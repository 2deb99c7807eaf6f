#pragma once

#include <cstdint>
#include <vector>

#include "rsn/linalg.hpp"
#include "rsn/rng.hpp"
#include "rsn/types.hpp"

namespace rsn {

class GlmObjective;

enum class SketchVariant { identity, coordinate_block, single_column, gaussian_dense };

/// A sampled sketching matrix S in R^{d x s}, stored structurally.
struct SketchMatrix {
  SketchVariant variant;
  Index dim = 0;               // d
  std::vector<Index> indices;  // coordinate_block: sorted distinct rows; single_column: {source column}
  Matrix dense;                // gaussian_dense: d x s; single_column: the column as d x 1

  Index rows() const { return dim; }
  Index cols() const {
    switch (variant) {
      case SketchVariant::identity: return dim;
      case SketchVariant::coordinate_block: return static_cast<Index>(indices.size());
      case SketchVariant::single_column: return 1;
      case SketchVariant::gaussian_dense: return dense.cols();
    }
    return 0;
  }
};

enum class SketchKind { identity, coordinate_block, single_column, uniform_coordinate, gaussian };

/// Immutable description of a sketch distribution. sample() is a pure
/// function of (dist, k), so runs are replayable and iterations independent.
struct SketchDistribution {
  SketchKind kind;
  Index dim = 0;   // d
  Index size = 0;  // s; 1 for single-column and uniform-coordinate
  std::uint64_t seed = 0;
  std::uint64_t stream = kStreamSketch;
  Matrix directions;               // single-column: D (d x m); empty means D = I
  Vector probabilities;            // single-column: length m
  std::vector<double> cumulative;  // prefix sums of probabilities
};

SketchDistribution make_identity_sketch(Index d);

/// Uniform without-replacement coordinate blocks; s = d collapses to identity.
SketchDistribution make_coordinate_sketch(Index d, Index s, std::uint64_t seed,
                                          std::uint64_t stream = kStreamSketch);

SketchDistribution make_uniform_coordinate_sketch(Index d, std::uint64_t seed,
                                                  std::uint64_t stream = kStreamSketch);

/// Dense sketch with i.i.d. standard normal entries (unscaled; the update is
/// invariant to column scaling).
SketchDistribution make_gaussian_sketch(Index d, Index s, std::uint64_t seed,
                                        std::uint64_t stream = kStreamSketch);

/// Single-column sketch over the columns of the identity (canonical D).
SketchDistribution make_single_column_sketch(Vector probabilities, std::uint64_t seed,
                                             std::uint64_t stream = kStreamSketch);

/// Single-column sketch over the columns of an explicit direction matrix D.
SketchDistribution make_single_column_sketch(Matrix directions, Vector probabilities,
                                             std::uint64_t seed,
                                             std::uint64_t stream = kStreamSketch);

/// Column-selection weights p_i proportional to d_i^T U d_i for PSD U.
Vector corollary1_probabilities(const Matrix& directions, const Matrix& u);

SketchMatrix sample(const SketchDistribution& dist, std::uint64_t k);

/// S^T v. Coordinate variants touch only the selected rows.
Vector sketch_transpose_vec(const SketchMatrix& s, const Vector& v);

/// S lam, scattered back into R^d.
Vector expand(const SketchMatrix& s, const Vector& lam);

/// S^T S.
Matrix gram(const SketchMatrix& s);

/// Explicit d x s matrix; diagnostic use only.
Matrix to_dense(const SketchMatrix& s);

/// True iff rank(S^T H(x) S) = rank(S) at every probe point.
bool check_nullspace_preserving(const SketchMatrix& s, const GlmObjective& obj,
                                const std::vector<Vector>& probes,
                                double rank_tol = kDefaultRankTol);

}  // namespace rsn
