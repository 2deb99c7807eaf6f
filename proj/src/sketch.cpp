#include "rsn/sketch.hpp"

#include <algorithm>
#include <numeric>

#include "rsn/glm.hpp"

namespace rsn {

namespace {

std::vector<double> prefix_sums(const Vector& p) {
  std::vector<double> cum(static_cast<std::size_t>(p.size()));
  double running = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    running += p(i);
    cum[static_cast<std::size_t>(i)] = running;
  }
  return cum;
}

Index pick_column(const SketchDistribution& dist, CounterRng& rng) {
  double u = rng.uniform() * dist.cumulative.back();
  auto it = std::upper_bound(dist.cumulative.begin(), dist.cumulative.end(), u);
  if (it == dist.cumulative.end()) --it;
  return static_cast<Index>(it - dist.cumulative.begin());
}

}  // namespace

SketchDistribution make_identity_sketch(Index d) {
  if (d < 1) throw DimensionMismatch("identity sketch: d must be positive");
  SketchDistribution dist;
  dist.kind = SketchKind::identity;
  dist.dim = d;
  dist.size = d;
  return dist;
}

SketchDistribution make_coordinate_sketch(Index d, Index s, std::uint64_t seed,
                                          std::uint64_t stream) {
  if (d < 1 || s < 1 || s > d)
    throw DimensionMismatch("coordinate sketch: need 1 <= s <= d");
  if (s == d) return make_identity_sketch(d);  // the full block is deterministic
  SketchDistribution dist;
  dist.kind = SketchKind::coordinate_block;
  dist.dim = d;
  dist.size = s;
  dist.seed = seed;
  dist.stream = stream;
  return dist;
}

SketchDistribution make_uniform_coordinate_sketch(Index d, std::uint64_t seed,
                                                  std::uint64_t stream) {
  if (d < 1) throw DimensionMismatch("uniform coordinate sketch: d must be positive");
  SketchDistribution dist;
  dist.kind = SketchKind::uniform_coordinate;
  dist.dim = d;
  dist.size = 1;
  dist.seed = seed;
  dist.stream = stream;
  return dist;
}

SketchDistribution make_gaussian_sketch(Index d, Index s, std::uint64_t seed,
                                        std::uint64_t stream) {
  if (d < 1 || s < 1 || s > d)
    throw DimensionMismatch("gaussian sketch: need 1 <= s <= d");
  SketchDistribution dist;
  dist.kind = SketchKind::gaussian;
  dist.dim = d;
  dist.size = s;
  dist.seed = seed;
  dist.stream = stream;
  return dist;
}

namespace {

SketchDistribution make_single_column_impl(Matrix directions, Vector probabilities,
                                           Index d, std::uint64_t seed, std::uint64_t stream) {
  if (probabilities.size() < 1)
    throw DimensionMismatch("single-column sketch: empty probability vector");
  if (!probabilities.allFinite())
    throw NonFinite("single-column sketch: probabilities have NaN/Inf");
  for (Index i = 0; i < probabilities.size(); ++i)
    if (probabilities(i) <= 0)
      throw Degenerate("single-column sketch: probabilities must be strictly positive");
  SketchDistribution dist;
  dist.kind = SketchKind::single_column;
  dist.dim = d;
  dist.size = 1;
  dist.seed = seed;
  dist.stream = stream;
  dist.directions = std::move(directions);
  probabilities /= probabilities.sum();
  dist.cumulative = prefix_sums(probabilities);
  dist.probabilities = std::move(probabilities);
  return dist;
}

}  // namespace

SketchDistribution make_single_column_sketch(Vector probabilities, std::uint64_t seed,
                                             std::uint64_t stream) {
  Index d = probabilities.size();
  return make_single_column_impl(Matrix(), std::move(probabilities), d, seed, stream);
}

SketchDistribution make_single_column_sketch(Matrix directions, Vector probabilities,
                                             std::uint64_t seed, std::uint64_t stream) {
  if (directions.cols() != probabilities.size())
    throw DimensionMismatch("single-column sketch: one probability per column required");
  for (Index j = 0; j < directions.cols(); ++j)
    if (directions.col(j).norm() == 0)
      throw DegenerateColumn("single-column sketch: zero direction column");
  Index d = directions.rows();
  return make_single_column_impl(std::move(directions), std::move(probabilities), d, seed, stream);
}

Vector corollary1_probabilities(const Matrix& directions, const Matrix& u) {
  if (u.rows() != u.cols() || u.rows() != directions.rows())
    throw DimensionMismatch("corollary1_probabilities: U must be square with dim(U) = rows(D)");
  Vector weights(directions.cols());
  for (Index j = 0; j < directions.cols(); ++j) {
    weights(j) = directions.col(j).dot(u.selfadjointView<Eigen::Lower>() * directions.col(j));
    if (weights(j) <= 0)
      throw DegenerateColumn("corollary1_probabilities: column with nonpositive weight d^T U d");
  }
  return weights / weights.sum();
}

SketchMatrix sample(const SketchDistribution& dist, std::uint64_t k) {
  CounterRng rng(dist.seed, dist.stream, k);
  SketchMatrix s;
  s.dim = dist.dim;
  switch (dist.kind) {
    case SketchKind::identity:
      s.variant = SketchVariant::identity;
      break;
    case SketchKind::coordinate_block:
      s.variant = SketchVariant::coordinate_block;
      s.indices = rng.sorted_subset(dist.dim, dist.size);
      break;
    case SketchKind::uniform_coordinate:
      s.variant = SketchVariant::coordinate_block;
      s.indices = {static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(dist.dim)))};
      break;
    case SketchKind::gaussian:
      s.variant = SketchVariant::gaussian_dense;
      s.dense.resize(dist.dim, dist.size);
      for (Index j = 0; j < dist.size; ++j)
        for (Index i = 0; i < dist.dim; ++i) s.dense(i, j) = rng.gaussian();
      break;
    case SketchKind::single_column: {
      s.variant = SketchVariant::single_column;
      Index col = pick_column(dist, rng);
      s.indices = {col};
      if (dist.directions.size() > 0)
        s.dense = dist.directions.col(col);
      else
        s.dense = Vector::Unit(dist.dim, col);
      break;
    }
  }
  return s;
}

Vector sketch_transpose_vec(const SketchMatrix& s, const Vector& v) {
  if (v.size() != s.dim) throw DimensionMismatch("sketch_transpose_vec: length(v) != d");
  switch (s.variant) {
    case SketchVariant::identity:
      return v;
    case SketchVariant::coordinate_block: {
      Vector out(s.cols());
      for (Index j = 0; j < out.size(); ++j) out(j) = v(s.indices[static_cast<std::size_t>(j)]);
      return out;
    }
    case SketchVariant::single_column:
      return Vector::Constant(1, s.dense.col(0).dot(v));
    case SketchVariant::gaussian_dense:
      return s.dense.transpose() * v;
  }
  throw DimensionMismatch("sketch_transpose_vec: invalid variant");
}

Vector expand(const SketchMatrix& s, const Vector& lam) {
  if (lam.size() != s.cols()) throw DimensionMismatch("expand: length(lam) != s");
  switch (s.variant) {
    case SketchVariant::identity:
      return lam;
    case SketchVariant::coordinate_block: {
      Vector out = Vector::Zero(s.dim);
      for (Index j = 0; j < lam.size(); ++j) out(s.indices[static_cast<std::size_t>(j)]) = lam(j);
      return out;
    }
    case SketchVariant::single_column:
      return s.dense.col(0) * lam(0);
    case SketchVariant::gaussian_dense:
      return s.dense * lam;
  }
  throw DimensionMismatch("expand: invalid variant");
}

Matrix gram(const SketchMatrix& s) {
  switch (s.variant) {
    case SketchVariant::identity:
    case SketchVariant::coordinate_block:
      return Matrix::Identity(s.cols(), s.cols());
    case SketchVariant::single_column:
      return Matrix::Constant(1, 1, s.dense.col(0).squaredNorm());
    case SketchVariant::gaussian_dense:
      return s.dense.transpose() * s.dense;
  }
  throw DimensionMismatch("gram: invalid variant");
}

Matrix to_dense(const SketchMatrix& s) {
  switch (s.variant) {
    case SketchVariant::identity:
      return Matrix::Identity(s.dim, s.dim);
    case SketchVariant::coordinate_block: {
      Matrix out = Matrix::Zero(s.dim, s.cols());
      for (Index j = 0; j < out.cols(); ++j) out(s.indices[static_cast<std::size_t>(j)], j) = 1.0;
      return out;
    }
    case SketchVariant::single_column:
      return s.dense;
    case SketchVariant::gaussian_dense:
      return s.dense;
  }
  throw DimensionMismatch("to_dense: invalid variant");
}

bool check_nullspace_preserving(const SketchMatrix& s, const GlmObjective& obj,
                                const std::vector<Vector>& probes, double rank_tol) {
  Index rank_s = spectral_rank(gram(s), rank_tol);
  for (const Vector& x : probes) {
    Matrix m = sketched_hessian(obj, x, s);
    if (spectral_rank(m, rank_tol) != rank_s) return false;
  }
  return true;
}

}  // namespace rsn
