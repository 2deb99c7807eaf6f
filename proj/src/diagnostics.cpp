#include "rsn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "rsn/linalg.hpp"
#include "rsn/rng.hpp"
#include "rsn/solver.hpp"

namespace rsn {

namespace {

Matrix sqrt_psd(const Matrix& h, double rank_tol) {
  EigenDecomposition ed = eigh(h);
  require_psd(ed.eigenvalues, rank_tol, "projection");
  Vector roots = ed.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return ed.eigenvectors * roots.asDiagonal() * ed.eigenvectors.transpose();
}

// P = W (W^T W)^+ W^T with W = H^{1/2} S; numerically the orthogonal
// projector onto range(W).
Matrix projection_from_root(const Matrix& h_half, const SketchMatrix& s, double rank_tol) {
  Matrix w = h_half * to_dense(s);
  Matrix gram_w = w.transpose() * w;
  return w * pseudo_inverse(gram_w, rank_tol) * w.transpose();
}

// Visits every outcome of a finite-support distribution with its probability.
template <typename Visitor>
Index enumerate_outcomes(const SketchDistribution& dist, Visitor&& visit) {
  switch (dist.kind) {
    case SketchKind::identity: {
      SketchMatrix s;
      s.variant = SketchVariant::identity;
      s.dim = dist.dim;
      visit(1.0, s);
      return 1;
    }
    case SketchKind::uniform_coordinate: {
      double p = 1.0 / static_cast<double>(dist.dim);
      for (Index i = 0; i < dist.dim; ++i) {
        SketchMatrix s;
        s.variant = SketchVariant::coordinate_block;
        s.dim = dist.dim;
        s.indices = {i};
        visit(p, s);
      }
      return dist.dim;
    }
    case SketchKind::single_column: {
      Index m = dist.probabilities.size();
      for (Index i = 0; i < m; ++i) {
        SketchMatrix s;
        s.variant = SketchVariant::single_column;
        s.dim = dist.dim;
        s.indices = {i};
        s.dense = dist.directions.size() > 0 ? Matrix(dist.directions.col(i))
                                             : Matrix(Vector::Unit(dist.dim, i));
        visit(dist.probabilities(i), s);
      }
      return m;
    }
    case SketchKind::coordinate_block: {
      double count = 1.0;
      for (Index i = 0; i < dist.size; ++i)
        count *= static_cast<double>(dist.dim - i) / static_cast<double>(i + 1);
      if (count > 100000.0)
        throw TooLarge("expected_projection: too many coordinate subsets to enumerate");
      Index total = static_cast<Index>(std::llround(count));
      double p = 1.0 / count;
      std::vector<Index> subset(static_cast<std::size_t>(dist.size));
      for (Index i = 0; i < dist.size; ++i) subset[static_cast<std::size_t>(i)] = i;
      while (true) {
        SketchMatrix s;
        s.variant = SketchVariant::coordinate_block;
        s.dim = dist.dim;
        s.indices = subset;
        visit(p, s);
        // next lexicographic s-subset of {0..d-1}
        Index pos = dist.size - 1;
        while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == dist.dim - dist.size + pos)
          --pos;
        if (pos < 0) break;
        ++subset[static_cast<std::size_t>(pos)];
        for (Index j = pos + 1; j < dist.size; ++j)
          subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
      }
      return total;
    }
    case SketchKind::gaussian:
      throw TooLarge("expected_projection: gaussian sketches have no finite support");
  }
  throw DimensionMismatch("expected_projection: invalid distribution");
}

}  // namespace

Matrix projection_matrix(const GlmObjective& obj, const Vector& x, const SketchMatrix& s,
                         double rank_tol) {
  Matrix h_half = sqrt_psd(dense_hessian(obj, x), rank_tol);
  return projection_from_root(h_half, s, rank_tol);
}

Matrix expected_projection(const GlmObjective& obj, const Vector& x,
                           const SketchDistribution& dist, ExpectationMode mode,
                           Index mc_samples, Index dim_cap) {
  if (obj.dim() > dim_cap)
    throw TooLarge("expected_projection: dimension exceeds the diagnostic cap");
  Matrix h_half = sqrt_psd(dense_hessian(obj, x), kDefaultRankTol);
  Matrix acc = Matrix::Zero(obj.dim(), obj.dim());
  if (mode == ExpectationMode::exact) {
    enumerate_outcomes(dist, [&](double p, const SketchMatrix& s) {
      acc += p * projection_from_root(h_half, s, kDefaultRankTol);
    });
  } else {
    if (mc_samples < 1) throw DimensionMismatch("expected_projection: mc_samples must be >= 1");
    for (Index n = 0; n < mc_samples; ++n)
      acc += projection_from_root(h_half, sample(dist, static_cast<std::uint64_t>(n)),
                                  kDefaultRankTol);
    acc /= static_cast<double>(mc_samples);
  }
  return ((acc + acc.transpose()) * 0.5).eval();
}

RhoEstimate rho_at(const GlmObjective& obj, const Vector& x, const SketchDistribution& dist,
                   ExpectationMode mode, Index mc_samples, Index dim_cap, double rank_tol) {
  Matrix h = dense_hessian(obj, x);
  Index rank_h = spectral_rank(h, rank_tol);
  Matrix expectation = expected_projection(obj, x, dist, mode, mc_samples, dim_cap);
  EigenDecomposition ed = eigh(expectation);

  RhoEstimate est;
  est.mode = mode;
  if (mode == ExpectationMode::exact) {
    est.samples = enumerate_outcomes(dist, [](double, const SketchMatrix&) {});
  } else {
    est.samples = mc_samples;
  }
  if (rank_h == 0) {
    est.value = 0.0;
    est.exactness_verified = true;  // zero Hessian: nothing to project onto
    return est;
  }
  // rho is the eigenvalue at the rank(H) position from the top; exactness
  // holds when the expectation has that same rank.
  Index pos = obj.dim() - rank_h;
  est.value = std::max(0.0, ed.eigenvalues(pos));
  double rank_cutoff =
      mode == ExpectationMode::exact
          ? rank_tol * std::max(1.0, ed.eigenvalues(ed.eigenvalues.size() - 1))
          : 5.0 * std::sqrt(static_cast<double>(obj.dim()) / static_cast<double>(mc_samples));
  Index rank_e = 0;
  for (Index i = 0; i < ed.eigenvalues.size(); ++i)
    if (ed.eigenvalues(i) > rank_cutoff) ++rank_e;
  est.exactness_verified = rank_e == rank_h;

  if (mode == ExpectationMode::monte_carlo) {
    // Delta-method error bar: rho ~ q^T P q with q the eigenvector at rho;
    // replay the same draws to get the spread of that quadratic form.
    Vector q = ed.eigenvectors.col(pos);
    Matrix h_half = sqrt_psd(h, rank_tol);
    double sum = 0.0, sum_sq = 0.0;
    for (Index n = 0; n < mc_samples; ++n) {
      Matrix p = projection_from_root(h_half, sample(dist, static_cast<std::uint64_t>(n)),
                                      rank_tol);
      double v = q.dot(p * q);
      sum += v;
      sum_sq += v * v;
    }
    double mean = sum / static_cast<double>(mc_samples);
    double var = std::max(0.0, sum_sq / static_cast<double>(mc_samples) - mean * mean);
    est.std_error = std::sqrt(var / static_cast<double>(mc_samples));
  }
  return est;
}

RateReport rate_report(const std::vector<std::vector<double>>& gap_sequences, double rho,
                       const RelativeConstants& constants, double r_estimate) {
  RateReport report;
  report.theoretical_factor =
      std::min(1.0, std::max(0.0, 1.0 - rho * constants.mu_hat / constants.l_hat));
  report.iteration_coefficient =
      rho > 0 ? constants.l_hat / (rho * constants.mu_hat) : 0.0;
  report.sublinear_coefficient =
      rho > 0 && r_estimate > 0 ? 2.0 * constants.l_hat * r_estimate * r_estimate / rho : 0.0;

  double sum = 0.0, sum_sq = 0.0;
  Index count = 0;
  for (const auto& gaps : gap_sequences) {
    if (gaps.empty()) continue;
    double floor = 1e-15 * (1.0 + std::abs(gaps.front()));
    for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
      if (gaps[k] <= floor) continue;  // gap at rounding level, ratio meaningless
      double ratio = std::max(0.0, gaps[k + 1]) / gaps[k];
      sum += ratio;
      sum_sq += ratio * ratio;
      ++count;
    }
  }
  if (count > 0) {
    double mean = sum / static_cast<double>(count);
    double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
    report.empirical_factor = mean;
    report.empirical_std_error = std::sqrt(var / static_cast<double>(count));
    report.violation =
        mean > report.theoretical_factor + 3.0 * report.empirical_std_error;
  }
  return report;
}

ConstantsAudit verify_relative_constants(const GlmObjective& obj,
                                         const RelativeConstants& constants, Index pair_count,
                                         std::uint64_t seed, double slack) {
  if (!(obj.reg() > 0))
    throw Degenerate("verify_relative_constants: requires reg > 0 (definite Hessian)");
  if (pair_count < 1)
    throw DimensionMismatch("verify_relative_constants: pair_count must be >= 1");

  Vector x0 = Vector::Zero(obj.dim());
  double f0 = value(obj, x0);

  // Anchor near the minimizer so sampled pairs spread over the level set.
  SolverConfig anchor_config;
  anchor_config.method = Method::newton;
  anchor_config.step_mode = StepMode::line_search;
  anchor_config.tol = 1e-10;
  anchor_config.max_iter = 50;
  anchor_config.record_wall_clock = false;
  Vector x_ref = run(anchor_config, obj, make_identity_sketch(obj.dim()), x0).state.x;

  CounterRng rng(seed, kStreamDiagnostics, 0);
  double spread = (1.0 + x_ref.norm()) / std::sqrt(static_cast<double>(obj.dim()));
  auto draw_point = [&]() {
    for (int attempt = 0; attempt < 50; ++attempt) {
      double alpha = rng.uniform();
      double tau = rng.uniform();
      Vector candidate = x0 + alpha * (x_ref - x0);
      for (Index i = 0; i < candidate.size(); ++i)
        candidate(i) += tau * spread * rng.gaussian();
      if (value(obj, candidate) <= f0) return candidate;
    }
    // Segment points are always inside the level set by convexity.
    return Vector((x0 + 0.5 * (x_ref - x0)).eval());
  };

  ConstantsAudit audit;
  audit.worst_upper_slack = -std::numeric_limits<double>::infinity();
  audit.worst_lower_slack = -std::numeric_limits<double>::infinity();
  bool have_witness = false;
  for (Index i = 0; i < pair_count; ++i) {
    Vector x = draw_point();
    Vector y = draw_point();
    Vector diff = x - y;
    double fx = value(obj, x);
    double base = value(obj, y) + gradient(obj, y).dot(diff);
    double quad_y = hessian_quadratic(obj, y, diff);
    double tolerance = slack * (1.0 + std::abs(fx));

    double upper_slack = fx - (base + 0.5 * constants.l_hat * quad_y);
    double lower_slack = (base + 0.5 * constants.mu_hat * quad_y) - fx;
    audit.worst_upper_slack = std::max(audit.worst_upper_slack, upper_slack);
    audit.worst_lower_slack = std::max(audit.worst_lower_slack, lower_slack);

    bool violated = false;
    if (upper_slack > tolerance) {
      ++audit.upper_violations;
      violated = true;
    }
    if (lower_slack > tolerance) {
      ++audit.lower_violations;
      violated = true;
    }
    if (violated && !have_witness) {
      audit.witness_x = x;
      audit.witness_y = y;
      audit.witness_gap = std::max(upper_slack, lower_slack);
      have_witness = true;
    }

    double quad_x = hessian_quadratic(obj, x, diff);
    if (quad_y > 1e-30 && quad_x > 1e-30)
      audit.c_ratio_max = std::max(audit.c_ratio_max,
                                   std::max(quad_x / quad_y, quad_y / quad_x));
    ++audit.pairs_checked;
  }

  if (audit.upper_violations + audit.lower_violations > 0)
    throw ViolationFound(
        "relative-constant audit failed: " + std::to_string(audit.upper_violations) +
            " upper / " + std::to_string(audit.lower_violations) +
            " lower violations over " + std::to_string(audit.pairs_checked) + " pairs",
        audit);
  return audit;
}

double estimate_R(const GlmObjective& obj, const std::vector<Vector>& iterates,
                  const Vector& x_star) {
  double worst = 0.0;
  for (const Vector& x : iterates)
    worst = std::max(worst, std::sqrt(std::max(0.0, hessian_quadratic(obj, x, x - x_star))));
  return worst;
}

double empirical_c_ratio(const GlmObjective& obj, const std::vector<Vector>& points) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      Vector diff = points[i] - points[j];
      double qi = hessian_quadratic(obj, points[i], diff);
      double qj = hessian_quadratic(obj, points[j], diff);
      if (qi > 1e-30 && qj > 1e-30)
        worst = std::max(worst, std::max(qi / qj, qj / qi));
    }
  return worst;
}

}  // namespace rsn
