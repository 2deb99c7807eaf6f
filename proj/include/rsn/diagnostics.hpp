#pragma once

#include <cstdint>
#include <vector>

#include "rsn/glm.hpp"
#include "rsn/sketch.hpp"
#include "rsn/types.hpp"

namespace rsn {

enum class ExpectationMode { exact, monte_carlo };

/// Smallest nonzero eigenvalue of the expected sketch projection: the rate
/// constant of the linear convergence factor 1 - rho * mu_hat / l_hat.
struct RhoEstimate {
  double value = 0.0;
  ExpectationMode mode = ExpectationMode::exact;
  Index samples = 0;       // enumerated outcomes, or monte-carlo draws
  double std_error = 0.0;  // monte-carlo only
  bool exactness_verified = false;  // rank of the expectation matches rank(H)
};

struct RateReport {
  double theoretical_factor = 0.0;     // 1 - rho * mu_hat / l_hat
  double empirical_factor = 0.0;       // pooled mean of per-step gap ratios
  double empirical_std_error = 0.0;
  double iteration_coefficient = 0.0;  // l_hat / (rho * mu_hat)
  double sublinear_coefficient = 0.0;  // 2 * l_hat * R^2 / rho when R is supplied
  bool violation = false;              // empirical beyond theoretical + 3 std errors
};

struct ConstantsAudit {
  Index pairs_checked = 0;
  Index upper_violations = 0;
  Index lower_violations = 0;
  double worst_upper_slack = 0.0;  // max of f(x) - upper model; <= tolerance when sound
  double worst_lower_slack = 0.0;  // max of lower model - f(x)
  double c_ratio_max = 0.0;        // max sampled |x-y|^2_H(x) / |x-y|^2_H(y)
  Vector witness_x;
  Vector witness_y;
  double witness_gap = 0.0;
};

struct ViolationFound : Error {
  ViolationFound(const std::string& what, ConstantsAudit found) : Error(what), audit(std::move(found)) {}
  ConstantsAudit audit;
};

/// P = H^{1/2} S (S^T H S)^+ S^T H^{1/2}: the orthogonal projector describing
/// one sampled step in the Hessian seminorm. Diagnostic scale only.
Matrix projection_matrix(const GlmObjective& obj, const Vector& x, const SketchMatrix& s,
                         double rank_tol = kDefaultRankTol);

/// E[P] over the sketch distribution, by exact enumeration of finite-support
/// distributions or by averaging mc_samples draws.
Matrix expected_projection(const GlmObjective& obj, const Vector& x,
                           const SketchDistribution& dist, ExpectationMode mode,
                           Index mc_samples = 50000, Index dim_cap = 200);

RhoEstimate rho_at(const GlmObjective& obj, const Vector& x, const SketchDistribution& dist,
                   ExpectationMode mode, Index mc_samples = 50000, Index dim_cap = 200,
                   double rank_tol = kDefaultRankTol);

/// Contraction statistics for an ensemble of runs on one instance.
/// gap_sequences[r][k] holds f(x_k) - f_star for run r.
RateReport rate_report(const std::vector<std::vector<double>>& gap_sequences, double rho,
                       const RelativeConstants& constants, double r_estimate = 0.0);

/// Samples level-set pairs and checks both sides of the relative
/// smoothness/convexity sandwich; throws on any violation beyond slack.
ConstantsAudit verify_relative_constants(const GlmObjective& obj,
                                         const RelativeConstants& constants, Index pair_count,
                                         std::uint64_t seed, double slack = 1e-9);

/// Largest Hessian-seminorm distance of visited iterates from x_star; a
/// sampled lower bound on the sublinear-rate constant.
double estimate_R(const GlmObjective& obj, const std::vector<Vector>& iterates,
                  const Vector& x_star);

/// Largest sampled ratio of Hessian seminorms between point pairs; an
/// empirical stand-in for the stability constant c.
double empirical_c_ratio(const GlmObjective& obj, const std::vector<Vector>& points);

}  // namespace rsn
