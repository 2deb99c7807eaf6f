#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "rsn/glm.hpp"
#include "rsn/sketch.hpp"
#include "rsn/types.hpp"

namespace rsn {

enum class Method { rsn, rsn_ls, newton, gd, agd };
enum class StepMode { fixed_relative, line_search };

struct SolverConfig {
  Method method = Method::rsn;
  StepMode step_mode = StepMode::fixed_relative;
  double tol = 1e-6;       // stop once |g(x_k)| <= tol
  Index max_iter = 1000;
  double ls_epsilon = 1e-10;  // line-search tolerance scale; eps = ls_epsilon * (1 + |l(0)|)
  int max_expand = 80;
  int max_bisect = 200;
  std::uint64_t seed = 0;
  std::optional<double> l_hat_override;  // replaces the closed-form constant when set
  bool record_iterates = false;
  bool record_wall_clock = true;  // false writes 0 in the trace, keeping reruns byte-identical
};

struct SolverState {
  Vector x;
  Index k = 0;
  double f = 0.0;
  Vector g;
};

struct TraceRow {
  Index k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
  Index sketch_size = 0;
  double wall_clock_seconds = 0.0;
};

struct RunResult {
  SolverState state;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::vector<Vector> iterates;  // x_0..x_K when record_iterates is set
};

SolverState make_state(const GlmObjective& obj, Vector x0);

/// One sketched Newton step: x + (1/L) S lam with lam the least-norm solution
/// of (S^T H S) lam = -S^T g. The sketch is drawn at counter state.k.
SolverState rsn_step(const SolverState& state, const GlmObjective& obj,
                     const SketchDistribution& dist, double l_hat,
                     double rank_tol = kDefaultRankTol);

/// Full step x - gamma * H(x)^+ g(x) via dense assembly.
SolverState newton_step(const SolverState& state, const GlmObjective& obj, double gamma,
                        double rank_tol = kDefaultRankTol);

/// Root of a scalar slope function l with l(0) < 0: doubles b until
/// l(b) >= -epsilon, then bisects. Returns t > 0 with |l(t)| <= epsilon.
template <typename F>
double line_search(F&& l, double l0, double epsilon, int max_expand = 80, int max_bisect = 200) {
  if (!(l0 < 0)) throw NotDescent("line_search: l(0) >= 0, not a descent direction");
  double a = 0.0;
  double b = 1.0;
  double lb = l(b);
  for (int expand = 0; lb < -epsilon; ++expand) {
    if (!std::isfinite(lb)) throw NonFinite("line_search: slope is NaN/Inf");
    if (expand >= max_expand)
      throw Unbounded("line_search: slope stayed negative after max_expand doublings");
    a = b;
    b *= 2.0;
    lb = l(b);
  }
  if (!std::isfinite(lb)) throw NonFinite("line_search: slope is NaN/Inf");
  if (std::abs(lb) <= epsilon) return b;
  // Here l(a) < -epsilon <= 0 <= l(b): bisect the sign change.
  for (int it = 0; it < max_bisect; ++it) {
    double t = 0.5 * (a + b);
    double lt = l(t);
    if (!std::isfinite(lt)) throw NonFinite("line_search: slope is NaN/Inf");
    if (std::abs(lt) <= epsilon) return t;
    (lt < 0 ? a : b) = t;
  }
  throw NoConvergence("line_search: bisection budget exhausted");
}

/// Sketched Newton direction followed by exact line search along it.
/// A zero direction (or zero sketched gradient) leaves x unchanged.
SolverState rsn_ls_step(const SolverState& state, const GlmObjective& obj,
                        const SketchDistribution& dist, double ls_epsilon = 1e-10,
                        int max_expand = 80, int max_bisect = 200,
                        double rank_tol = kDefaultRankTol, double* t_out = nullptr);

SolverState gd_step(const SolverState& state, const GlmObjective& obj, double l_smooth);

struct AgdAux {
  Vector y;
  double t_momentum = 1.0;
};

SolverState agd_step(const SolverState& state, AgdAux& aux, const GlmObjective& obj,
                     double l_smooth, double mu);

RunResult run(const SolverConfig& config, const GlmObjective& obj,
              const SketchDistribution& dist, const Vector& x0);

}  // namespace rsn
