#include "rsn/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "rsn/linalg.hpp"

namespace rsn {

namespace {

void check_finite_state(const SolverState& state) {
  if (!std::isfinite(state.f)) throw NonFinite("objective value is NaN/Inf");
  if (!state.g.allFinite()) throw NonFinite("gradient has NaN/Inf entries");
}

void check_descent(double f_old, double f_new) {
  if (!(f_new <= f_old + 1e-12 * (1.0 + std::abs(f_old))))
    throw AscentDetected("f increased from " + std::to_string(f_old) + " to " +
                         std::to_string(f_new) + "; step constant or oracle is wrong");
}

SolverState advance(const SolverState& state, const GlmObjective& obj, const Vector& x_new) {
  SolverState next;
  next.x = x_new;
  next.k = state.k + 1;
  next.f = value(obj, x_new);
  next.g = gradient(obj, x_new);
  check_finite_state(next);
  return next;
}

SolverState unchanged(const SolverState& state) {
  SolverState next = state;
  next.k = state.k + 1;
  return next;
}

[[noreturn]] void rethrow_with_iteration(const Error& e, Index k) {
  std::string msg = "iteration " + std::to_string(k) + ": " + e.what();
  if (dynamic_cast<const AscentDetected*>(&e)) throw AscentDetected(msg);
  if (dynamic_cast<const NotPsd*>(&e)) throw NotPsd(msg);
  if (dynamic_cast<const NonFinite*>(&e)) throw NonFinite(msg);
  if (dynamic_cast<const NotDescent*>(&e)) throw NotDescent(msg);
  if (dynamic_cast<const Unbounded*>(&e)) throw Unbounded(msg);
  if (dynamic_cast<const NoConvergence*>(&e)) throw NoConvergence(msg);
  if (dynamic_cast<const DimensionMismatch*>(&e)) throw DimensionMismatch(msg);
  throw Error(msg);
}

}  // namespace

SolverState make_state(const GlmObjective& obj, Vector x0) {
  if (x0.size() != obj.dim()) throw DimensionMismatch("make_state: length(x0) != d");
  require_finite(x0, "make_state x0");
  SolverState state;
  state.x = std::move(x0);
  state.k = 0;
  state.f = value(obj, state.x);
  state.g = gradient(obj, state.x);
  check_finite_state(state);
  return state;
}

SolverState rsn_step(const SolverState& state, const GlmObjective& obj,
                     const SketchDistribution& dist, double l_hat, double rank_tol) {
  if (!(l_hat > 0)) throw Degenerate("rsn_step: step constant must be positive");
  SketchMatrix s = sample(dist, static_cast<std::uint64_t>(state.k));
  Vector sg = sketch_transpose_vec(s, state.g);
  if (sg.norm() == 0) return unchanged(state);  // sketch missed the gradient entirely
  Matrix m = sketched_hessian(obj, state.x, s);
  Vector lam = pseudo_solve(m, Vector(-sg), rank_tol);
  SolverState next = advance(state, obj, state.x + expand(s, lam) / l_hat);
  check_descent(state.f, next.f);
  return next;
}

SolverState newton_step(const SolverState& state, const GlmObjective& obj, double gamma,
                        double rank_tol) {
  Matrix h = dense_hessian(obj, state.x);
  Vector direction = pseudo_solve(h, state.g, rank_tol);
  SolverState next = advance(state, obj, state.x - gamma * direction);
  check_descent(state.f, next.f);
  return next;
}

SolverState rsn_ls_step(const SolverState& state, const GlmObjective& obj,
                        const SketchDistribution& dist, double ls_epsilon, int max_expand,
                        int max_bisect, double rank_tol, double* t_out) {
  if (t_out) *t_out = 0.0;
  SketchMatrix s = sample(dist, static_cast<std::uint64_t>(state.k));
  Vector sg = sketch_transpose_vec(s, state.g);
  if (sg.norm() == 0) return unchanged(state);
  Matrix m = sketched_hessian(obj, state.x, s);
  Vector lam = pseudo_solve(m, Vector(-sg), rank_tol);
  Vector d = expand(s, lam);
  if (d.norm() == 0) return unchanged(state);
  // l(0) = d^T g = -lam^T (S^T H S) lam <= 0; a nonnegative value here is
  // rounding noise around a null step.
  double l0 = lam.dot(sg);
  if (l0 >= 0) return unchanged(state);
  LineRestriction lr(obj, state.x, d);
  double eps = ls_epsilon * (1.0 + std::abs(l0));
  double t = line_search([&lr](double tt) { return lr.slope(tt); }, l0, eps, max_expand,
                         max_bisect);
  if (t_out) *t_out = t;
  SolverState next = advance(state, obj, state.x + t * d);
  check_descent(state.f, next.f);
  return next;
}

SolverState gd_step(const SolverState& state, const GlmObjective& obj, double l_smooth) {
  if (!(l_smooth > 0)) throw Degenerate("gd_step: smoothness constant must be positive");
  return advance(state, obj, state.x - state.g / l_smooth);
}

SolverState agd_step(const SolverState& state, AgdAux& aux, const GlmObjective& obj,
                     double l_smooth, double mu) {
  if (!(l_smooth > 0)) throw Degenerate("agd_step: smoothness constant must be positive");
  if (aux.y.size() != state.x.size()) throw DimensionMismatch("agd_step: aux not initialized");
  Vector x_new = aux.y - gradient(obj, aux.y) / l_smooth;
  double beta;
  if (mu > 0) {
    double q = std::sqrt(mu / l_smooth);
    beta = (1.0 - q) / (1.0 + q);
  } else {
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * aux.t_momentum * aux.t_momentum));
    beta = (aux.t_momentum - 1.0) / t_next;
    aux.t_momentum = t_next;
  }
  aux.y = x_new + beta * (x_new - state.x);
  return advance(state, obj, x_new);
}

RunResult run(const SolverConfig& config, const GlmObjective& obj,
              const SketchDistribution& dist, const Vector& x0) {
  if (!(config.tol > 0)) throw Error("run: tol must be positive");
  if (config.max_iter < 1) throw Error("run: max_iter must be at least 1");
  if (!(config.ls_epsilon > 0)) throw Error("run: ls_epsilon must be positive");

  Method method = config.method;
  StepMode mode = config.step_mode;
  if (method == Method::rsn_ls) {
    method = Method::rsn;
    mode = StepMode::line_search;
  }
  if ((method == Method::gd || method == Method::agd) && mode == StepMode::line_search)
    throw Error("run: gd/agd support fixed steps only");

  RunResult out;
  out.state = make_state(obj, x0);
  if (config.record_iterates) out.iterates.push_back(out.state.x);

  // The closed-form constants are only computed when the method needs them
  // (they are undefined for logistic links with reg = 0).
  std::optional<RelativeConstants> constants;
  auto get_constants = [&]() -> const RelativeConstants& {
    if (!constants) constants = relative_constants(obj, config.seed);
    return *constants;
  };

  bool needs_l_hat = (method == Method::rsn || method == Method::newton) &&
                     mode == StepMode::fixed_relative;
  double l_hat = 0.0;
  if (needs_l_hat)
    l_hat = config.l_hat_override ? *config.l_hat_override : get_constants().l_hat;

  double l_smooth = 0.0;
  if (method == Method::gd || method == Method::agd) {
    double n = static_cast<double>(obj.samples());
    l_smooth =
        (obj.curvature_upper() * get_constants().sigma_max_sq + n * obj.reg()) / (n > 0 ? n : 1);
  }

  SketchDistribution identity = make_identity_sketch(obj.dim());
  const SketchDistribution& effective_dist =
      method == Method::newton && mode == StepMode::line_search ? identity : dist;

  AgdAux aux;
  if (method == Method::agd) aux.y = out.state.x;

  auto start = std::chrono::steady_clock::now();
  for (Index it = 0; it < config.max_iter; ++it) {
    if (out.state.g.norm() <= config.tol) break;
    double step_size = 0.0;
    Index sketch_size = 0;
    try {
      switch (method) {
        case Method::rsn:
        case Method::rsn_ls:
          sketch_size = effective_dist.size;
          if (mode == StepMode::fixed_relative) {
            out.state = rsn_step(out.state, obj, effective_dist, l_hat);
            step_size = 1.0 / l_hat;
          } else {
            out.state = rsn_ls_step(out.state, obj, effective_dist, config.ls_epsilon,
                                    config.max_expand, config.max_bisect, kDefaultRankTol,
                                    &step_size);
          }
          break;
        case Method::newton:
          sketch_size = obj.dim();
          if (mode == StepMode::fixed_relative) {
            step_size = 1.0 / l_hat;
            out.state = newton_step(out.state, obj, step_size);
          } else {
            out.state = rsn_ls_step(out.state, obj, identity, config.ls_epsilon,
                                    config.max_expand, config.max_bisect, kDefaultRankTol,
                                    &step_size);
          }
          break;
        case Method::gd:
          out.state = gd_step(out.state, obj, l_smooth);
          step_size = 1.0 / l_smooth;
          break;
        case Method::agd:
          out.state = agd_step(out.state, aux, obj, l_smooth, obj.reg());
          step_size = 1.0 / l_smooth;
          break;
      }
    } catch (const Error& e) {
      rethrow_with_iteration(e, out.state.k + 1);  // state.k is still the pre-step index
    }
    double elapsed = 0.0;
    if (config.record_wall_clock)
      elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.trace.push_back({out.state.k, out.state.f, out.state.g.norm(), step_size, sketch_size,
                         elapsed});
    if (config.record_iterates) out.iterates.push_back(out.state.x);
  }
  out.converged = out.state.g.norm() <= config.tol;
  return out;
}

}  // namespace rsn
