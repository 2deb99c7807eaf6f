#pragma once

#include <cstdint>

#include "rsn/sketch.hpp"
#include "rsn/types.hpp"

namespace rsn {

enum class LinkKind { logistic, squared };

/// Constants of the relative smoothness/convexity sandwich
///   f(y) + <g(y), x-y> + (mu_hat/2)|x-y|_H(y)^2  <=  f(x)  <=  ... (l_hat/2) ...
/// computed in closed form from the link curvature bounds and sigma_max(A).
struct RelativeConstants {
  double l_hat = 1.0;
  double mu_hat = 1.0;
  double sigma_max_sq = 0.0;
  double curvature_lower = 0.0;  // u: inf of phi''
  double curvature_upper = 0.0;  // ell: sup of phi''
};

/// Regularized generalized linear model
///   f(x) = (1/n) sum_i phi_i(a_i^T x) + (reg/2) |x|^2
/// with the samples a_i stored as columns of a d x n sparse matrix.
class GlmObjective {
 public:
  GlmObjective(SparseMatrix a, Vector targets, double reg, LinkKind link);

  Index dim() const { return a_.rows(); }
  Index samples() const { return a_.cols(); }
  double reg() const { return reg_; }
  LinkKind link() const { return link_; }
  const SparseMatrix& data() const { return a_; }
  const RowSparseMatrix& data_by_row() const { return a_by_row_; }
  const Vector& targets() const { return targets_; }

  double curvature_lower() const { return link_ == LinkKind::squared ? 1.0 : 0.0; }
  double curvature_upper() const { return link_ == LinkKind::squared ? 1.0 : 0.25; }

  /// Margins m = A^T x.
  Vector margins(const Vector& x) const;

  double phi(Index i, double t) const;
  double phi_prime(Index i, double t) const;
  double phi_second(Index i, double t) const;

 private:
  SparseMatrix a_;
  RowSparseMatrix a_by_row_;
  Vector targets_;
  double reg_;
  LinkKind link_;
};

double value(const GlmObjective& obj, const Vector& x);
Vector gradient(const GlmObjective& obj, const Vector& x);

/// S^T H(x) S without materializing H; coordinate variants only touch the
/// selected rows of A.
Matrix sketched_hessian(const GlmObjective& obj, const Vector& x, const SketchMatrix& s);

/// v^T H(x) v.
double hessian_quadratic(const GlmObjective& obj, const Vector& x, const Vector& v);

/// Full H(x) = (1/n) A Phi''(A^T x) A^T + reg I. Diagnostic scale only.
Matrix dense_hessian(const GlmObjective& obj, const Vector& x);

/// Closed-form relative smoothness/convexity constants. The seed fixes the
/// power-iteration start for sigma_max_sq.
RelativeConstants relative_constants(const GlmObjective& obj, std::uint64_t seed = 0,
                                     int power_iters = 200);

/// Restriction of the objective to the line t -> x + t d, with the data
/// products cached so each evaluation is O(n).
class LineRestriction {
 public:
  LineRestriction(const GlmObjective& obj, Vector x, Vector d);

  double value(double t) const;      // f(x + t d)
  double slope(double t) const;      // l(t) = d^T g(x + t d)
  double curvature(double t) const;  // l'(t) = d^T H(x + t d) d

 private:
  const GlmObjective& obj_;
  Vector margins_x_;  // A^T x
  Vector margins_d_;  // A^T d
  double x_dot_d_;
  double d_sq_;
  double x_sq_;
};

}  // namespace rsn
