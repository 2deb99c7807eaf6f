#include "rsn/glm.hpp"

#include <cmath>
#include <utility>

#include "rsn/linalg.hpp"

namespace rsn {

namespace {

// sigma(z) = 1/(1+e^-z) without overflow on either tail.
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// ln(1+e^-z) evaluated in the stable branch.
double log_one_plus_exp_neg(double z) {
  if (z >= 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace

GlmObjective::GlmObjective(SparseMatrix a, Vector targets, double reg, LinkKind link)
    : a_(std::move(a)), targets_(std::move(targets)), reg_(reg), link_(link) {
  if (a_.cols() != targets_.size())
    throw DimensionMismatch("objective: one target per sample (column) required");
  if (a_.rows() < 1) throw DimensionMismatch("objective: empty feature dimension");
  if (!(reg_ >= 0)) throw Degenerate("objective: ridge weight must be >= 0");
  require_finite(targets_, "objective targets");
  if (link_ == LinkKind::logistic)
    for (Index i = 0; i < targets_.size(); ++i)
      if (targets_(i) != 1.0 && targets_(i) != -1.0)
        throw NonBinaryLabels("objective: logistic link requires targets in {-1,+1}");
  a_.makeCompressed();
  a_by_row_ = RowSparseMatrix(a_);
}

Vector GlmObjective::margins(const Vector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("margins: length(x) != d");
  return a_.transpose() * x;
}

double GlmObjective::phi(Index i, double t) const {
  if (link_ == LinkKind::squared) {
    double r = t - targets_(i);
    return 0.5 * r * r;
  }
  return log_one_plus_exp_neg(targets_(i) * t);
}

double GlmObjective::phi_prime(Index i, double t) const {
  if (link_ == LinkKind::squared) return t - targets_(i);
  double y = targets_(i);
  return y * (sigmoid(y * t) - 1.0);
}

double GlmObjective::phi_second(Index i, double t) const {
  if (link_ == LinkKind::squared) return 1.0;
  double s = sigmoid(targets_(i) * t);
  return s * (1.0 - s);
}

double value(const GlmObjective& obj, const Vector& x) {
  Vector m = obj.margins(x);
  double acc = 0.0;
  for (Index i = 0; i < m.size(); ++i) acc += obj.phi(i, m(i));
  double n = static_cast<double>(obj.samples());
  return (n > 0 ? acc / n : 0.0) + 0.5 * obj.reg() * x.squaredNorm();
}

Vector gradient(const GlmObjective& obj, const Vector& x) {
  Vector m = obj.margins(x);
  for (Index i = 0; i < m.size(); ++i) m(i) = obj.phi_prime(i, m(i));
  double n = static_cast<double>(obj.samples());
  Vector g = obj.reg() * x;
  if (n > 0) g += (obj.data() * m) / n;
  return g;
}

namespace {

Vector curvature_weights(const GlmObjective& obj, const Vector& x) {
  Vector w = obj.margins(x);
  for (Index i = 0; i < w.size(); ++i) w(i) = obj.phi_second(i, w(i));
  return w;
}

}  // namespace

Matrix dense_hessian(const GlmObjective& obj, const Vector& x) {
  Vector w = curvature_weights(obj, x);
  double n = static_cast<double>(obj.samples());
  Matrix h = Matrix::Zero(obj.dim(), obj.dim());
  if (n > 0) h = Matrix(obj.data() * w.asDiagonal() * obj.data().transpose()) / n;
  h.diagonal().array() += obj.reg();
  return ((h + h.transpose()) * 0.5).eval();  // kill rounding asymmetry
}

Matrix sketched_hessian(const GlmObjective& obj, const Vector& x, const SketchMatrix& s) {
  if (s.dim != obj.dim()) throw DimensionMismatch("sketched_hessian: sketch has wrong row count");
  double n = static_cast<double>(obj.samples());
  switch (s.variant) {
    case SketchVariant::identity:
      return dense_hessian(obj, x);
    case SketchVariant::coordinate_block: {
      Vector w = curvature_weights(obj, x);
      Index sz = s.cols();
      // B = rows of A restricted to the block; only stored entries are read.
      std::vector<Eigen::Triplet<double>> entries;
      for (Index j = 0; j < sz; ++j)
        for (RowSparseMatrix::InnerIterator it(obj.data_by_row(),
                                               s.indices[static_cast<std::size_t>(j)]);
             it; ++it)
          entries.emplace_back(j, it.col(), it.value());
      RowSparseMatrix b(sz, obj.samples());
      b.setFromTriplets(entries.begin(), entries.end());
      Matrix m = Matrix::Zero(sz, sz);
      if (n > 0) {
        SparseMatrix bt = b.transpose();
        bt = w.asDiagonal() * bt;
        m = Matrix(SparseMatrix(b * bt)) / n;
        m = ((m + m.transpose()) * 0.5).eval();
      }
      m.diagonal().array() += obj.reg();
      return m;
    }
    case SketchVariant::single_column:
      return Matrix::Constant(1, 1, hessian_quadratic(obj, x, s.dense.col(0)));
    case SketchVariant::gaussian_dense: {
      Vector w = curvature_weights(obj, x);
      Matrix c = obj.data().transpose() * s.dense;  // n x s
      Matrix m = obj.reg() * (s.dense.transpose() * s.dense);
      if (n > 0) m += (c.transpose() * w.asDiagonal() * c) / n;
      return ((m + m.transpose()) * 0.5).eval();
    }
  }
  throw DimensionMismatch("sketched_hessian: invalid sketch variant");
}

double hessian_quadratic(const GlmObjective& obj, const Vector& x, const Vector& v) {
  if (v.size() != obj.dim()) throw DimensionMismatch("hessian_quadratic: length(v) != d");
  Vector w = curvature_weights(obj, x);
  Vector u = obj.data().transpose() * v;
  double n = static_cast<double>(obj.samples());
  double quad = n > 0 ? u.array().square().matrix().dot(w) / n : 0.0;
  return quad + obj.reg() * v.squaredNorm();
}

RelativeConstants relative_constants(const GlmObjective& obj, std::uint64_t seed,
                                     int power_iters) {
  RelativeConstants c;
  c.curvature_lower = obj.curvature_lower();
  c.curvature_upper = obj.curvature_upper();
  c.sigma_max_sq = sigma_max_sq(obj.data(), power_iters, seed);
  double n = static_cast<double>(obj.samples());
  double upper = c.curvature_upper * c.sigma_max_sq + n * obj.reg();
  double lower = c.curvature_lower * c.sigma_max_sq + n * obj.reg();
  if (lower <= 0)
    throw Degenerate("relative_constants: u*sigma_max^2 + n*reg = 0, constants undefined");
  c.l_hat = upper / lower;
  c.mu_hat = lower / upper;
  return c;
}

LineRestriction::LineRestriction(const GlmObjective& obj, Vector x, Vector d)
    : obj_(obj),
      margins_x_(obj.margins(x)),
      margins_d_(obj.margins(d)),
      x_dot_d_(x.dot(d)),
      d_sq_(d.squaredNorm()),
      x_sq_(x.squaredNorm()) {}

double LineRestriction::value(double t) const {
  double acc = 0.0;
  for (Index i = 0; i < margins_x_.size(); ++i)
    acc += obj_.phi(i, margins_x_(i) + t * margins_d_(i));
  double n = static_cast<double>(obj_.samples());
  double ridge = x_sq_ + 2.0 * t * x_dot_d_ + t * t * d_sq_;
  return (n > 0 ? acc / n : 0.0) + 0.5 * obj_.reg() * ridge;
}

double LineRestriction::slope(double t) const {
  double acc = 0.0;
  for (Index i = 0; i < margins_x_.size(); ++i)
    acc += obj_.phi_prime(i, margins_x_(i) + t * margins_d_(i)) * margins_d_(i);
  double n = static_cast<double>(obj_.samples());
  return (n > 0 ? acc / n : 0.0) + obj_.reg() * (x_dot_d_ + t * d_sq_);
}

double LineRestriction::curvature(double t) const {
  double acc = 0.0;
  for (Index i = 0; i < margins_x_.size(); ++i)
    acc += obj_.phi_second(i, margins_x_(i) + t * margins_d_(i)) * margins_d_(i) * margins_d_(i);
  double n = static_cast<double>(obj_.samples());
  return (n > 0 ? acc / n : 0.0) + obj_.reg() * d_sq_;
}

}  // namespace rsn
