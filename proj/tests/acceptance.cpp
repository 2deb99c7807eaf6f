// Acceptance gate: every release-blocking requirement as one checked
// criterion with a single pass/fail line. Run with
//   acceptance --cli <path-to-rsn-binary> --data <path-to-demo-dataset>
//             [--scratch <dir>]
// The CLI and dataset arguments feed the end-to-end criterion; everything
// else runs in-process.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "rsn/diagnostics.hpp"
#include "rsn/glm.hpp"
#include "rsn/io.hpp"
#include "rsn/linalg.hpp"
#include "rsn/rng.hpp"
#include "rsn/sketch.hpp"
#include "rsn/solver.hpp"
#include "test_util.hpp"

using namespace rsn;

namespace {

struct CriterionFailure {
  std::string detail;
};

#define REQUIRE(cond, msg)                                               \
  do {                                                                   \
    if (!(cond)) {                                                       \
      std::ostringstream os__;                                           \
      os__ << msg << " (line " << __LINE__ << ")";                       \
      throw CriterionFailure{os__.str()};                                \
    }                                                                    \
  } while (0)

std::string cli_path;
std::string data_path;
std::string scratch_dir;

// Naive dense Hessian by explicit outer products; shares no code with the
// library assembly.
Matrix oracle_hessian(const GlmObjective& obj, const Vector& x) {
  Matrix a = Matrix(obj.data());
  const Index d = a.rows();
  const Index n = a.cols();
  Matrix h = Matrix::Zero(d, d);
  for (Index j = 0; j < n; ++j) {
    double t = a.col(j).dot(x);
    double w = obj.phi_second(j, t);
    for (Index p = 0; p < d; ++p)
      for (Index q = 0; q < d; ++q) h(p, q) += w * a(p, j) * a(q, j);
  }
  h /= static_cast<double>(n);
  h.diagonal().array() += obj.reg();
  return h;
}

Matrix svd_pinv(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double cutoff = 1e-12 * std::max(1.0, svd.singularValues().maxCoeff());
  Vector inv = svd.singularValues();
  for (Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > cutoff ? 1.0 / inv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

GlmObjective random_regression(CounterRng& rng, Index d, Index n, double reg) {
  Matrix a = test::random_matrix(rng, d, n);
  return GlmObjective(test::sparse_from_dense(a), test::random_vector(rng, n), reg,
                      LinkKind::squared);
}

// ---------------------------------------------------------------------------
// 1. Full Newton solves a positive-definite quadratic in one step.

void criterion_newton_one_step() {
  CounterRng rng(1001, 0, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Index d = 2 + static_cast<Index>(rng.uniform_below(49));
    Index n = d + 10;
    GlmObjective obj = random_regression(rng, d, n, 0.5);
    Vector x0 = test::random_vector(rng, d);
    SolverState s0 = make_state(obj, x0);
    SolverState s1 = newton_step(s0, obj, 1.0);
    REQUIRE(s1.g.norm() <= 1e-10,
            "one newton step left |g| = " << s1.g.norm() << " at d = " << d);
  }
}

// ---------------------------------------------------------------------------
// 2. Monotone descent under the fixed relative step for every sketch family.

void criterion_descent() {
  CounterRng rng(1002, 0, 0);
  for (int inst = 0; inst < 50; ++inst) {
    Index d = 20 + static_cast<Index>(rng.uniform_below(81));
    Index n = 20 + static_cast<Index>(rng.uniform_below(31));
    GlmObjective obj = test::random_logistic(rng, d, n, 1e-3);
    Vector x0 = 0.5 * test::random_vector(rng, d);
    Vector p = dense_hessian(obj, x0).diagonal();

    std::vector<SketchDistribution> dists;
    dists.push_back(make_identity_sketch(d));
    dists.push_back(make_coordinate_sketch(d, 1, 10 * inst + 1));
    dists.push_back(make_coordinate_sketch(d, 5, 10 * inst + 2));
    dists.push_back(make_coordinate_sketch(d, 20, 10 * inst + 3));
    dists.push_back(make_uniform_coordinate_sketch(d, 10 * inst + 4));
    dists.push_back(make_gaussian_sketch(d, 5, 10 * inst + 5));
    dists.push_back(make_single_column_sketch(p / p.sum(), 10 * inst + 6));

    for (const SketchDistribution& dist : dists) {
      SolverConfig cfg;
      cfg.method = Method::rsn;
      cfg.max_iter = 500;
      cfg.tol = 1e-300;
      cfg.record_wall_clock = false;
      RunResult r;
      try {
        r = run(cfg, obj, dist, x0);  // every step enforces the descent check
      } catch (const Error& e) {
        REQUIRE(false, "run aborted on instance " << inst << ": " << e.what());
      }
      double prev = value(obj, x0);
      for (const TraceRow& row : r.trace) {
        REQUIRE(row.f <= prev + 1e-12 * (1.0 + std::abs(prev)),
                "ascent in trace: " << prev << " -> " << row.f);
        prev = row.f;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 3. The sketched direction is the same object through three formulations,
//    and the model decrease matches its closed form.

void criterion_formulation_equivalence() {
  CounterRng rng(1003, 0, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Index d = 3 + static_cast<Index>(rng.uniform_below(6));
    Index n = d + 2 + static_cast<Index>(rng.uniform_below(8));
    double reg = 0.05 + rng.uniform() * 0.45;
    GlmObjective obj = test::random_logistic(rng, d, n, reg);
    Vector x = test::random_vector(rng, d);
    Vector g = gradient(obj, x);
    double l_hat = relative_constants(obj).l_hat;

    SketchMatrix s;
    switch (trial % 3) {
      case 0:
        s = sample(make_coordinate_sketch(d, 1 + static_cast<Index>(rng.uniform_below(d)),
                                          2000 + trial),
                   0);
        break;
      case 1:
        s = sample(make_gaussian_sketch(d, 1 + static_cast<Index>(rng.uniform_below(d - 1)),
                                        2000 + trial),
                   0);
        break;
      default: {
        Matrix dir = test::random_matrix(rng, d, 3);
        s = sample(make_single_column_sketch(dir, Vector::Constant(3, 1.0 / 3.0), 2000 + trial),
                   0);
        break;
      }
    }

    Matrix m = sketched_hessian(obj, x, s);
    Vector sg = sketch_transpose_vec(s, g);
    Vector step1 = expand(s, Vector(pseudo_solve(m, Vector(-sg)))) / l_hat;

    // Subspace model minimizer via an independent factorization.
    Eigen::LDLT<Matrix> ldlt(Matrix(l_hat * m));
    Vector step2 = expand(s, Vector(ldlt.solve(Vector(-sg))));

    // Projected full Newton direction.
    Matrix h = oracle_hessian(obj, x);
    Vector newton_dir = svd_pinv(h) * g;
    Matrix sd = to_dense(s);
    Vector step3 = -(sd * (svd_pinv(m) * (sd.transpose() * (h * newton_dir)))) / l_hat;

    double scale = std::max({step1.norm(), step2.norm(), step3.norm(), 1e-12});
    REQUIRE((step1 - step2).norm() <= 1e-8 * scale,
            "direction routes 1 and 2 disagree at trial " << trial);
    REQUIRE((step1 - step3).norm() <= 1e-8 * scale,
            "direction routes 1 and 3 disagree at trial " << trial);

    double fx = value(obj, x);
    double model_next = fx + g.dot(step1) + 0.5 * l_hat * step1.dot(h * step1);
    double closed_form = sg.dot(svd_pinv(m) * sg) / (2.0 * l_hat);
    REQUIRE(std::abs((fx - model_next) - closed_form) <= 1e-8 * (1.0 + std::abs(closed_form)),
            "model decrease identity off at trial " << trial);
  }
}

// ---------------------------------------------------------------------------
// 4. Exactly known rate constants.

void criterion_exact_rho() {
  CounterRng rng(1004, 0, 0);
  GlmObjective obj = test::random_logistic(rng, 4, 10, 0.3);
  Vector x = test::random_vector(rng, 4);
  RhoEstimate identity_rho =
      rho_at(obj, x, make_identity_sketch(4), ExpectationMode::exact);
  REQUIRE(std::abs(identity_rho.value - 1.0) <= 1e-10,
          "identity sketch rho = " << identity_rho.value);

  Vector h(2);
  h << 1.0, 4.0;
  GlmObjective diag = test::diagonal_quadratic(h);
  RhoEstimate rho =
      rho_at(diag, Vector::Zero(2), make_uniform_coordinate_sketch(2, 1), ExpectationMode::exact);
  REQUIRE(std::abs(rho.value - 0.5) <= 1e-10, "diagonal case rho = " << rho.value);
  REQUIRE(rho.exactness_verified, "diagonal case expectation lost rank");

  // Same number through the diagonal-scaling formula alpha / d.
  Matrix hd = dense_hessian(diag, Vector::Zero(2));
  EigenDecomposition ed = eigh(hd);
  Matrix root = ed.eigenvectors * ed.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                ed.eigenvectors.transpose();
  double alpha = lambda_min_plus(Matrix(root * hd.diagonal().cwiseInverse().asDiagonal() * root));
  REQUIRE(std::abs(rho.value - alpha / 2.0) <= 1e-10,
          "alpha/d = " << alpha / 2.0 << " vs enumerated " << rho.value);
}

// ---------------------------------------------------------------------------
// 5. Per-step contraction: ensemble mean on the known-rho quadratic, and the
//    exact conditional expectation along logistic trajectories.

void criterion_per_step_rate() {
  Vector h(2);
  h << 1.0, 4.0;
  GlmObjective quad = test::diagonal_quadratic(h);
  RelativeConstants unit;
  unit.l_hat = 1.0;
  unit.mu_hat = 1.0;
  std::vector<std::vector<double>> gaps;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    SketchDistribution dist = make_uniform_coordinate_sketch(2, seed);
    SolverConfig cfg;
    cfg.method = Method::rsn;
    cfg.l_hat_override = 1.0;
    cfg.max_iter = 20;
    cfg.tol = 1e-300;
    cfg.record_wall_clock = false;
    CounterRng start(seed, 5, 0);
    Vector x0 = test::random_vector(start, 2);
    RunResult r = run(cfg, quad, dist, x0);
    std::vector<double> seq{value(quad, x0)};
    for (const TraceRow& row : r.trace) seq.push_back(row.f);
    gaps.push_back(seq);
  }
  RateReport report = rate_report(gaps, 0.5, unit);
  REQUIRE(!report.violation, "ensemble mean " << report.empirical_factor << " above 0.5 + 3 SE ("
                                              << report.empirical_std_error << ")");

  // Logistic instance: enumerate every sketch outcome at each visited state
  // and compare the exact conditional expectation against the bound.
  CounterRng rng(1005, 0, 0);
  GlmObjective obj = test::random_logistic(rng, 6, 12, 0.05);
  RelativeConstants c = relative_constants(obj);
  Vector x_opt = run(
                     [] {
                       SolverConfig cfg;
                       cfg.method = Method::newton;
                       cfg.step_mode = StepMode::line_search;
                       cfg.tol = 1e-13;
                       cfg.max_iter = 200;
                       return cfg;
                     }(),
                     obj, make_identity_sketch(6), Vector::Zero(6))
                     .state.x;
  double f_star = value(obj, x_opt);

  Index checked = 0;
  for (std::uint64_t traj = 0; traj < 100; ++traj) {
    SketchDistribution dist = make_uniform_coordinate_sketch(6, 3000 + traj);
    CounterRng start(traj, 6, 0);
    SolverState state = make_state(obj, Vector(0.7 * test::random_vector(start, 6)));
    for (int k = 0; k < 20; ++k) {
      double gap = state.f - f_star;
      if (gap <= 1e-14 * (1.0 + std::abs(f_star))) break;
      double rho = rho_at(obj, state.x, dist, ExpectationMode::exact).value;
      double factor = 1.0 - rho * c.mu_hat / c.l_hat;

      // Exact conditional expectation over the 6 equally likely coordinates.
      double expected_gap = 0.0;
      for (Index i = 0; i < 6; ++i) {
        Vector xi = state.x;
        Matrix hi = dense_hessian(obj, state.x);
        xi(i) -= state.g(i) / (c.l_hat * hi(i, i));
        expected_gap += (value(obj, xi) - f_star) / 6.0;
      }
      REQUIRE(expected_gap <= factor * gap * (1.0 + 1e-12) + 1e-15,
              "conditional bound broken at trajectory " << traj << " step " << k << ": E[gap] = "
                                                        << expected_gap << " vs " << factor * gap);
      ++checked;
      state = rsn_step(state, obj, dist, c.l_hat);
    }
  }
  REQUIRE(checked >= 2000, "only " << checked << " conditional steps sampled");
}

// ---------------------------------------------------------------------------
// 6. Sublinear envelope in the unregularized convex case.

void criterion_sublinear_envelope() {
  // Duplicated samples with opposite labels can never be separated, so the
  // reg = 0 logistic minimum exists.
  CounterRng rng(1006, 0, 0);
  Matrix half = test::random_matrix(rng, 6, 4);
  Matrix a(6, 8);
  a << half, half;
  Vector y(8);
  y << 1, -1, 1, -1, -1, 1, -1, 1;
  GlmObjective obj(test::sparse_from_dense(a), y, 0.0, LinkKind::logistic);

  SolverConfig presolve;
  presolve.method = Method::newton;
  presolve.step_mode = StepMode::line_search;
  presolve.tol = 1e-12;
  presolve.max_iter = 300;
  presolve.record_iterates = true;
  Vector x0 = a * test::random_vector(rng, 8) * 0.2;  // start inside range(A)
  RunResult pre = run(presolve, obj, make_identity_sketch(6), x0);
  REQUIRE(pre.converged, "presolve failed to locate the minimum");
  Vector x_star = pre.state.x;
  double f_star = pre.state.f;

  std::vector<Vector> probe = pre.iterates;
  probe.push_back(x0);
  double c_hat = std::max(1.0, empirical_c_ratio(obj, probe));
  double l_hat = 1.2 * c_hat;

  SolverConfig cfg;
  cfg.method = Method::rsn;
  cfg.l_hat_override = l_hat;
  cfg.max_iter = 60;
  cfg.tol = 1e-300;
  cfg.record_iterates = true;
  cfg.record_wall_clock = false;
  SketchDistribution dist = make_uniform_coordinate_sketch(6, 11);
  RunResult r = run(cfg, obj, dist, x0);

  double rho_min = 1.0;
  for (const Vector& xk : r.iterates)
    rho_min = std::min(rho_min, rho_at(obj, xk, dist, ExpectationMode::exact).value);
  REQUIRE(rho_min > 0.0, "expected projection lost rank along the trajectory");
  double radius = estimate_R(obj, r.iterates, x_star);
  double envelope_scale = 2.0 * l_hat * radius * radius / rho_min;

  for (std::size_t k = 1; k < r.iterates.size(); ++k) {
    double gap = value(obj, r.iterates[k]) - f_star;
    REQUIRE(gap <= envelope_scale / static_cast<double>(k) * (1.0 + 1e-9),
            "gap " << gap << " above envelope " << envelope_scale / static_cast<double>(k)
                   << " at k = " << k);
  }
}

// ---------------------------------------------------------------------------
// 7. Rank-one sketches reduce to their scalar closed forms.

void criterion_rank_one_closed_form() {
  CounterRng rng(1007, 0, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Index d = 2 + static_cast<Index>(rng.uniform_below(5));
    Index n = d + 1 + static_cast<Index>(rng.uniform_below(6));
    double reg = 0.1 + rng.uniform() * 0.9;
    GlmObjective obj = test::random_logistic(rng, d, n, reg);
    Vector x = test::random_vector(rng, d);
    SolverState s0 = make_state(obj, x);
    Matrix h = oracle_hessian(obj, x);
    const double l_hat = 2.0;

    Index m = 2 + static_cast<Index>(rng.uniform_below(3));
    Matrix dirs = test::random_matrix(rng, d, m);
    SketchDistribution dist =
        make_single_column_sketch(dirs, Vector::Constant(m, 1.0 / m), 4000 + trial);
    SketchMatrix s = sample(dist, 0);
    Vector di = dirs.col(s.indices[0]);
    Vector expected = x - (di.dot(s0.g) / (di.dot(h * di)) / l_hat) * di;
    SolverState s1 = rsn_step(s0, obj, dist, l_hat);
    REQUIRE((s1.x - expected).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.norm()),
            "single-column closed form off at trial " << trial);

    SketchDistribution coords = make_uniform_coordinate_sketch(d, 5000 + trial);
    SketchMatrix cs = sample(coords, 0);
    Index i = cs.indices[0];
    Vector expected_coord = x;
    expected_coord(i) -= s0.g(i) / h(i, i) / l_hat;
    SolverState s2 = rsn_step(s0, obj, coords, l_hat);
    REQUIRE((s2.x - expected_coord).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.norm()),
            "per-coordinate closed form off at trial " << trial);
  }
}

// ---------------------------------------------------------------------------
// 8. First- and second-order oracles, and the constants audit at scale.

void criterion_oracles() {
  CounterRng rng(1008, 0, 0);
  for (int inst = 0; inst < 10; ++inst) {
    Index d = 3 + static_cast<Index>(rng.uniform_below(6));
    Index n = 5 + static_cast<Index>(rng.uniform_below(16));
    GlmObjective obj = test::random_logistic(rng, d, n, 0.05 + rng.uniform() * 0.5);
    for (int pt = 0; pt < 10; ++pt) {
      Vector x = test::random_vector(rng, d);
      Vector g = gradient(obj, x);
      Vector fd(d);
      double step = 1e-6 * (1.0 + x.norm());
      for (Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        fd(i) = (value(obj, xp) - value(obj, xm)) / (2.0 * step);
      }
      REQUIRE((g - fd).norm() <= 1e-6 * (1.0 + g.norm()),
              "gradient vs finite differences off by " << (g - fd).norm());
    }

    Vector x = test::random_vector(rng, d);
    Matrix h = oracle_hessian(obj, x);
    std::vector<SketchDistribution> dists;
    dists.push_back(make_identity_sketch(d));
    dists.push_back(make_coordinate_sketch(d, std::min<Index>(2, d), 6000 + inst));
    dists.push_back(make_uniform_coordinate_sketch(d, 6100 + inst));
    dists.push_back(make_gaussian_sketch(d, 2, 6200 + inst));
    dists.push_back(make_single_column_sketch(Vector::Constant(d, 1.0 / d), 6300 + inst));
    for (const SketchDistribution& dist : dists) {
      SketchMatrix s = sample(dist, static_cast<std::uint64_t>(inst));
      Matrix sd = to_dense(s);
      Matrix expected = sd.transpose() * h * sd;
      REQUIRE((sketched_hessian(obj, x, s) - expected).cwiseAbs().maxCoeff() <= 1e-10,
              "sketched hessian differs from the dense oracle");
    }
  }

  CounterRng audit_rng(1009, 0, 0);
  GlmObjective obj = test::random_logistic(audit_rng, 8, 20, 0.05);
  RelativeConstants c = relative_constants(obj);
  ConstantsAudit audit = verify_relative_constants(obj, c, 10000, 99);
  REQUIRE(audit.pairs_checked == 10000, "audit checked " << audit.pairs_checked << " pairs");
  REQUIRE(audit.upper_violations == 0 && audit.lower_violations == 0,
          "sandwich violations: " << audit.upper_violations << " upper, "
                                  << audit.lower_violations << " lower");
}

// ---------------------------------------------------------------------------
// 9. The line search honors its contract.

void criterion_line_search() {
  CounterRng rng(1010, 0, 0);
  int accepted = 0;
  std::uint64_t attempt = 0;
  while (accepted < 500) {
    ++attempt;
    REQUIRE(attempt < 5000, "could not assemble 500 descent scenarios");
    Index d = 2 + static_cast<Index>(rng.uniform_below(5));
    Index n = d + 2 + static_cast<Index>(rng.uniform_below(10));
    GlmObjective obj = test::random_logistic(rng, d, n, 0.01 + rng.uniform() * 0.5);
    Vector x = test::random_vector(rng, d);
    Vector g = gradient(obj, x);

    SketchMatrix s;
    if (attempt % 2 == 0)
      s = sample(make_coordinate_sketch(d, 1 + static_cast<Index>(rng.uniform_below(d)),
                                        7000 + attempt),
                 0);
    else
      s = sample(make_gaussian_sketch(d, 1 + static_cast<Index>(rng.uniform_below(d - 1)),
                                      7000 + attempt),
                 0);
    Vector sg = sketch_transpose_vec(s, g);
    if (sg.norm() == 0) continue;
    Vector lam = pseudo_solve(sketched_hessian(obj, x, s), Vector(-sg));
    Vector dir = expand(s, lam);
    double l0 = lam.dot(sg);
    if (!(l0 < 0)) continue;

    LineRestriction lr(obj, x, dir);
    double eps = 1e-10 * (1.0 + std::abs(l0));
    double t = line_search([&lr](double tt) { return lr.slope(tt); }, l0, eps);
    REQUIRE(t > 0.0, "nonpositive step length");
    REQUIRE(std::abs(lr.slope(t)) <= eps,
            "slope at accepted t is " << lr.slope(t) << " vs eps " << eps);
    ++accepted;
  }

  for (int i = 0; i < 50; ++i) {
    double offset = i == 0 ? 0.0 : rng.uniform();
    bool threw = false;
    try {
      line_search([offset](double) { return offset; }, offset, 1e-8);
    } catch (const NotDescent&) {
      threw = true;
    }
    REQUIRE(threw, "nonnegative initial slope was accepted");
  }

  for (int i = 0; i < 20; ++i) {
    Index d = 2 + static_cast<Index>(rng.uniform_below(5));
    GlmObjective obj = random_regression(rng, d, d + 6, 0.2 + rng.uniform());
    Vector x0 = test::random_vector(rng, d);
    double t = 0.0;
    rsn_ls_step(make_state(obj, x0), obj, make_identity_sketch(d), 1e-10, 80, 200,
                kDefaultRankTol, &t);
    REQUIRE(std::abs(t - 1.0) <= 1e-6, "quadratic line search returned t = " << t);
  }
}

// ---------------------------------------------------------------------------
// 10. End-to-end CLI determinism and the full-sketch/newton equivalence.

int run_cli(const std::string& args) {
  std::string command = cli_path + " " + args + " > /dev/null 2>&1";
  int status = std::system(command.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::size_t eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

void criterion_cli_end_to_end() {
  namespace fs = std::filesystem;
  REQUIRE(!cli_path.empty() && fs::exists(cli_path), "--cli binary not found: " << cli_path);
  REQUIRE(!data_path.empty() && fs::exists(data_path), "--data file not found: " << data_path);
  fs::create_directories(scratch_dir);

  // 500-sample slice of the committed dataset.
  std::string slice = scratch_dir + "/slice500.libsvm";
  {
    std::istringstream in(read_file(data_path));
    std::ofstream out(slice);
    std::string line;
    for (int i = 0; i < 500 && std::getline(in, line); ++i) out << line << '\n';
  }

  std::string out_a = scratch_dir + "/bench_a";
  std::string out_b = scratch_dir + "/bench_b";
  std::string bench_flags =
      " --seed 5 --timing off --max-iter 4000 --data " + slice + " --out ";
  REQUIRE(run_cli("benchmark" + bench_flags + out_a) == 0, "first benchmark run failed");
  REQUIRE(run_cli("benchmark" + bench_flags + out_b) == 0, "second benchmark run failed");

  auto manifest = read_manifest(out_a + "/manifest.txt");
  REQUIRE(read_file(out_a + "/manifest.txt") == read_file(out_b + "/manifest.txt"),
          "manifests differ between identical runs");
  std::vector<std::string> names = {"gd", "agd", "newton"};
  for (const auto& [key, val] : manifest)
    if (key.rfind("rsn_s", 0) == 0 && key.size() > 5 && key.find(".file") != std::string::npos)
      names.push_back(key.substr(0, key.find('.')));
  REQUIRE(names.size() >= 6, "expected at least six benchmark runs, saw " << names.size());
  for (const std::string& name : names) {
    REQUIRE(manifest.count(name + ".file") == 1, "manifest missing entry for " << name);
    std::string file = manifest[name + ".file"];
    REQUIRE(read_file(out_a + "/" + file) == read_file(out_b + "/" + file),
            "trace " << file << " differs between identical runs");
  }

  // Full-dimension sketch vs dense newton, row by row.
  Index d = static_cast<Index>(std::stol(manifest["features"]));
  std::vector<TraceRow> newton_rows = read_trace(out_a + "/newton.csv");
  std::vector<TraceRow> full_rows =
      read_trace(out_a + "/rsn_s" + std::to_string(d) + ".csv");
  REQUIRE(newton_rows.size() == full_rows.size(), "newton and full-sketch traces differ in length");
  for (std::size_t i = 0; i < newton_rows.size(); ++i)
    REQUIRE(std::abs(newton_rows[i].f - full_rows[i].f) <=
                1e-10 * (1.0 + std::abs(newton_rows[i].f)),
            "f columns diverge at row " << i);

  // Reduced sketch sizes still reach the gradient tolerance.
  for (const std::string& name : names) {
    if (name.rfind("rsn_s", 0) != 0) continue;
    if (name == "rsn_s" + std::to_string(d)) continue;
    REQUIRE(manifest[name + ".converged"] == "1", name << " did not converge within budget");
  }

  // Contract spot checks on the other subcommands.
  std::string solve_out = scratch_dir + "/solve_zero";
  REQUIRE(run_cli("solve --data " + slice + " --tol 1000 --timing off --out " + solve_out) == 0,
          "already-converged solve should exit 0");
  REQUIRE(read_file(solve_out + "/trace.csv") == std::string(kTraceHeader) + "\n",
          "zero-iteration run should emit a header-only trace");
  REQUIRE(run_cli("solve --data " + slice + " --sketch coordinate --sketch-size 100000 --out " +
                  scratch_dir + "/solve_bad") == 1,
          "oversized sketch should exit 1");

  std::string diag_flags =
      " --data " + slice + " --link squared --lambda 0.001 --sketch identity --pairs 2000";
  REQUIRE(run_cli("diagnose" + diag_flags + " --out " + scratch_dir + "/diag_ok") == 0,
          "clean diagnose should exit 0");
  auto report = read_manifest(scratch_dir + "/diag_ok/diagnose.txt");
  REQUIRE(report.count("rho") == 1, "diagnose report is missing the rate constant");
  REQUIRE(std::abs(std::stod(report["rho"]) - 1.0) <= 1e-10,
          "identity-sketch rho reported as " << report["rho"]);
  REQUIRE(run_cli("diagnose" + diag_flags + " --l-hat-scale 0.5 --out " + scratch_dir +
                  "/diag_bad") == 3,
          "corrupted smoothness constant should exit 3");
  auto bad_report = read_manifest(scratch_dir + "/diag_bad/diagnose.txt");
  REQUIRE(bad_report.count("audit_witness_gap") == 1, "violation report lacks a witness");
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--cli")
      cli_path = argv[i + 1];
    else if (flag == "--data")
      data_path = argv[i + 1];
    else if (flag == "--scratch")
      scratch_dir = argv[i + 1];
    else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }
  if (scratch_dir.empty()) scratch_dir = "acceptance_scratch";

  struct Criterion {
    const char* name;
    std::function<void()> body;
  };
  std::vector<Criterion> criteria = {
      {"newton-one-step-quadratic", criterion_newton_one_step},
      {"descent-all-sketches", criterion_descent},
      {"formulation-equivalence", criterion_formulation_equivalence},
      {"exact-rate-constants", criterion_exact_rho},
      {"per-step-contraction", criterion_per_step_rate},
      {"sublinear-envelope", criterion_sublinear_envelope},
      {"rank-one-closed-forms", criterion_rank_one_closed_form},
      {"oracle-correctness", criterion_oracles},
      {"line-search-contract", criterion_line_search},
      {"cli-end-to-end", criterion_cli_end_to_end},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    try {
      criterion.body();
    } catch (const CriterionFailure& f) {
      detail = f.detail;
    } catch (const std::exception& e) {
      detail = std::string("unexpected exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (detail.empty()) {
      std::printf("[PASS] %-28s (%.2fs)\n", criterion.name, elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] %-28s (%.2fs) %s\n", criterion.name, elapsed, detail.c_str());
    }
  }
  if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
