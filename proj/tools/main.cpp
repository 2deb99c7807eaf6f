#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsn/diagnostics.hpp"
#include "rsn/glm.hpp"
#include "rsn/io.hpp"
#include "rsn/linalg.hpp"
#include "rsn/sketch.hpp"
#include "rsn/solver.hpp"
#include "rsn/types.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rsn;

struct Options {
  std::string data_path;
  std::string method = "rsn";
  std::string sketch = "coordinate";
  long sketch_size = 0;  // 0 picks a default of d/4
  std::string sketch_sizes;  // benchmark: comma list, defaults to d/8,d/4
  double lambda = 1e-10;
  double tol = 1e-6;
  long max_iter = 500;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool line_search = false;
  std::string link = "logistic";
  std::string timing = "wall";
  long pairs = 2000;
  double l_hat_scale = 1.0;  // diagnostic fault injection; 1 = constants as computed
};

std::string default_out_dir() {
  const char* env = std::getenv("RSN_OUT_DIR");
  return env && *env ? env : "out";
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct Problem {
  GlmObjective obj;
  std::string dataset_digest;
  Index raw_features = 0;
};

LinkKind parse_link(const std::string& name) {
  if (name == "logistic") return LinkKind::logistic;
  if (name == "squared") return LinkKind::squared;
  throw Error("unknown link '" + name + "' (expected logistic or squared)");
}

Problem load_problem(const Options& opt) {
  std::string bytes = read_file(opt.data_path);
  std::istringstream stream(bytes);
  Dataset raw = parse_libsvm(stream);
  Index raw_features = raw.a.rows();
  Dataset data = preprocess(raw);
  return {GlmObjective(std::move(data.a), std::move(data.targets), opt.lambda,
                       parse_link(opt.link)),
          hex64(fnv1a64(bytes)), raw_features};
}

Index resolve_sketch_size(const Options& opt, Index d) {
  if (opt.sketch_size > 0) return static_cast<Index>(opt.sketch_size);
  return std::max<Index>(1, d / 4);
}

SketchDistribution make_distribution(const std::string& kind, const GlmObjective& obj, Index s,
                                     std::uint64_t seed) {
  Index d = obj.dim();
  if (kind == "identity") return make_identity_sketch(d);
  if (kind == "coordinate") return make_coordinate_sketch(d, s, seed);
  if (kind == "uniform") return make_uniform_coordinate_sketch(d, seed);
  if (kind == "gaussian") return make_gaussian_sketch(d, s, seed);
  if (kind == "single-column") {
    // Canonical D = I: weights are the diagonal of (ell/n) A A^T + lambda I.
    Vector weights(d);
    double n = static_cast<double>(obj.samples());
    for (Index i = 0; i < d; ++i) {
      double row_sq = 0.0;
      for (RowSparseMatrix::InnerIterator it(obj.data_by_row(), i); it; ++it)
        row_sq += it.value() * it.value();
      weights(i) = (n > 0 ? obj.curvature_upper() * row_sq / n : 0.0) + obj.reg();
    }
    return make_single_column_sketch(weights / weights.sum(), seed);
  }
  throw Error("unknown sketch '" + kind +
              "' (expected identity, coordinate, uniform, gaussian, or single-column)");
}

Method parse_method(const std::string& name) {
  if (name == "rsn") return Method::rsn;
  if (name == "rsn-ls") return Method::rsn_ls;
  if (name == "newton") return Method::newton;
  if (name == "gd") return Method::gd;
  if (name == "agd") return Method::agd;
  throw Error("unknown method '" + name + "' (expected rsn, rsn-ls, newton, gd, or agd)");
}

SolverConfig build_config(const Options& opt) {
  SolverConfig config;
  config.method = parse_method(opt.method);
  config.step_mode = opt.line_search ? StepMode::line_search : StepMode::fixed_relative;
  config.tol = opt.tol;
  config.max_iter = static_cast<Index>(opt.max_iter);
  config.seed = opt.seed;
  config.record_wall_clock = opt.timing == "wall";
  return config;
}

void append_run_metadata(std::vector<std::pair<std::string, std::string>>& kv,
                         const std::string& prefix, const RunResult& result) {
  kv.emplace_back(prefix + "converged", result.converged ? "1" : "0");
  kv.emplace_back(prefix + "iterations", std::to_string(result.state.k));
  kv.emplace_back(prefix + "final_f", format_g17(result.state.f));
  kv.emplace_back(prefix + "final_grad_norm", format_g17(result.state.g.norm()));
  kv.emplace_back(prefix + "trace_digest", hex64(trace_digest(result.trace)));
}

int cmd_solve(const Options& opt) {
  Problem problem = load_problem(opt);
  const GlmObjective& obj = problem.obj;
  Index s = resolve_sketch_size(opt, obj.dim());
  SketchDistribution dist = make_distribution(opt.sketch, obj, s, opt.seed);
  SolverConfig config = build_config(opt);

  RunResult result = run(config, obj, dist, Vector::Zero(obj.dim()));

  fs::create_directories(opt.out_dir);
  std::string trace_path = (fs::path(opt.out_dir) / "trace.csv").string();
  write_trace(trace_path, result.trace);

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", "solve");
  kv.emplace_back("dataset", opt.data_path);
  kv.emplace_back("dataset_digest", problem.dataset_digest);
  kv.emplace_back("features_raw", std::to_string(problem.raw_features));
  kv.emplace_back("features", std::to_string(obj.dim()));
  kv.emplace_back("samples", std::to_string(obj.samples()));
  kv.emplace_back("link", opt.link);
  kv.emplace_back("lambda", format_g17(opt.lambda));
  kv.emplace_back("method", opt.method);
  kv.emplace_back("sketch", opt.sketch);
  kv.emplace_back("sketch_size", std::to_string(dist.size));
  kv.emplace_back("line_search", opt.line_search ? "1" : "0");
  kv.emplace_back("tol", format_g17(opt.tol));
  kv.emplace_back("max_iter", std::to_string(opt.max_iter));
  kv.emplace_back("seed", std::to_string(opt.seed));
  kv.emplace_back("timing", opt.timing);
  kv.emplace_back("trace", trace_path);
  append_run_metadata(kv, "", result);
  write_key_values((fs::path(opt.out_dir) / "metadata.txt").string(), kv);

  std::cout << "k=" << result.state.k << " f=" << format_g17(result.state.f)
            << " grad_norm=" << format_g17(result.state.g.norm()) << "\n";
  return result.converged ? 0 : 2;
}

std::vector<Index> benchmark_sizes(const Options& opt, Index d) {
  std::vector<Index> sizes;
  if (opt.sketch_sizes.empty()) {
    sizes.push_back(std::max<Index>(1, d / 8));
    sizes.push_back(std::max<Index>(1, d / 4));
  } else {
    std::istringstream stream(opt.sketch_sizes);
    std::string token;
    while (std::getline(stream, token, ',')) {
      if (token.empty()) continue;
      long v = std::strtol(token.c_str(), nullptr, 10);
      if (v < 1) throw Error("benchmark: sketch sizes must be positive integers");
      sizes.push_back(static_cast<Index>(v));
    }
    if (sizes.empty()) throw Error("benchmark: no sketch sizes given");
  }
  return sizes;
}

int cmd_benchmark(const Options& opt) {
  Problem problem = load_problem(opt);
  const GlmObjective& obj = problem.obj;
  Index d = obj.dim();

  struct Entry {
    std::string name;
    SolverConfig config;
    SketchDistribution dist;
  };
  std::vector<Entry> entries;
  SolverConfig base = build_config(opt);

  {
    SolverConfig c = base;
    c.method = Method::gd;
    c.step_mode = StepMode::fixed_relative;
    entries.push_back({"gd", c, make_identity_sketch(d)});
    c.method = Method::agd;
    entries.push_back({"agd", c, make_identity_sketch(d)});
  }
  {
    // Second-order methods follow the experimental protocol: exact
    // line search along each direction.
    SolverConfig c = base;
    c.method = Method::newton;
    c.step_mode = StepMode::line_search;
    entries.push_back({"newton", c, make_identity_sketch(d)});
    c.method = Method::rsn_ls;
    entries.push_back({"rsn_s" + std::to_string(d), c, make_coordinate_sketch(d, d, opt.seed)});
    for (Index s : benchmark_sizes(opt, d))
      entries.push_back(
          {"rsn_s" + std::to_string(s), c, make_coordinate_sketch(d, s, opt.seed)});
  }

  fs::create_directories(opt.out_dir);
  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("command", "benchmark");
  manifest.emplace_back("dataset", opt.data_path);
  manifest.emplace_back("dataset_digest", problem.dataset_digest);
  manifest.emplace_back("features", std::to_string(d));
  manifest.emplace_back("samples", std::to_string(obj.samples()));
  manifest.emplace_back("link", opt.link);
  manifest.emplace_back("lambda", format_g17(opt.lambda));
  manifest.emplace_back("tol", format_g17(opt.tol));
  manifest.emplace_back("max_iter", std::to_string(opt.max_iter));
  manifest.emplace_back("seed", std::to_string(opt.seed));
  manifest.emplace_back("timing", opt.timing);

  bool any_failed = false;
  for (const Entry& entry : entries) {
    std::string file = entry.name + ".csv";
    std::string path = (fs::path(opt.out_dir) / file).string();
    manifest.emplace_back(entry.name + ".file", file);
    manifest.emplace_back(entry.name + ".sketch_size", std::to_string(entry.dist.size));
    try {
      RunResult result = run(entry.config, obj, entry.dist, Vector::Zero(d));
      write_trace(path, result.trace);
      append_run_metadata(manifest, entry.name + ".", result);
      std::cout << entry.name << ": k=" << result.state.k
                << " grad_norm=" << format_g17(result.state.g.norm())
                << (result.converged ? "" : " (budget exhausted)") << "\n";
    } catch (const Error& e) {
      any_failed = true;
      manifest.emplace_back(entry.name + ".error", e.what());
      std::cerr << entry.name << ": error: " << e.what() << "\n";
    }
  }
  write_key_values((fs::path(opt.out_dir) / "manifest.txt").string(), manifest);
  return any_failed ? 1 : 0;
}

int cmd_diagnose(const Options& opt) {
  Problem problem = load_problem(opt);
  const GlmObjective& obj = problem.obj;
  Index d = obj.dim();
  fs::create_directories(opt.out_dir);
  std::string report_path = (fs::path(opt.out_dir) / "diagnose.txt").string();

  std::vector<std::pair<std::string, std::string>> report;
  report.emplace_back("command", "diagnose");
  report.emplace_back("dataset", opt.data_path);
  report.emplace_back("dataset_digest", problem.dataset_digest);
  report.emplace_back("features", std::to_string(d));
  report.emplace_back("samples", std::to_string(obj.samples()));
  report.emplace_back("lambda", format_g17(opt.lambda));

  RelativeConstants constants = relative_constants(obj, opt.seed);
  if (opt.l_hat_scale != 1.0) {
    constants.l_hat *= opt.l_hat_scale;
    report.emplace_back("l_hat_scale", format_g17(opt.l_hat_scale));
  }
  report.emplace_back("sigma_max_sq", format_g17(constants.sigma_max_sq));
  report.emplace_back("l_hat", format_g17(constants.l_hat));
  report.emplace_back("mu_hat", format_g17(constants.mu_hat));

  // Side 1: sampled audit of the smoothness/convexity sandwich.
  try {
    ConstantsAudit audit = verify_relative_constants(obj, constants,
                                                     static_cast<Index>(opt.pairs), opt.seed);
    report.emplace_back("audit_pairs", std::to_string(audit.pairs_checked));
    report.emplace_back("audit_upper_violations", "0");
    report.emplace_back("audit_lower_violations", "0");
    report.emplace_back("audit_worst_upper_slack", format_g17(audit.worst_upper_slack));
    report.emplace_back("audit_worst_lower_slack", format_g17(audit.worst_lower_slack));
    report.emplace_back("audit_c_ratio_max", format_g17(audit.c_ratio_max));
  } catch (const ViolationFound& e) {
    report.emplace_back("audit_upper_violations",
                        std::to_string(e.audit.upper_violations));
    report.emplace_back("audit_lower_violations",
                        std::to_string(e.audit.lower_violations));
    report.emplace_back("audit_witness_gap", format_g17(e.audit.witness_gap));
    std::ostringstream wx, wy;
    wx << e.audit.witness_x.transpose();
    wy << e.audit.witness_y.transpose();
    report.emplace_back("audit_witness_x", wx.str());
    report.emplace_back("audit_witness_y", wy.str());
    report.emplace_back("audit_result", "violation");
    write_key_values(report_path, report);
    std::cerr << "diagnose: " << e.what() << "\n";
    return 3;
  }

  // Side 2: rho at the origin for the requested sketch.
  Index s = resolve_sketch_size(opt, d);
  SketchDistribution dist = make_distribution(opt.sketch, obj, s, opt.seed);
  ExpectationMode mode =
      dist.kind == SketchKind::gaussian ? ExpectationMode::monte_carlo : ExpectationMode::exact;
  RhoEstimate rho = rho_at(obj, Vector::Zero(d), dist, mode, 20000);
  report.emplace_back("rho_sketch", opt.sketch);
  report.emplace_back("rho_sketch_size", std::to_string(dist.size));
  report.emplace_back("rho", format_g17(rho.value));
  report.emplace_back("rho_mode", rho.mode == ExpectationMode::exact ? "exact" : "monte-carlo");
  report.emplace_back("rho_samples", std::to_string(rho.samples));
  if (rho.mode == ExpectationMode::monte_carlo)
    report.emplace_back("rho_std_error", format_g17(rho.std_error));
  report.emplace_back("rho_exactness", rho.exactness_verified ? "verified" : "unverified");
  report.emplace_back("rate_factor", format_g17(1.0 - rho.value * constants.mu_hat /
                                                          constants.l_hat));

  // Side 3: the three equivalent forms of the sketched direction.
  CounterRng rng(opt.seed, kStreamDiagnostics, 1);
  double worst_direction_dev = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(d);
    for (Index i = 0; i < d; ++i) x(i) = 0.3 * rng.gaussian();
    SketchMatrix sk = sample(dist, static_cast<std::uint64_t>(trial));
    Vector g = gradient(obj, x);
    Matrix m = sketched_hessian(obj, x, sk);
    Vector lam = pseudo_solve(m, Vector(-sketch_transpose_vec(sk, g)));
    Vector direct = expand(sk, lam);
    Matrix h = dense_hessian(obj, x);
    Matrix sd = to_dense(sk);
    Matrix pinv = pseudo_inverse(Matrix(sd.transpose() * h * sd));
    Vector projected = -sd * (pinv * (sd.transpose() * (h * pseudo_solve(h, g))));
    double scale = std::max(1.0, direct.norm());
    worst_direction_dev = std::max(worst_direction_dev, (direct - projected).norm() / scale);
  }
  bool directions_ok = worst_direction_dev <= 1e-8;
  report.emplace_back("direction_equivalence_dev", format_g17(worst_direction_dev));
  report.emplace_back("direction_equivalence", directions_ok ? "pass" : "fail");

  report.emplace_back("audit_result", directions_ok ? "pass" : "violation");
  write_key_values(report_path, report);
  std::cout << "rho=" << format_g17(rho.value) << " l_hat=" << format_g17(constants.l_hat)
            << " audit=pass direction_dev=" << format_g17(worst_direction_dev) << "\n";
  return directions_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized subspace Newton solvers over sparse GLMs"};
  app.require_subcommand(1);

  Options opt;
  opt.out_dir = default_out_dir();

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--data", opt.data_path, "LIBSVM dataset path")->required();
    cmd->add_option("--lambda", opt.lambda, "ridge weight");
    cmd->add_option("--tol", opt.tol, "gradient-norm stopping tolerance");
    cmd->add_option("--max-iter", opt.max_iter, "iteration budget");
    cmd->add_option("--seed", opt.seed, "rng seed");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--link", opt.link, "loss link: logistic or squared");
    cmd->add_option("--timing", opt.timing,
                    "wall: record wall-clock in traces; off: write 0 for byte-stable output");
  };

  CLI::App* solve = app.add_subcommand("solve", "run one method on one dataset");
  add_common(solve);
  solve->add_option("--method", opt.method, "rsn, rsn-ls, newton, gd, or agd");
  solve->add_option("--sketch", opt.sketch,
                    "identity, coordinate, uniform, gaussian, or single-column");
  solve->add_option("--sketch-size", opt.sketch_size, "columns of the sketch (default d/4)");
  solve->add_flag("--line-search", opt.line_search, "exact line search instead of fixed 1/L");

  CLI::App* benchmark = app.add_subcommand("benchmark", "trace suite: gd, agd, newton, rsn");
  add_common(benchmark);
  benchmark->add_option("--sketch-sizes", opt.sketch_sizes,
                        "comma-separated rsn sketch sizes (default d/8,d/4)");

  CLI::App* diagnose = app.add_subcommand("diagnose", "constants audit and rate diagnostics");
  add_common(diagnose);
  diagnose->add_option("--sketch", opt.sketch, "sketch distribution for the rho report");
  diagnose->add_option("--sketch-size", opt.sketch_size, "columns of the sketch");
  diagnose->add_option("--pairs", opt.pairs, "level-set pairs for the constants audit");
  diagnose->add_option("--l-hat-scale", opt.l_hat_scale,
                       "scale the smoothness constant before auditing (fault injection)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(opt);
    if (benchmark->parsed()) return cmd_benchmark(opt);
    if (diagnose->parsed()) return cmd_diagnose(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
