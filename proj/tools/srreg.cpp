#include "srreg/bench.hpp"
#include "srreg/data.hpp"
#include "srreg/metrics.hpp"
#include "srreg/pmm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

using namespace srreg;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolve = 2, kIo = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

// Options shared by solve/bench, kept as text so a config file can supply
// the same keys and only flags actually given override it.
struct Common {
  std::map<std::string, std::string> given;
  std::map<std::string, CLI::Option*> opts;
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    opts[key] = app->add_option("--" + key, values[key], help);
  }
  std::map<std::string, std::string> collect() const {
    std::map<std::string, std::string> kv;
    for (const auto& [k, o] : opts) {
      if (o->count() > 0) kv[k] = values.at(k);
    }
    return kv;
  }
};

void add_plan_options(Common& c, CLI::App* app, bool bench) {
  c.add(app, "solver", bench ? "Comma-separated solvers: pmm, padmm, dadmm, admm-nc" : "pmm, padmm, dadmm or admm-nc");
  c.add(app, "reg", "Penalty: l1, scad or mcp");
  c.add(app, "lambda-c", bench ? "Comma-separated lambda_c grid" : "lambda_c (lambda = lambda_c * Lambda(n))");
  c.add(app, "tol", "Stopping tolerance on eta (default 1e-6)");
  c.add(app, "seed", bench ? "Comma-separated seeds" : "Seed of the synthetic instance");
  c.add(app, "example", "Synthetic example 1-4");
  c.add(app, "m", "Training rows of the synthetic instance (validation/test get m/4)");
  c.add(app, "n", "Override the example's dimension");
  c.add(app, "data", "LIBSVM file instead of a synthetic example");
  c.add(app, "a", "SCAD/MCP shape parameter (default 3.7)");
  c.add(app, "maxit", "ADMM iteration limit (default 10000)");
  c.add(app, "pmm-maxit", "PMM outer iteration limit (default 200)");
  c.add(app, "scale", "Scale columns to unit norm (file data): true/false");
  c.add(app, "out", "Output file (default: standard output)");
  c.add(app, "format", "csv or json");
  if (bench) {
    c.add(app, "threads", "Worker threads");
    c.add(app, "cv-folds", "Folds for file datasets (default 10)");
  }
}

void emit(const bench::BenchPlan& plan, const std::vector<bench::ReportRow>& rows) {
  if (plan.out.empty()) {
    bench::write_report(std::cout, rows, plan.format);
    return;
  }
  std::ofstream f(plan.out);
  if (!f) throw data::IoError("cannot open output file " + plan.out);
  bench::write_report(f, rows, plan.format);
  if (!f) throw data::IoError("failed writing " + plan.out);
}

bench::BenchPlan make_plan(const Common& c, const std::string& config) {
  bench::BenchPlan plan;
  std::map<std::string, std::string> kv;
  if (!config.empty()) {
    std::ifstream f(config);
    if (!f) throw data::IoError("cannot open config file " + config);
    kv = bench::parse_config(f, config);
  }
  for (const auto& [k, v] : c.collect()) kv[k] = v;
  try {
    bench::apply_options(plan, kv);
  } catch (const data::IoError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return plan;
}

int cmd_solve(const bench::BenchPlan& plan) {
  if (plan.solvers.size() != 1 || plan.lambda_c.size() != 1 || plan.seeds.size() != 1) {
    throw UsageError("solve takes exactly one solver, one lambda_c and one seed");
  }
  try {
    plan.validate();
  } catch (const data::IoError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  ProblemData train;
  const data::SyntheticData* syn = nullptr;
  data::SyntheticData sd;
  std::string probname;
  if (plan.data_path.empty()) {
    sd = data::gen_synthetic(data::SyntheticSpec::desk(plan.example, plan.m, plan.seeds[0], plan.n));
    train = sd.train;
    syn = &sd;
    probname = "ex" + std::to_string(plan.example);
  } else {
    train = data::read_libsvm(plan.data_path);
    if (plan.scale) data::scale_columns(train);
    probname = std::filesystem::path(plan.data_path).stem().string();
  }
  const bench::Solver solver = plan.solvers[0];
  const RegularizerSpec spec{plan.reg, metrics::lambda_from_c(plan.lambda_c[0], train.n()), plan.a, plan.a};

  bench::ReportRow row;
  row.probname = probname;
  row.seed = plan.seeds[0];
  row.m = static_cast<long>(train.m());
  row.n = static_cast<long>(train.n());
  row.reg = std::string(to_string(plan.reg));
  row.lambda_c = plan.lambda_c[0];
  row.lambda = spec.lambda;
  row.solver = std::string(bench::to_string(solver));
  row.val_error = row.test_error = std::numeric_limits<double>::quiet_NaN();
  int code = kOk;
  try {
    const SolveResult r = bench::run_solver(solver, train, spec, plan.options);
    row.status = r.converged ? "ok" : "not_converged";
    row.nnz = r.nnz;
    row.eta = bench::reported_eta(r, plan.reg);
    row.pobj = r.pobj;
    row.iters = r.iters;
    row.wall_time = r.wall_time;
    if (syn) {
      row.val_error = metrics::test_error(syn->val.X, syn->val.b, r.beta);
      row.test_error = metrics::test_error(syn->test.X, syn->test.b, r.beta);
    }
    if (!r.converged) code = kSolve;
  } catch (const std::exception& e) {
    std::cerr << "srreg: solve failed: " << e.what() << '\n';
    return kSolve;
  }
  emit(plan, {row});
  return code;
}

int cmd_bench(const bench::BenchPlan& plan) {
  try {
    plan.validate();
  } catch (const data::IoError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto rows = bench::run_bench(plan);
  emit(plan, rows);
  return kOk;
}

struct GenArgs {
  int example = 1;
  std::uint64_t seed = 0;
  long m = 0;
  long n = 0;
  std::string out = ".";
};

int cmd_gen(const GenArgs& a) {
  data::SyntheticSpec spec;
  if (a.m > 0) spec = data::SyntheticSpec::desk(a.example, a.m, a.seed, a.n);
  spec.example = a.example;
  spec.seed = a.seed;
  spec.n = a.n;
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto d = data::gen_synthetic(spec);
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw data::IoError("cannot create directory " + a.out + ": " + ec.message());
  const std::string stem = a.out + "/ex" + std::to_string(a.example) + "_s" + std::to_string(a.seed);
  data::write_libsvm(stem + "_train.libsvm", d.train);
  data::write_libsvm(stem + "_val.libsvm", d.val);
  data::write_libsvm(stem + "_test.libsvm", d.test);
  std::cout << stem << "_train.libsvm\n" << stem << "_val.libsvm\n" << stem << "_test.libsvm\n";
  return kOk;
}

struct DiagArgs {
  int example = 1;
  std::uint64_t seed = 1;
  long m = 200;
  long n = 100;
  double lambda_c = 0.5;
  double sigma = 1e-3;
  double tau = 1e-3;
  std::string out;
};

int cmd_diag(const DiagArgs& a) {
  const auto spec_data = data::SyntheticSpec::desk(a.example, a.m, a.seed, a.n);
  if (!(a.sigma >= 0.0) || !(a.tau >= 0.0) || !(a.lambda_c > 0.0)) {
    throw UsageError("diag: sigma and tau must be non-negative and lambda-c positive");
  }
  try {
    spec_data.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto d = data::gen_synthetic(spec_data);
  const auto spec = RegularizerSpec::l1(metrics::lambda_from_c(a.lambda_c, d.train.n()));
  Vec beta_hat;
  try {
    beta_hat = pmm::proximal_estimator(d.train, spec, a.sigma, a.tau);
  } catch (const std::exception& e) {
    std::cerr << "srreg: diag failed: " << e.what() << '\n';
    return kSolve;
  }
  const auto o = metrics::oracle_diagnostics(d.train, spec, beta_hat, d.truth, a.sigma, a.tau);
  const nlohmann::json j = {{"example", a.example},
                            {"seed", a.seed},
                            {"m", d.train.m()},
                            {"n", d.train.n()},
                            {"sigma", a.sigma},
                            {"tau", a.tau},
                            {"lambda", o.lambda},
                            {"lambda0", o.lambda0},
                            {"lambda_m", o.lambda_m},
                            {"n_p", o.n_p},
                            {"t1", o.t1},
                            {"t2", o.t2},
                            {"a", o.a},
                            {"c_l", o.c_l},
                            {"c_u", o.c_u},
                            {"ratio", o.ratio},
                            {"assumption_holds", o.assumption_holds},
                            {"inner_product_bound_lhs", o.inner_bound_lhs},
                            {"inner_product_bound_rhs", o.inner_bound_rhs},
                            {"inner_product_bound_ok", o.inner_bound_ok},
                            {"residual_ratio_upper_ok", o.ratio_upper_ok},
                            {"residual_ratio_ok", o.ratio_bounds_ok},
                            {"lambda_m_bounds_ok", o.lambda_m_ok}};
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream f(a.out);
    if (!f) throw data::IoError("cannot open output file " + a.out);
    f << j.dump(2) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Square-root regression solvers: PMM with semismooth Newton subproblems, and ADMM baselines"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic example as LIBSVM train/val/test files");
  g->add_option("--example", gen.example, "Example 1-4")->check(CLI::Range(1, 4));
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--m", gen.m, "Training rows (validation/test get m/4); default 8000/2000/2000");
  g->add_option("--n", gen.n, "Override the example's dimension");
  g->add_option("--out", gen.out, "Output directory");

  Common solve_opts;
  std::string solve_config;
  auto* s = app.add_subcommand("solve", "Solve one instance and print a one-row report");
  add_plan_options(solve_opts, s, false);
  s->add_option("--config", solve_config, "key = value file; flags override it");

  Common bench_opts;
  std::string bench_config;
  auto* b = app.add_subcommand("bench", "Run solvers over a lambda_c grid and seeds");
  add_plan_options(bench_opts, b, true);
  b->add_option("--config", bench_config, "key = value file; flags override it");

  DiagArgs diag;
  auto* d = app.add_subcommand("diag", "Oracle-inequality diagnostics of the proximal l1 estimator");
  d->add_option("--example", diag.example, "Example 1-4")->check(CLI::Range(1, 4));
  d->add_option("--seed", diag.seed, "Generator seed");
  d->add_option("--m", diag.m, "Training rows");
  d->add_option("--n", diag.n, "Dimension");
  d->add_option("--lambda-c", diag.lambda_c, "lambda_c");
  d->add_option("--sigma", diag.sigma, "Weight of (1/2)||beta||^2");
  d->add_option("--tau", diag.tau, "Weight of (1/2)||X beta - b||^2");
  d->add_option("--out", diag.out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*s) return cmd_solve(make_plan(solve_opts, solve_config));
    if (*b) return cmd_bench(make_plan(bench_opts, bench_config));
    if (*d) return cmd_diag(diag);
  } catch (const UsageError& e) {
    std::cerr << "srreg: " << e.what() << '\n';
    return kUsage;
  } catch (const data::IoError& e) {
    std::cerr << "srreg: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "srreg: " << e.what() << '\n';
    return kSolve;
  }
  return kUsage;
}
