#include "srreg/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace srreg::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t == "nan") return kNaN;
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw Error("invalid number for " + std::string(what) + ": '" + t + "'");
  }
  return v;
}

template <typename Int>
Int to_int(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  Int v{};
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    throw Error("invalid integer for " + std::string(what) + ": '" + t + "'");
  }
  return v;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

std::string probname_of(const BenchPlan& plan) {
  if (plan.data_path.empty()) return "ex" + std::to_string(plan.example);
  return std::filesystem::path(plan.data_path).stem().string();
}

ReportRow failed_row(ReportRow row, const std::string& msg) {
  row.status = "error: " + msg;
  std::replace(row.status.begin(), row.status.end(), '\n', ' ');
  std::replace(row.status.begin(), row.status.end(), '\r', ' ');
  row.nnz = 0;
  row.eta = row.pobj = row.val_error = row.test_error = kNaN;
  row.iters = 0;
  return row;
}

void fill_from_result(ReportRow& row, const SolveResult& r, PenaltyKind kind) {
  row.status = r.converged ? "ok" : "not_converged";
  row.nnz = r.nnz;
  row.eta = reported_eta(r, kind);
  row.pobj = r.pobj;
  row.iters = r.iters;
  row.wall_time = round_ms(r.wall_time);
}

struct Task {
  std::size_t solver = 0, lambda = 0, seed = 0;
};

// Dataset shared read-only by all tasks of one seed.
struct Prepared {
  data::SyntheticData synthetic;  // synthetic plans
  ProblemData full;               // file plans
  std::vector<std::vector<Eigen::Index>> folds;
};

ReportRow run_task(const BenchPlan& plan, const Prepared& prep, const Task& t) {
  const Solver solver = plan.solvers[t.solver];
  const double lc = plan.lambda_c[t.lambda];
  ReportRow row;
  row.probname = probname_of(plan);
  row.seed = plan.seeds[t.seed];
  row.reg = std::string(to_string(plan.reg));
  row.lambda_c = lc;
  row.solver = std::string(to_string(solver));
  row.test_error = kNaN;
  row.val_error = kNaN;

  const bool synthetic = plan.data_path.empty();
  const ProblemData train = synthetic ? prep.synthetic.train : prep.full;  // task-local copy
  row.m = static_cast<long>(train.m());
  row.n = static_cast<long>(train.n());
  RegularizerSpec spec{plan.reg, metrics::lambda_from_c(lc, train.n()), plan.a, plan.a};
  row.lambda = spec.lambda;
  try {
    const SolveResult r = run_solver(solver, train, spec, plan.options);
    fill_from_result(row, r, plan.reg);
    if (synthetic) {
      row.val_error = metrics::test_error(prep.synthetic.val.X, prep.synthetic.val.b, r.beta);
      row.test_error = metrics::test_error(prep.synthetic.test.X, prep.synthetic.test.b, r.beta);
    } else {
      double sum = 0.0;
      for (std::size_t f = 0; f < prep.folds.size(); ++f) {
        std::vector<Eigen::Index> rest;
        for (std::size_t g = 0; g < prep.folds.size(); ++g) {
          if (g != f) rest.insert(rest.end(), prep.folds[g].begin(), prep.folds[g].end());
        }
        std::sort(rest.begin(), rest.end());
        const ProblemData tr = data::subset_rows(train, rest);
        const ProblemData va = data::subset_rows(train, prep.folds[f]);
        const SolveResult rf = run_solver(solver, tr, spec, plan.options);
        sum += metrics::test_error(va.X, va.b, rf.beta);
      }
      row.val_error = sum / static_cast<double>(prep.folds.size());
    }
  } catch (const std::exception& e) {
    return failed_row(row, e.what());
  }
  return row;
}

ReportRow best_row(const BenchPlan& plan, const std::vector<ReportRow>& rows, std::size_t s) {
  const std::size_t nl = plan.lambda_c.size(), ns = plan.seeds.size();
  ReportRow best;
  best.kind = "best";
  best.probname = probname_of(plan);
  best.seed = 0;
  best.reg = std::string(to_string(plan.reg));
  best.solver = std::string(to_string(plan.solvers[s]));
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_l = nl;
  for (std::size_t l = 0; l < nl; ++l) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < ns; ++k) {
      const ReportRow& r = rows[(s * nl + l) * ns + k];
      if (!std::isfinite(r.val_error)) ok = false;
      sum += r.val_error;
    }
    if (ok && sum / static_cast<double>(ns) < best_val) {
      best_val = sum / static_cast<double>(ns);
      best_l = l;
    }
  }
  if (best_l == nl) {
    best.m = rows[s * nl * ns].m;
    best.n = rows[s * nl * ns].n;
    return failed_row(best, "no successful lambda_c");
  }
  const double d = static_cast<double>(ns);
  double nnz = 0.0, eta = 0.0, pobj = 0.0, test = 0.0, iters = 0.0, time = 0.0;
  bool all_ok = true;
  for (std::size_t k = 0; k < ns; ++k) {
    const ReportRow& r = rows[(s * nl + best_l) * ns + k];
    nnz += r.nnz;
    eta += r.eta;
    pobj += r.pobj;
    test += r.test_error;
    iters += r.iters;
    time += r.wall_time;
    all_ok = all_ok && r.status == "ok";
    best.m = r.m;
    best.n = r.n;
    best.lambda = r.lambda;
  }
  best.lambda_c = plan.lambda_c[best_l];
  best.status = all_ok ? "ok" : "not_converged";
  best.nnz = static_cast<int>(std::lround(nnz / d));
  best.eta = eta / d;
  best.pobj = pobj / d;
  best.val_error = best_val;
  best.test_error = test / d;
  best.iters = static_cast<int>(std::lround(iters / d));
  best.wall_time = round_ms(time / d);
  return best;
}

// RFC 4180 quoting, only when needed.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error("report line " + std::to_string(lineno) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

// NaN becomes null; ±inf, which JSON cannot hold, the strings "inf"/"-inf".
nlohmann::json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double from_json_num(const nlohmann::json& j) {
  if (j.is_null()) return kNaN;
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error("malformed JSON report: unexpected string '" + s + "' for a number");
  }
  return j.get<double>();
}

}  // namespace

std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::Pmm: return "pmm";
    case Solver::Padmm: return "padmm";
    case Solver::Dadmm: return "dadmm";
    case Solver::AdmmNc: return "admm-nc";
  }
  return "?";
}

Solver parse_solver(std::string_view s) {
  if (s == "pmm") return Solver::Pmm;
  if (s == "padmm") return Solver::Padmm;
  if (s == "dadmm") return Solver::Dadmm;
  if (s == "admm-nc") return Solver::AdmmNc;
  throw Error("unknown solver '" + std::string(s) + "' (expected pmm, padmm, dadmm or admm-nc)");
}

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw Error("unknown format '" + std::string(s) + "' (expected csv or json)");
}

void check_compatible(Solver s, PenaltyKind kind) {
  if ((s == Solver::Padmm || s == Solver::Dadmm) && kind != PenaltyKind::L1) {
    throw Error(std::string(to_string(s)) + " is convex-only and cannot use the " + std::string(to_string(kind)) +
                " penalty");
  }
}

pmm::PmmConfig pmm_config(const SolverOptions& opt) {
  pmm::PmmConfig c;
  c.stage2_tol = opt.tol;
  c.stage2_maxit = opt.pmm_maxit;
  return c;
}

admm::AdmmConfig admm_config(Solver s, const SolverOptions& opt) {
  admm::AdmmConfig c;
  c.tol = opt.tol;
  c.maxit = opt.admm_maxit;
  if (s == Solver::Dadmm) {
    c.zeta_rule = admm::ZetaRule::Scaled;
    c.zeta = 0.3;
  } else {
    c.zeta_rule = admm::ZetaRule::Balance;
  }
  return c;
}

SolveResult run_solver(Solver s, const ProblemData& data, const RegularizerSpec& spec, const SolverOptions& opt) {
  check_compatible(s, spec.kind);
  switch (s) {
    case Solver::Pmm: return pmm::solve(data, spec, pmm_config(opt)).result;
    case Solver::Padmm: return admm::padmm_solve(data, spec, admm_config(s, opt));
    case Solver::Dadmm: return admm::dadmm_solve(data, spec, admm_config(s, opt));
    case Solver::AdmmNc: return admm::admm_nonconvex_solve(data, spec, admm_config(s, opt));
  }
  throw Error("unknown solver");
}

double reported_eta(const SolveResult& r, PenaltyKind kind) {
  return kind == PenaltyKind::L1 ? r.eta_kkt : r.eta_kkt_nc;
}

void BenchPlan::validate() const {
  if (solvers.empty()) throw Error("bench plan: empty solver list");
  if (lambda_c.empty()) throw Error("bench plan: empty lambda_c grid");
  if (seeds.empty()) throw Error("bench plan: empty seed list");
  for (double l : lambda_c) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error("bench plan: lambda_c must be positive");
  }
  for (Solver s : solvers) check_compatible(s, reg);
  if (!(a > 2.0)) throw Error("bench plan: a must exceed 2");
  if (!(options.tol > 0.0)) throw Error("bench plan: tol must be positive");
  if (options.admm_maxit < 1 || options.pmm_maxit < 0) throw Error("bench plan: iteration limits out of range");
  if (threads < 1) throw Error("bench plan: threads must be positive");
  if (data_path.empty()) {
    data::SyntheticSpec::desk(example, m, 0, n).validate();
  } else {
    if (!std::filesystem::exists(data_path)) throw data::IoError("data file not found: " + data_path);
    if (cv_folds < 2) throw Error("bench plan: cv-folds must be at least 2 for file datasets");
  }
}

std::vector<ReportRow> run_bench(const BenchPlan& plan) {
  plan.validate();
  const std::size_t ns = plan.seeds.size(), nl = plan.lambda_c.size(), nsol = plan.solvers.size();

  std::vector<Prepared> prep(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    if (plan.data_path.empty()) {
      prep[k].synthetic = data::gen_synthetic(data::SyntheticSpec::desk(plan.example, plan.m, plan.seeds[k], plan.n));
    } else {
      prep[k].full = data::read_libsvm(plan.data_path);
      if (plan.scale) data::scale_columns(prep[k].full);
      if (prep[k].full.m() < plan.cv_folds) throw Error("bench plan: fewer rows than folds");
      prep[k].folds = data::kfold(prep[k].full.m(), plan.cv_folds, plan.seeds[k]);
    }
  }

  std::vector<Task> tasks;
  for (std::size_t s = 0; s < nsol; ++s)
    for (std::size_t l = 0; l < nl; ++l)
      for (std::size_t k = 0; k < ns; ++k) tasks.push_back({s, l, k});

  std::vector<ReportRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) rows[i] = run_task(plan, prep[tasks[i].seed], tasks[i]);
  };
  const auto nthreads = static_cast<std::size_t>(std::min<long>(plan.threads, static_cast<long>(tasks.size())));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t s = 0; s < nsol; ++s) rows.push_back(best_row(plan, rows, s));
  return rows;
}

std::string_view csv_header() {
  return "kind,probname,seed,m,n,reg,lambda_c,lambda,solver,status,nnz,eta,pobj,val_error,test_error,iters,"
         "wall_time";
}

void write_report(std::ostream& out, const std::vector<ReportRow>& rows, Format f) {
  if (f == Format::Csv) {
    out << "# srreg-report v" << kReportVersion << '\n' << csv_header() << '\n';
    for (const auto& r : rows) {
      out << csv_field(r.kind) << ',' << csv_field(r.probname) << ',' << r.seed << ',' << r.m << ',' << r.n << ','
          << csv_field(r.reg) << ',' << fmt(r.lambda_c) << ',' << fmt(r.lambda) << ',' << csv_field(r.solver) << ','
          << csv_field(r.status) << ',' << r.nnz << ',' << fmt(r.eta) << ',' << fmt(r.pobj) << ','
          << fmt(r.val_error) << ',' << fmt(r.test_error) << ',' << r.iters << ',' << fmt(round_ms(r.wall_time))
          << '\n';
    }
    return;
  }
  nlohmann::json j;
  j["format"] = "srreg-report";
  j["version"] = kReportVersion;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"kind", r.kind},
                         {"probname", r.probname},
                         {"seed", r.seed},
                         {"m", r.m},
                         {"n", r.n},
                         {"reg", r.reg},
                         {"lambda_c", num(r.lambda_c)},
                         {"lambda", num(r.lambda)},
                         {"solver", r.solver},
                         {"status", r.status},
                         {"nnz", r.nnz},
                         {"eta", num(r.eta)},
                         {"pobj", num(r.pobj)},
                         {"val_error", num(r.val_error)},
                         {"test_error", num(r.test_error)},
                         {"iters", r.iters},
                         {"wall_time", num(round_ms(r.wall_time))}});
  }
  out << j.dump(2) << '\n';
}

std::vector<ReportRow> read_report(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<ReportRow> rows;
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      if (j.at("format") != "srreg-report") throw Error("not an srreg report");
      if (j.at("version").get<int>() != kReportVersion) throw Error("unsupported report version");
      for (const auto& o : j.at("rows")) {
        ReportRow r;
        r.kind = o.at("kind").get<std::string>();
        r.probname = o.at("probname").get<std::string>();
        r.seed = o.at("seed").get<std::uint64_t>();
        r.m = o.at("m").get<long>();
        r.n = o.at("n").get<long>();
        r.reg = o.at("reg").get<std::string>();
        r.lambda_c = from_json_num(o.at("lambda_c"));
        r.lambda = from_json_num(o.at("lambda"));
        r.solver = o.at("solver").get<std::string>();
        r.status = o.at("status").get<std::string>();
        r.nnz = o.at("nnz").get<int>();
        r.eta = from_json_num(o.at("eta"));
        r.pobj = from_json_num(o.at("pobj"));
        r.val_error = from_json_num(o.at("val_error"));
        r.test_error = from_json_num(o.at("test_error"));
        r.iters = o.at("iters").get<int>();
        r.wall_time = from_json_num(o.at("wall_time"));
        rows.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed JSON report: ") + e.what());
    }
    return rows;
  }

  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  const std::string version_line = "# srreg-report v" + std::to_string(kReportVersion);
  bool versioned = false;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      if (line == version_line) versioned = true;
      continue;
    }
    if (!header) {
      if (!versioned) throw Error("report is missing the '" + version_line + "' line");
      if (line != csv_header()) throw Error("report line " + std::to_string(lineno) + ": unexpected header");
      header = true;
      continue;
    }
    const auto f = parse_csv_line(line, lineno);
    if (f.size() != 17) throw Error("report line " + std::to_string(lineno) + ": expected 17 fields");
    ReportRow r;
    r.kind = f[0];
    r.probname = f[1];
    r.seed = to_int<std::uint64_t>(f[2], "seed");
    r.m = to_int<long>(f[3], "m");
    r.n = to_int<long>(f[4], "n");
    r.reg = f[5];
    r.lambda_c = to_double(f[6], "lambda_c");
    r.lambda = to_double(f[7], "lambda");
    r.solver = f[8];
    r.status = f[9];
    r.nnz = to_int<int>(f[10], "nnz");
    r.eta = to_double(f[11], "eta");
    r.pobj = to_double(f[12], "pobj");
    r.val_error = to_double(f[13], "val_error");
    r.test_error = to_double(f[14], "test_error");
    r.iters = to_int<int>(f[15], "iters");
    r.wall_time = to_double(f[16], "wall_time");
    rows.push_back(std::move(r));
  }
  if (!header) throw Error("report has no header");
  return rows;
}

std::map<std::string, std::string> parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty()) throw Error(source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

void apply_options(BenchPlan& plan, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "example") {
      plan.example = to_int<int>(value, key);
    } else if (key == "m") {
      plan.m = to_int<long>(value, key);
    } else if (key == "n") {
      plan.n = to_int<long>(value, key);
    } else if (key == "data") {
      plan.data_path = value;
    } else if (key == "cv-folds") {
      plan.cv_folds = to_int<int>(value, key);
    } else if (key == "scale") {
      if (value != "true" && value != "false" && value != "1" && value != "0") {
        throw Error("invalid boolean for scale: '" + value + "'");
      }
      plan.scale = value == "true" || value == "1";
    } else if (key == "solver") {
      plan.solvers.clear();
      for (const auto& s : split(value, ',')) plan.solvers.push_back(parse_solver(s));
    } else if (key == "lambda-c") {
      plan.lambda_c.clear();
      for (const auto& s : split(value, ',')) plan.lambda_c.push_back(to_double(s, key));
    } else if (key == "seed") {
      plan.seeds.clear();
      for (const auto& s : split(value, ',')) plan.seeds.push_back(to_int<std::uint64_t>(s, key));
    } else if (key == "reg") {
      plan.reg = parse_penalty(value);
    } else if (key == "a") {
      plan.a = to_double(value, key);
    } else if (key == "tol") {
      plan.options.tol = to_double(value, key);
    } else if (key == "maxit") {
      plan.options.admm_maxit = to_int<int>(value, key);
    } else if (key == "pmm-maxit") {
      plan.options.pmm_maxit = to_int<int>(value, key);
    } else if (key == "threads") {
      plan.threads = to_int<int>(value, key);
    } else if (key == "out") {
      plan.out = value;
    } else if (key == "format") {
      plan.format = parse_format(value);
    } else {
      throw Error("unknown option '" + key + "'");
    }
  }
}

}  // namespace srreg::bench
