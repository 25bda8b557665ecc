#include "srreg/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace srreg::data {

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::at(std::uint64_t counter) const { return mix(seed_ + (counter + 1) * 0x9e3779b97f4a7c15ULL); }

double SplitMix64::uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

double SplitMix64::gaussian() { return metrics::normal_quantile(uniform()); }

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  if (bound == 0) throw Error("SplitMix64::below: bound must be positive");
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
}

long example_dimension(int example) {
  switch (example) {
    case 1: case 2: case 3: return 800;
    case 4: return 4000;
    default: throw Error("example must be 1, 2, 3 or 4");
  }
}

ExampleTruth example_truth(int example, long n) {
  const long dim = n > 0 ? n : example_dimension(example);
  ExampleTruth t;
  t.beta_star = Vec::Zero(dim);
  switch (example) {
    case 1: {
      const double pattern[8] = {3, 1.5, 0, 0, 2, 0, 0, 0};
      for (long j = 0; j < dim; ++j) t.beta_star[j] = pattern[j % 8];
      t.noise_sd = 3.0;
      t.rho = 0.5;
      break;
    }
    case 2:
      for (long j = 0; j < dim; ++j) t.beta_star[j] = j % 2 == 1 ? 1.0 : 0.0;
      t.noise_sd = 3.0;
      t.rho = 0.5;
      break;
    case 3:
      // (0,1) repeated 200 times spans 400 coordinates; the rest stay zero.
      for (long j = 0; j < dim; ++j) t.beta_star[j] = (j < dim / 2 && j % 2 == 1) ? 1.0 : 0.0;
      t.noise_sd = 15.0;
      t.rho = 0.8;
      break;
    case 4: {
      if (dim % 8 != 0) throw Error("example 4 needs n divisible by 8");
      const long active = 3 * (dim / 8);
      t.beta_star.head(active).setConstant(3.0);
      t.noise_sd = 15.0;
      break;
    }
    default: throw Error("example must be 1, 2, 3 or 4");
  }
  return t;
}

void SyntheticSpec::validate() const {
  (void)example_dimension(example);
  if (m_train < 1 || m_val < 0 || m_test < 0) throw Error("synthetic sizes must be positive");
  if (n < 0) throw Error("n must be non-negative");
  if (example == 4 && n > 0 && n % 8 != 0) throw Error("example 4 needs n divisible by 8");
}

SyntheticSpec SyntheticSpec::desk(int example, long m, std::uint64_t seed, long n) {
  SyntheticSpec s;
  s.example = example;
  s.m_train = m;
  s.m_val = std::max(1L, m / 4);
  s.m_test = std::max(1L, m / 4);
  s.n = n;
  s.seed = seed;
  return s;
}

namespace {

void fill_rows(Mat& X, int example, double rho, SplitMix64& rng) {
  const Eigen::Index n = X.cols();
  if (example != 4) {
    const double c = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double prev = rng.gaussian();
      X(i, 0) = prev;
      for (Eigen::Index j = 1; j < n; ++j) {
        prev = rho * prev + c * rng.gaussian();
        X(i, j) = prev;
      }
    }
    return;
  }
  const Eigen::Index block = n / 8;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double z[3] = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = rng.gaussian();
      X(i, j) = j < 3 * block ? z[j / block] + 0.1 * g : g;
    }
  }
}

ProblemData draw_split(long m, const ExampleTruth& t, int example, double noise_sd, SplitMix64& rng, Vec* noise) {
  Mat X(m, t.beta_star.size());
  fill_rows(X, example, t.rho, rng);
  Vec eps(m);
  for (long i = 0; i < m; ++i) eps[i] = noise_sd * rng.gaussian();
  Vec b = X * t.beta_star + eps;
  if (noise) *noise = eps;
  return ProblemData(std::move(X), std::move(b));
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  return gen_synthetic(spec, example_truth(spec.example, spec.n).noise_sd);
}

SyntheticData gen_synthetic(const SyntheticSpec& spec, double noise_sd) {
  spec.validate();
  if (!(noise_sd >= 0.0)) throw Error("noise level must be non-negative");
  const ExampleTruth t = example_truth(spec.example, spec.n);
  SplitMix64 rng(spec.seed);
  SyntheticData out;
  out.truth.beta_star = t.beta_star;
  out.train = draw_split(spec.m_train, t, spec.example, noise_sd, rng, &out.truth.noise);
  if (spec.m_val > 0) out.val = draw_split(spec.m_val, t, spec.example, noise_sd, rng, nullptr);
  if (spec.m_test > 0) out.test = draw_split(spec.m_test, t, spec.example, noise_sd, rng, nullptr);
  return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& source, long line, const std::string& msg) {
  throw IoError(source + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(std::string_view tok, const std::string& source, long line) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last || !std::isfinite(v)) parse_fail(source, line, "bad number '" + std::string(tok) + "'");
  return v;
}

}  // namespace

ProblemData parse_libsvm(std::istream& in, long n_features, const std::string& source) {
  struct Entry {
    long row, col;
    double val;
  };
  std::vector<Entry> entries;
  std::vector<double> labels;
  long max_col = 0;
  std::string text;
  long line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream ls(text);
    std::string tok;
    if (!(ls >> tok)) continue;
    const long row = static_cast<long>(labels.size());
    labels.push_back(parse_double(tok, source, line_no));
    std::unordered_set<long> seen;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0) parse_fail(source, line_no, "expected index:value, got '" + tok + "'");
      long idx = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon || idx < 1) parse_fail(source, line_no, "bad feature index in '" + tok + "'");
      if (!seen.insert(idx).second) parse_fail(source, line_no, "duplicate feature index " + std::to_string(idx));
      const double v = parse_double(std::string_view(tok).substr(colon + 1), source, line_no);
      entries.push_back({row, idx - 1, v});
      max_col = std::max(max_col, idx);
    }
  }
  if (labels.empty()) throw IoError(source + ": no data rows");
  if (n_features > 0 && max_col > n_features) {
    throw IoError(source + ": feature index " + std::to_string(max_col) + " exceeds n = " + std::to_string(n_features));
  }
  const long n = std::max({n_features, max_col, 1L});
  Mat X = Mat::Zero(static_cast<Eigen::Index>(labels.size()), n);
  for (const auto& e : entries) X(e.row, e.col) = e.val;
  Vec b = Eigen::Map<const Vec>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return ProblemData(std::move(X), std::move(b));
}

ProblemData read_libsvm(const std::string& path, long n_features) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_libsvm(in, n_features, path);
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}

}  // namespace

void write_libsvm(std::ostream& out, const ProblemData& d) {
  for (Eigen::Index i = 0; i < d.m(); ++i) {
    put_double(out, d.b[i]);
    for (Eigen::Index j = 0; j < d.n(); ++j) {
      if (d.X(i, j) == 0.0) continue;
      out << ' ' << (j + 1) << ':';
      put_double(out, d.X(i, j));
    }
    out << '\n';
  }
}

void write_libsvm(const std::string& path, const ProblemData& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_libsvm(out, d);
  if (!out) throw IoError("write failed for " + path);
}

ProblemData subset_rows(const ProblemData& d, const std::vector<Eigen::Index>& rows) {
  Mat X(static_cast<Eigen::Index>(rows.size()), d.n());
  Vec b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (r < 0 || r >= d.m()) throw DimensionError("subset_rows: index out of range");
    X.row(static_cast<Eigen::Index>(i)) = d.X.row(r);
    b[static_cast<Eigen::Index>(i)] = d.b[r];
  }
  ProblemData out;
  out.X = std::move(X);
  out.b = std::move(b);
  out.feature_names = d.feature_names;
  return out;
}

namespace {

std::vector<Eigen::Index> permutation(Eigen::Index m, std::uint64_t seed) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(m));
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  SplitMix64 rng(seed);
  for (Eigen::Index i = m - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace

Holdout split_holdout(const ProblemData& d, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
  const Eigen::Index m = d.m();
  const auto n_train = static_cast<Eigen::Index>(std::llround(fractions[0] * static_cast<double>(m)));
  const auto n_val = std::min(m - n_train, static_cast<Eigen::Index>(std::llround(fractions[1] * static_cast<double>(m))));
  const auto p = permutation(m, seed);
  auto slice = [&](Eigen::Index from, Eigen::Index to) {
    std::vector<Eigen::Index> rows(p.begin() + from, p.begin() + to);
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  Holdout h;
  h.train = subset_rows(d, slice(0, n_train));
  h.val = subset_rows(d, slice(n_train, n_train + n_val));
  h.test = subset_rows(d, slice(n_train + n_val, m));
  return h;
}

std::vector<std::vector<Eigen::Index>> kfold(Eigen::Index m, int k, std::uint64_t seed) {
  if (k < 1) throw Error("kfold: k must be positive");
  if (k > m) throw Error("kfold: k exceeds the number of rows");
  const auto p = permutation(m, seed);
  std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < m; ++i) folds[static_cast<std::size_t>(i % k)].push_back(p[static_cast<std::size_t>(i)]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

Vec scale_columns(ProblemData& d) {
  Vec s = d.X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (s[j] == 0.0) s[j] = 1.0;
  apply_column_scales(d, s);
  return s;
}

void apply_column_scales(ProblemData& d, const Vec& scales) {
  if (scales.size() != d.n()) throw DimensionError("apply_column_scales: length mismatch");
  d.X = d.X * scales.cwiseInverse().asDiagonal();
}

}  // namespace srreg::data
