#pragma once

#include "srreg/metrics.hpp"
#include "srreg/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace srreg::data {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Counter-based SplitMix64: the i-th output is mix(seed + (i + 1)·γ), so a
/// stream is reproducible from (seed, position) alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z);
  std::uint64_t at(std::uint64_t counter) const;
  std::uint64_t next() { return at(counter_++); }
  /// ((x >> 11) + 0.5)·2⁻⁵³, strictly inside (0, 1).
  double uniform();
  /// Φ⁻¹(uniform()).
  double gaussian();
  /// Uniform integer in [0, bound) by multiply-shift.
  std::uint64_t below(std::uint64_t bound);
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct SyntheticSpec {
  int example = 1;  // 1..4
  long m_train = 8000;
  long m_val = 2000;
  long m_test = 2000;
  long n = 0;  // 0 keeps the example's own dimension
  std::uint64_t seed = 0;

  void validate() const;
  /// Train size m, validation and test m/4 each.
  static SyntheticSpec desk(int example, long m, std::uint64_t seed, long n = 0);
};

/// β*, noise level ς and AR(1) correlation of an example at dimension n.
struct ExampleTruth {
  Vec beta_star;
  double noise_sd = 0.0;
  double rho = 0.0;  // unused for example 4
};

ExampleTruth example_truth(int example, long n = 0);
long example_dimension(int example);

struct SyntheticData {
  ProblemData train;
  ProblemData val;
  ProblemData test;
  Truth truth;  // β* and the noise added to the training response
};

/// Draw order: training rows (features, row by row), training noise, then the
/// same for validation and test, all from one generator.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

/// Dataset with an explicit noise level; ς = 0 gives b = Xβ* exactly.
SyntheticData gen_synthetic(const SyntheticSpec& spec, double noise_sd);

ProblemData parse_libsvm(std::istream& in, long n_features = 0, const std::string& source = "<stream>");
ProblemData read_libsvm(const std::string& path, long n_features = 0);
void write_libsvm(std::ostream& out, const ProblemData& d);
void write_libsvm(const std::string& path, const ProblemData& d);

ProblemData subset_rows(const ProblemData& d, const std::vector<Eigen::Index>& rows);

struct Holdout {
  ProblemData train, val, test;
};
Holdout split_holdout(const ProblemData& d, const std::array<double, 3>& fractions, std::uint64_t seed);

/// k disjoint folds covering 0..m-1, sizes differing by at most one.
std::vector<std::vector<Eigen::Index>> kfold(Eigen::Index m, int k, std::uint64_t seed);

/// Rescales columns to unit Euclidean norm in place; returns the divisors
/// (zero columns keep divisor 1).
Vec scale_columns(ProblemData& d);
void apply_column_scales(ProblemData& d, const Vec& scales);

}  // namespace srreg::data
