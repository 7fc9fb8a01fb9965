#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diloco/error.hpp"
#include "diloco/tensorcore.hpp"

using namespace diloco;

namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST(ParamVector, RejectsEmptyAndZerosHasDimension) {
  EXPECT_THROW(ParamVector(std::vector<double>{}), ConfigError);
  EXPECT_THROW(ParamVector::zeros(0), ConfigError);
  const auto z = ParamVector::zeros(5);
  ASSERT_EQ(z.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(z[i], 0.0);
  EXPECT_TRUE(ParamVector().empty());
}

TEST(ParamVector, AllFiniteDetectsNanAndInf) {
  EXPECT_TRUE(ParamVector({1.0, -2.0}).all_finite());
  EXPECT_FALSE(ParamVector({1.0, NAN}).all_finite());
  EXPECT_FALSE(ParamVector({INFINITY, 0.0}).all_finite());
}

TEST(Average, MatchesExtendedPrecisionSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 8;
    const std::size_t d = 1 + rng() % 64;
    std::vector<ParamVector> xs;
    for (std::size_t j = 0; j < m; ++j) xs.emplace_back(random_values(rng, d, 10.0));
    const auto avg = average_vectors(xs);
    for (std::size_t i = 0; i < d; ++i) {
      long double acc = 0.0L;
      for (const auto& x : xs) acc += x[i];
      const double oracle = static_cast<double>(acc / m);
      EXPECT_NEAR(avg[i], oracle, 1e-13 * (1.0 + std::abs(oracle)));
    }
  }
}

TEST(Average, SingleVectorIsIdentity) {
  const ParamVector x{1.5, -0.25, 3.0};
  const std::vector<ParamVector> xs{x};
  EXPECT_EQ(average_vectors(xs), x);
}

TEST(Average, RejectsMismatchAndEmpty) {
  const std::vector<ParamVector> bad{ParamVector{1.0, 2.0}, ParamVector{1.0}};
  EXPECT_THROW(average_vectors(bad), ConfigError);
  EXPECT_THROW(average_vectors(std::vector<ParamVector>{}), ConfigError);
}

TEST(Norm, MatchesExtendedPrecision) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_values(rng, 1 + rng() % 200);
    long double acc = 0.0L;
    for (double x : v) acc += static_cast<long double>(x) * x;
    const double oracle = static_cast<double>(std::sqrt(acc));
    EXPECT_NEAR(l2_norm(ParamVector(v)), oracle, 1e-14 * oracle);
  }
  EXPECT_DOUBLE_EQ(l2_norm(ParamVector{3.0, 4.0}), 5.0);
}

TEST(LinearCombine, ComputesAndFlagsOverflow) {
  const ParamVector x{1.0, 2.0};
  const ParamVector y{0.5, -1.0};
  EXPECT_EQ(linear_combine(2.0, x, 4.0, y), (ParamVector{4.0, 0.0}));
  EXPECT_THROW(linear_combine(1e308, ParamVector{10.0}, 1.0, ParamVector{0.0}), NumericError);
  EXPECT_THROW(linear_combine(1.0, x, 1.0, ParamVector{1.0}), ConfigError);
}

TEST(MaxAbsDiff, Basic) {
  EXPECT_EQ(max_abs_diff(ParamVector{1.0, 5.0, -2.0}, ParamVector{1.5, 5.0, 1.0}), 3.0);
}

TEST(FragmentSpec, StaggeredTilesWithFlooredOffsets) {
  const auto spec = FragmentSpec::staggered(10, 4, 30);
  ASSERT_EQ(spec.count(), 4u);
  std::size_t expected_begin = 0;
  for (std::size_t f = 0; f < 4; ++f) {
    EXPECT_EQ(spec.ranges[f].begin, expected_begin);
    EXPECT_TRUE(spec.ranges[f].size() == 2 || spec.ranges[f].size() == 3);
    expected_begin = spec.ranges[f].end;
    EXPECT_EQ(spec.offsets[f], static_cast<std::int64_t>(f) * 7);
  }
  EXPECT_EQ(spec.dimension(), 10u);
  EXPECT_NO_THROW(spec.validate(10, 30));
}

TEST(FragmentSpec, WholeIsSingleRange) {
  const auto spec = FragmentSpec::whole(7);
  ASSERT_EQ(spec.count(), 1u);
  EXPECT_EQ(spec.ranges[0], (FragmentSpec::Range{0, 7}));
  EXPECT_EQ(spec.offsets[0], 0);
}

TEST(FragmentSpec, ValidateRejectsGapsAndBadOffsets) {
  FragmentSpec gap;
  gap.ranges = {{0, 3}, {4, 8}};
  gap.offsets = {0, 1};
  EXPECT_THROW(gap.validate(8, 10), ConfigError);

  FragmentSpec late;
  late.ranges = {{0, 4}, {4, 8}};
  late.offsets = {0, 10};
  EXPECT_THROW(late.validate(8, 10), ConfigError);

  EXPECT_THROW(FragmentSpec::staggered(3, 4, 10), ConfigError);
}

TEST(FragmentSpec, SliceWriteRoundTrip) {
  const auto spec = FragmentSpec::staggered(9, 3, 6);
  ParamVector x{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto mid = slice_fragment(x, spec, 1);
  EXPECT_EQ(mid, (ParamVector{3, 4, 5}));
  write_fragment(x, spec, 1, ParamVector{-1, -2, -3});
  EXPECT_EQ(x, (ParamVector{0, 1, 2, -1, -2, -3, 6, 7, 8}));
  EXPECT_THROW(write_fragment(x, spec, 1, ParamVector{1.0}), ConfigError);
  EXPECT_THROW(slice_fragment(x, spec, 3), ConfigError);
}
