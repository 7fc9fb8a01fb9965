#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace diloco {

// Flat vector of 64-bit reals holding parameters or parameter deltas.
//
// A constructed vector always has dimension >= 1. A default-constructed
// vector is empty and only serves as a placeholder inside containers.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  static ParamVector zeros(std::size_t dim);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> view() const noexcept { return values_; }
  std::span<double> view() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  // Bitwise element comparison (so +0.0 == -0.0 but NaN != NaN).
  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

// Contiguous partition of [0, d) into fragments, each with a sync phase
// offset measured in inner steps.
struct FragmentSpec {
  struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const Range&, const Range&) = default;
  };

  std::vector<Range> ranges;
  std::vector<std::int64_t> offsets;

  std::size_t count() const noexcept { return ranges.size(); }
  std::size_t dimension() const noexcept { return ranges.empty() ? 0 : ranges.back().end; }

  // One fragment covering [0, dim) with offset 0.
  static FragmentSpec whole(std::size_t dim);

  // `fragments` near-equal contiguous ranges; fragment j syncs with offset
  // j * floor(period / fragments).
  static FragmentSpec staggered(std::size_t dim, std::size_t fragments, std::int64_t period);

  // Throws ConfigError unless the ranges tile [0, dim) in order and every
  // offset lies in [0, period) in nondecreasing order.
  void validate(std::size_t dim, std::int64_t period) const;
};

ParamVector linear_combine(double a, const ParamVector& x, double b, const ParamVector& y);

// Element-wise mean, summed left to right in list order.
ParamVector average_vectors(std::span<const ParamVector> vectors);

double l2_norm(const ParamVector& x);

// Largest absolute element-wise difference.
double max_abs_diff(const ParamVector& x, const ParamVector& y);

ParamVector slice_fragment(const ParamVector& x, const FragmentSpec& spec, std::size_t fragment);

// Inverse of slice_fragment: copies `slice` into the fragment's range of `x`.
void write_fragment(ParamVector& x, const FragmentSpec& spec, std::size_t fragment,
                    const ParamVector& slice);

}  // namespace diloco
