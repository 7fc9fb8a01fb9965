#include "diloco/tensorcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diloco/error.hpp"

namespace diloco {

namespace {

void require_same_dim(const ParamVector& x, const ParamVector& y, const char* op) {
  if (x.size() != y.size()) {
    throw ConfigError(std::string(op) + ": dimension mismatch (" + std::to_string(x.size()) +
                      " vs " + std::to_string(y.size()) + ")");
  }
}

void require_finite(const ParamVector& x, const char* op) {
  if (!x.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::initializer_list<double> values)
    : ParamVector(std::vector<double>(values)) {}

ParamVector ParamVector::zeros(std::size_t dim) { return ParamVector(std::vector<double>(dim, 0.0)); }

bool ParamVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

FragmentSpec FragmentSpec::whole(std::size_t dim) {
  if (dim == 0) throw ConfigError("FragmentSpec: dimension must be >= 1");
  return FragmentSpec{{{0, dim}}, {0}};
}

FragmentSpec FragmentSpec::staggered(std::size_t dim, std::size_t fragments, std::int64_t period) {
  if (fragments == 0 || fragments > dim) {
    throw ConfigError("FragmentSpec: fragment count must be in [1, dim]");
  }
  if (period < 1) throw ConfigError("FragmentSpec: period must be >= 1");
  FragmentSpec spec;
  const std::size_t base = dim / fragments;
  const std::size_t extra = dim % fragments;
  const std::int64_t stride = period / static_cast<std::int64_t>(fragments);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < fragments; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    spec.ranges.push_back({begin, begin + len});
    spec.offsets.push_back(static_cast<std::int64_t>(f) * stride);
    begin += len;
  }
  return spec;
}

void FragmentSpec::validate(std::size_t dim, std::int64_t period) const {
  if (ranges.empty()) throw ConfigError("FragmentSpec: no fragments");
  if (offsets.size() != ranges.size()) {
    throw ConfigError("FragmentSpec: one offset per fragment required");
  }
  std::size_t expected_begin = 0;
  for (const auto& r : ranges) {
    if (r.begin != expected_begin || r.end <= r.begin) {
      throw ConfigError("FragmentSpec: ranges must be nonempty, disjoint and contiguous");
    }
    expected_begin = r.end;
  }
  if (expected_begin != dim) throw ConfigError("FragmentSpec: ranges must cover [0, d)");
  for (std::size_t f = 0; f < offsets.size(); ++f) {
    if (offsets[f] < 0 || offsets[f] >= period) {
      throw ConfigError("FragmentSpec: offset out of [0, H) for fragment " + std::to_string(f));
    }
    if (f > 0 && offsets[f] < offsets[f - 1]) {
      throw ConfigError("FragmentSpec: offsets must be nondecreasing");
    }
  }
}

ParamVector linear_combine(double a, const ParamVector& x, double b, const ParamVector& y) {
  require_same_dim(x, y, "linear_combine");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
  ParamVector result(std::move(out));
  require_finite(result, "linear_combine");
  return result;
}

ParamVector average_vectors(std::span<const ParamVector> vectors) {
  if (vectors.empty()) throw ConfigError("average_vectors: empty list");
  std::vector<double> sum = vectors.front().values();
  for (std::size_t v = 1; v < vectors.size(); ++v) {
    require_same_dim(vectors.front(), vectors[v], "average_vectors");
    const auto& src = vectors[v];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += src[i];
  }
  const double count = static_cast<double>(vectors.size());
  for (double& s : sum) s /= count;
  ParamVector result(std::move(sum));
  require_finite(result, "average_vectors");
  return result;
}

double l2_norm(const ParamVector& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  return std::sqrt(acc);
}

double max_abs_diff(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

ParamVector slice_fragment(const ParamVector& x, const FragmentSpec& spec, std::size_t fragment) {
  if (fragment >= spec.count()) {
    throw ConfigError("slice_fragment: fragment index " + std::to_string(fragment) +
                      " out of range");
  }
  const auto r = spec.ranges[fragment];
  if (r.end > x.size()) throw ConfigError("slice_fragment: range exceeds vector dimension");
  return ParamVector(std::vector<double>(x.values().begin() + static_cast<std::ptrdiff_t>(r.begin),
                                         x.values().begin() + static_cast<std::ptrdiff_t>(r.end)));
}

void write_fragment(ParamVector& x, const FragmentSpec& spec, std::size_t fragment,
                    const ParamVector& slice) {
  if (fragment >= spec.count()) {
    throw ConfigError("write_fragment: fragment index " + std::to_string(fragment) +
                      " out of range");
  }
  const auto r = spec.ranges[fragment];
  if (r.end > x.size() || slice.size() != r.size()) {
    throw ConfigError("write_fragment: slice does not match fragment range");
  }
  std::copy(slice.values().begin(), slice.values().end(),
            x.view().begin() + static_cast<std::ptrdiff_t>(r.begin));
}

}  // namespace diloco
