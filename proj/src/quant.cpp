#include "diloco/quant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "diloco/error.hpp"

namespace diloco {

namespace {

constexpr std::array<FormatInfo, 4> kFormats = {{
    {"fp32", 32, 8, 23, -126, 3.4028234663852886e38, false},
    {"bf16", 16, 8, 7, -126, 3.3895313892515355e38, false},
    {"fp8-e4m3", 8, 4, 3, -6, 448.0, true},
    {"fp4-e2m1", 4, 2, 1, 0, 6.0, true},
}};

double round_mantissa(double x, const FormatInfo& info) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  int exp2 = 0;
  std::frexp(x, &exp2);  // |x| = f * 2^exp2, f in [0.5, 1)
  const int exponent = std::max(exp2 - 1, info.min_exponent);
  const double quantum = std::ldexp(1.0, exponent - info.mantissa_bits);
  double q = std::nearbyint(x / quantum) * quantum;
  if (std::abs(q) > info.max_value) q = std::copysign(info.max_value, x);
  return q;
}

}  // namespace

const FormatInfo& format_info(QuantFormat fmt) { return kFormats[static_cast<std::size_t>(fmt)]; }

std::string_view to_string(QuantFormat fmt) { return format_info(fmt).name; }

QuantFormat parse_quant_format(std::string_view name) {
  for (std::size_t i = 0; i < kFormats.size(); ++i) {
    if (kFormats[i].name == name) return static_cast<QuantFormat>(i);
  }
  if (name == "fp8") return QuantFormat::Fp8E4M3;
  if (name == "fp4") return QuantFormat::Fp4E2M1;
  throw ConfigError("unknown quantization format '" + std::string(name) + "'");
}

double round_to_format(double x, QuantFormat fmt) {
  if (fmt == QuantFormat::Fp32) return x;
  return round_mantissa(x, format_info(fmt));
}

ParamVector quantize_dequantize(const ParamVector& x, QuantFormat fmt) {
  const auto& info = format_info(fmt);
  if (fmt == QuantFormat::Fp32) return x;
  ParamVector out = x;
  if (!info.block_scaled) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = round_mantissa(x[i], info);
    return out;
  }
  for (std::size_t begin = 0; begin < x.size(); begin += kQuantBlockSize) {
    const std::size_t end = std::min(begin + kQuantBlockSize, x.size());
    double max_abs = 0.0;
    for (std::size_t i = begin; i < end; ++i) max_abs = std::max(max_abs, std::abs(x[i]));
    const double scale = round_to_format(max_abs, QuantFormat::Bf16);
    if (scale == 0.0) {
      for (std::size_t i = begin; i < end; ++i) out[i] = 0.0;
      continue;
    }
    const double step = scale / info.max_value;
    for (std::size_t i = begin; i < end; ++i) out[i] = round_mantissa(x[i] / step, info) * step;
  }
  return out;
}

std::uint64_t payload_bits(std::size_t dim, QuantFormat fmt) {
  if (dim == 0) throw ConfigError("payload_bits: dimension must be >= 1");
  const auto& info = format_info(fmt);
  std::uint64_t bits = static_cast<std::uint64_t>(dim) * static_cast<std::uint64_t>(info.bits);
  if (info.block_scaled) {
    const std::uint64_t blocks = (dim + kQuantBlockSize - 1) / kQuantBlockSize;
    bits += blocks * kScaleBits;
  }
  return bits;
}

}  // namespace diloco
