#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "diloco/error.hpp"
#include "diloco/quant.hpp"

using namespace diloco;

namespace {

// Decodes a 4-bit e2m1 code: sign, two exponent bits (bias 1), one mantissa bit.
double decode_e2m1(unsigned code) {
  const double sign = (code & 8u) ? -1.0 : 1.0;
  const unsigned e = (code >> 1) & 3u;
  const unsigned m = code & 1u;
  if (e == 0) return sign * 0.5 * m;
  return sign * (1.0 + 0.5 * m) * std::ldexp(1.0, static_cast<int>(e) - 1);
}

// Nearest e2m1 magnitude by brute force; ties go to the code with mantissa bit 0.
double nearest_e2m1(double x) {
  double best = 0.0;
  unsigned best_code = 0;
  for (unsigned code = 0; code < 8; ++code) {
    const double v = decode_e2m1(code);
    const double d = std::abs(std::abs(x) - v);
    const double bd = std::abs(std::abs(x) - best);
    if (d < bd || (d == bd && (code & 1u) == 0 && (best_code & 1u) == 1)) {
      best = v;
      best_code = code;
    }
  }
  return std::copysign(best, x);
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double sq_error(const ParamVector& a, const ParamVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

TEST(Quant, Fp32IsIdentity) {
  std::mt19937_64 rng(1);
  const ParamVector x(random_values(rng, 100, 3.0));
  EXPECT_EQ(quantize_dequantize(x, QuantFormat::Fp32), x);
  EXPECT_EQ(round_to_format(0.1, QuantFormat::Fp32), 0.1);
}

TEST(Quant, Bf16TiesToEven) {
  const double q = std::ldexp(1.0, -7);  // bf16 spacing in [1, 2)
  EXPECT_EQ(round_to_format(1.0 + q / 2, QuantFormat::Bf16), 1.0);
  EXPECT_EQ(round_to_format(1.0 + 1.5 * q, QuantFormat::Bf16), 1.0 + 2 * q);
  EXPECT_EQ(round_to_format(1.0 + 0.6 * q, QuantFormat::Bf16), 1.0 + q);
  EXPECT_EQ(round_to_format(-3.0, QuantFormat::Bf16), -3.0);
}

TEST(Quant, Fp4AllSixteenCodesAreFixedPoints) {
  for (unsigned code = 0; code < 16; ++code) {
    const double v = decode_e2m1(code);
    EXPECT_EQ(round_to_format(v, QuantFormat::Fp4E2M1), v) << "code " << code;
  }
}

TEST(Quant, Fp4RoundsToNearestCode) {
  for (int i = -800; i <= 800; ++i) {
    const double x = i / 100.0;
    const double expected = std::abs(x) >= 6.0 ? std::copysign(6.0, x) : nearest_e2m1(x);
    EXPECT_EQ(round_to_format(x, QuantFormat::Fp4E2M1), expected) << "x = " << x;
  }
}

TEST(Quant, Fp8E4M3Limits) {
  EXPECT_EQ(format_info(QuantFormat::Fp8E4M3).max_value, 448.0);
  EXPECT_EQ(round_to_format(1000.0, QuantFormat::Fp8E4M3), 448.0);
  EXPECT_EQ(round_to_format(-460.0, QuantFormat::Fp8E4M3), -448.0);
  // Smallest subnormal is 2^-9.
  EXPECT_EQ(round_to_format(std::ldexp(1.0, -9), QuantFormat::Fp8E4M3), std::ldexp(1.0, -9));
  EXPECT_EQ(round_to_format(std::ldexp(1.0, -11), QuantFormat::Fp8E4M3), 0.0);
}

TEST(Quant, BlockOfCodePointsIsExact) {
  // Every fp4 code point times a bf16-representable scale, with the block
  // maximum present, survives quantization bit for bit.
  for (double scale : {1.0, 0.0078125, 3.5, 1024.0}) {
    std::vector<double> block;
    for (unsigned code = 0; code < 16; ++code) block.push_back(decode_e2m1(code) * scale / 6.0);
    block.push_back(6.0 * scale / 6.0);
    const ParamVector x(block);
    EXPECT_EQ(quantize_dequantize(x, QuantFormat::Fp4E2M1), x) << "scale " << scale;
  }
}

TEST(Quant, IdempotentOnRandomVectors) {
  std::mt19937_64 rng(21);
  for (auto fmt : {QuantFormat::Bf16, QuantFormat::Fp8E4M3, QuantFormat::Fp4E2M1}) {
    for (int trial = 0; trial < 200; ++trial) {
      const ParamVector x(random_values(rng, 1 + rng() % 100, std::exp2(static_cast<int>(rng() % 20) - 10)));
      const auto once = quantize_dequantize(x, fmt);
      EXPECT_EQ(quantize_dequantize(once, fmt), once) << to_string(fmt);
    }
  }
}

TEST(Quant, ZeroBlockStaysZero) {
  const auto q = quantize_dequantize(ParamVector::zeros(40), QuantFormat::Fp4E2M1);
  EXPECT_EQ(q, ParamVector::zeros(40));
}

TEST(Quant, FidelityIncreasesWithBits) {
  std::mt19937_64 rng(2);
  double e_bf16 = 0, e_fp8 = 0, e_fp4 = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ParamVector x(random_values(rng, 256, 1.0));
    e_bf16 += sq_error(x, quantize_dequantize(x, QuantFormat::Bf16));
    e_fp8 += sq_error(x, quantize_dequantize(x, QuantFormat::Fp8E4M3));
    e_fp4 += sq_error(x, quantize_dequantize(x, QuantFormat::Fp4E2M1));
  }
  EXPECT_LT(e_bf16, e_fp8);
  EXPECT_LT(e_fp8, e_fp4);
}

TEST(Quant, Fp4RelativeErrorOnLargeValues) {
  // Values at or above 1/8 of the block max land on codes 0.75 .. 6 of the
  // scaled grid; the widest relative gap there is between 0.5 and 1 (1/3).
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const ParamVector x(random_values(rng, 32, 1.0));
    double max_abs = 0.0;
    for (double v : x.values()) max_abs = std::max(max_abs, std::abs(v));
    const auto q = quantize_dequantize(x, QuantFormat::Fp4E2M1);
    for (std::size_t i = 0; i < 32; ++i) {
      if (std::abs(x[i]) >= max_abs / 8) worst = std::max(worst, std::abs(q[i] - x[i]) / std::abs(x[i]));
    }
  }
  EXPECT_LE(worst, 1.0 / 3.0 + 1e-2);
}

TEST(Quant, Fp8RelativeErrorInNormalRange) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const ParamVector x(random_values(rng, 32, 1.0));
    double max_abs = 0.0;
    for (double v : x.values()) max_abs = std::max(max_abs, std::abs(v));
    const auto q = quantize_dequantize(x, QuantFormat::Fp8E4M3);
    for (std::size_t i = 0; i < 32; ++i) {
      // Normal range of the scaled grid starts at 2^-6 of 448.
      if (std::abs(x[i]) >= max_abs * std::ldexp(1.0, -6)) {
        EXPECT_LE(std::abs(q[i] - x[i]), std::ldexp(1.0, -4) * std::abs(x[i]) * 1.02);
      }
    }
  }
}

TEST(Quant, PayloadBits) {
  EXPECT_EQ(payload_bits(64, QuantFormat::Fp32), 64u * 32);
  EXPECT_EQ(payload_bits(64, QuantFormat::Bf16), 64u * 16);
  EXPECT_EQ(payload_bits(64, QuantFormat::Fp4E2M1), 64u * 4 + 2 * 16);
  EXPECT_EQ(payload_bits(33, QuantFormat::Fp8E4M3), 33u * 8 + 2 * 16);
  EXPECT_THROW(payload_bits(0, QuantFormat::Fp32), ConfigError);
}

TEST(Quant, ParseNames) {
  EXPECT_EQ(parse_quant_format("fp4"), QuantFormat::Fp4E2M1);
  EXPECT_EQ(parse_quant_format("fp8-e4m3"), QuantFormat::Fp8E4M3);
  EXPECT_EQ(to_string(QuantFormat::Bf16), "bf16");
  EXPECT_THROW(parse_quant_format("int8"), ConfigError);
}
