#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "diloco/tensorcore.hpp"

namespace diloco {

enum class QuantFormat { Fp32, Bf16, Fp8E4M3, Fp4E2M1 };

struct FormatInfo {
  std::string_view name;
  int bits;
  int exponent_bits;
  int mantissa_bits;
  // Smallest normal exponent; values below it are subnormal.
  int min_exponent;
  double max_value;
  bool block_scaled;
};

// Values per shared scale for block-scaled formats; each block carries one
// bf16 scale on the wire.
inline constexpr std::size_t kQuantBlockSize = 32;
inline constexpr int kScaleBits = 16;

const FormatInfo& format_info(QuantFormat fmt);
std::string_view to_string(QuantFormat fmt);
QuantFormat parse_quant_format(std::string_view name);

// Round one value to the nearest representable value of `fmt` (ties to
// even), saturating at +-max_value. Fp32 is returned unchanged.
double round_to_format(double x, QuantFormat fmt);

// Encode then decode. Fp8/fp4 scale each block of 32 so that the block's
// max-abs (stored as bf16) lands on the format's largest code point.
ParamVector quantize_dequantize(const ParamVector& x, QuantFormat fmt);

// Wire size: d * bits, plus one 16-bit scale per block for block formats.
std::uint64_t payload_bits(std::size_t dim, QuantFormat fmt);

}  // namespace diloco
