#pragma once

#include <cstdint>
#include <vector>

namespace encdec {

using Vector = std::vector<double>;
using TokenIds = std::vector<std::int32_t>;

// Reserved vocabulary ids, shared by every module that touches token ids.
inline constexpr std::int32_t kEosId = 0;
inline constexpr std::int32_t kUnkId = 1;

// Pseudo-id for the decoder's first step, before any target symbol exists.
// Its embedding is the all-zero vector and it selects no output-matrix column.
inline constexpr std::int32_t kBeginMarker = -1;

}  // namespace encdec
