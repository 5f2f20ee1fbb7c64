#pragma once

namespace nuc {

inline constexpr const char* kVersion = "nuctool 1.0.0";

}  // namespace nuc
