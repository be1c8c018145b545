#pragma once

namespace auvox {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kToolName = "auvox";

}  // namespace auvox
