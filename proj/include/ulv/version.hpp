#pragma once

namespace ulv {

inline constexpr const char* kToolName = "ulv";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ulv
