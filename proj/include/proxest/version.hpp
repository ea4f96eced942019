#pragma once

namespace proxest {

inline constexpr const char* kToolName = "proxest";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace proxest
