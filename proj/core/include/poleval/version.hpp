#pragma once

namespace poleval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace poleval
