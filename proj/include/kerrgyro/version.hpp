#pragma once

#include <string_view>

namespace kerrgyro {

inline constexpr std::string_view version = "0.3.0";

}  // namespace kerrgyro
