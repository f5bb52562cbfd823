#pragma once

#include <string_view>

namespace cxrgen {

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace cxrgen
