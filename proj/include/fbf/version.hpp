#pragma once

namespace fbf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fbf
