#pragma once

namespace flarepp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flarepp
