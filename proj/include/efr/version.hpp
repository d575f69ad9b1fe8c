#pragma once

namespace efr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace efr
