#pragma once

namespace preamp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace preamp
