#pragma once

namespace dtmfsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dtmfsim
