#pragma once

namespace faithrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace faithrl
