#pragma once

namespace barbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace barbench
