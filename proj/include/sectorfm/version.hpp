#pragma once

namespace sectorfm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sectorfm
