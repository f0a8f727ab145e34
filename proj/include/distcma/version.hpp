#pragma once

namespace distcma {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace distcma
