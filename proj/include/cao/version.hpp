#pragma once

namespace cao {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cao
