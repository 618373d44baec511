#pragma once

namespace sandhi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sandhi
