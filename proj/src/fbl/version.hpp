#pragma once

namespace fbl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fbl
