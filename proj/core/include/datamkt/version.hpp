#pragma once

namespace datamkt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace datamkt
