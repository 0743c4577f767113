#pragma once

namespace graphclt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace graphclt
