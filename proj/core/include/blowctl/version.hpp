#pragma once

namespace blowctl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace blowctl
