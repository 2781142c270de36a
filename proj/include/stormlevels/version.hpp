#pragma once

namespace stormlevels {
inline constexpr const char* kVersion = "0.1.0";
}
