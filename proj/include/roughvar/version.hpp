#pragma once

namespace roughvar {
inline constexpr const char* kVersion = "0.1.0";
}
