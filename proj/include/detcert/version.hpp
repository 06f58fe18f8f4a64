#pragma once

namespace detcert {
inline constexpr const char* kVersion = "0.1.0";
}
