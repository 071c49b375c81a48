#pragma once

namespace prefdyn {

inline constexpr const char* kVersion = "0.1.0";

}
