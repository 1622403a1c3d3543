#pragma once

namespace qsol {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qsol
