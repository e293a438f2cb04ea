#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace ctxroute {

/// Compact JSON with object keys sorted and every floating-point number
/// printed with exactly six decimals, so reports diff byte-for-byte.
std::string dump_fixed(const nlohmann::json& j);

/// "%.6f" with negative zero folded to zero.
std::string format_fixed6(double v);

}  // namespace ctxroute
