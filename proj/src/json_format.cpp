#include "ctxroute/json_format.hpp"

#include <fmt/format.h>

#include <cmath>

namespace ctxroute {

namespace {

void write(const nlohmann::json& j, std::string& out) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            out += '{';
            bool first = true;
            // nlohmann::json objects are std::map backed, already key-sorted.
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(key).dump();
                out += ':';
                write(value, out);
            }
            out += '}';
            break;
        }
        case nlohmann::json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out += ',';
                write(j[i], out);
            }
            out += ']';
            break;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_fixed6(v) : "null";
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string format_fixed6(double v) {
    std::string s = fmt::format("{:.6f}", v);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string dump_fixed(const nlohmann::json& j) {
    std::string out;
    write(j, out);
    return out;
}

}  // namespace ctxroute
