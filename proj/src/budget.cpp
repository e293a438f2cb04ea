#include "ctxroute/budget.hpp"

#include "ctxroute/error.hpp"

#include <algorithm>
#include <cctype>

namespace ctxroute {

std::string_view to_string(EstimatorMode mode) noexcept {
    switch (mode) {
        case EstimatorMode::Whitespace: return "whitespace";
        case EstimatorMode::CharsDiv4:  return "chars_div_4";
        case EstimatorMode::External:   return "external";
    }
    return "unknown";
}

EstimatorMode estimator_mode_from_string(std::string_view name) {
    if (name == "whitespace") return EstimatorMode::Whitespace;
    if (name == "chars_div_4") return EstimatorMode::CharsDiv4;
    if (name == "external") return EstimatorMode::External;
    throw Error(Errc::ConfigError, "unknown token estimator '" + std::string(name) + "'");
}

std::size_t utf8_scalar_count(std::string_view text) noexcept {
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
    }));
}

TokenCount TokenEstimator::estimate(std::string_view text) const {
    switch (mode_) {
        case EstimatorMode::Whitespace: {
            TokenCount runs = 0;
            bool in_run = false;
            for (char c : text) {
                const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
                if (!space && !in_run) ++runs;
                in_run = !space;
            }
            return runs;
        }
        case EstimatorMode::CharsDiv4: {
            const auto n = static_cast<TokenCount>(utf8_scalar_count(text));
            return (n + 3) / 4;
        }
        case EstimatorMode::External:
            if (!external_) throw Error(Errc::ConfigError, "external token estimator has no callback");
            return std::max<TokenCount>(0, external_(text));
    }
    return 0;
}

TokenCount estimate_tokens(std::string_view text, const TokenEstimator& est) {
    return est.estimate(text);
}

TokenCount allocate(std::string_view role, const BudgetConfig& cfg) {
    TokenCount offset = 0;
    if (auto it = cfg.role_offsets.find(role); it != cfg.role_offsets.end()) offset = it->second;
    return std::max<TokenCount>(0, cfg.base_budget + offset);
}

BudgetConfig default_budget_config() {
    BudgetConfig cfg;
    cfg.base_budget = 1024;
    cfg.role_offsets = {{"planner", 476}, {"searcher", -24}, {"recommender", -224}};
    return cfg;
}

BudgetConfig uniform_budget(TokenCount per_agent) {
    BudgetConfig cfg;
    cfg.base_budget = per_agent;
    return cfg;
}

}  // namespace ctxroute
