#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace ctxroute {

using TokenCount = std::int64_t;

enum class EstimatorMode { Whitespace, CharsDiv4, External };

std::string_view to_string(EstimatorMode mode) noexcept;
EstimatorMode estimator_mode_from_string(std::string_view name);

// Maps text to a token count. Whitespace mode counts maximal non-space runs;
// CharsDiv4 is ceil(unicode scalars / 4); External delegates to a callback
// (e.g. a real tokenizer).
class TokenEstimator {
public:
    using ExternalFn = std::function<TokenCount(std::string_view)>;

    TokenEstimator() = default;
    explicit TokenEstimator(EstimatorMode mode) : mode_(mode) {}
    explicit TokenEstimator(ExternalFn fn) : mode_(EstimatorMode::External), external_(std::move(fn)) {}

    [[nodiscard]] EstimatorMode mode() const noexcept { return mode_; }
    [[nodiscard]] TokenCount estimate(std::string_view text) const;

private:
    EstimatorMode mode_ = EstimatorMode::CharsDiv4;
    ExternalFn external_;
};

TokenCount estimate_tokens(std::string_view text, const TokenEstimator& est);

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes are
/// not counted; malformed sequences count one per non-continuation byte).
std::size_t utf8_scalar_count(std::string_view text) noexcept;

struct BudgetConfig {
    TokenCount base_budget = 1024;
    std::map<std::string, TokenCount, std::less<>> role_offsets;
};

/// B_i = max(0, base + offset(role)); unknown roles get offset 0.
TokenCount allocate(std::string_view role, const BudgetConfig& cfg);

/// Offsets that turn base 1024 into the Planner/Searcher/Recommender budgets
/// 1500/1000/800 of the reference HotpotQA pipeline.
BudgetConfig default_budget_config();

/// Same budget for every role.
BudgetConfig uniform_budget(TokenCount per_agent);

}  // namespace ctxroute
