#pragma once

#include "ctxroute/memory.hpp"
#include "ctxroute/scoring.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ctxroute {

enum class Strategy { Rcr, FullContext, Static };

std::string_view to_string(Strategy s) noexcept;
Strategy strategy_from_string(std::string_view name);

struct RoutedContext {
    std::string agent_role;
    Round round = 0;
    std::vector<MemoryItem> items;
    std::vector<double> scores;  // parallel to items
    TokenCount total_tokens = 0;
    TokenCount budget = 0;

    [[nodiscard]] bool empty() const noexcept { return items.empty(); }
    [[nodiscard]] std::vector<std::string> ids() const;

    friend bool operator==(const RoutedContext&, const RoutedContext&) = default;
};

/// Sum of scores taken in non-increasing order, so equal multisets of scores
/// always produce bit-identical totals.
double canonical_score_sum(std::vector<double> scores);

/// Greedy budgeted selection: score every item, sort by (score desc, round
/// desc, id desc) and accept items while they fit. Stops at the first item
/// that does not fit instead of skipping it.
RoutedContext route_greedy(std::span<const MemoryItem> snapshot, std::string_view role, std::string_view stage,
                           Round round, TokenCount budget, const Scorer& scorer);
RoutedContext route_greedy(std::span<const MemoryItem> snapshot, std::string_view role, std::string_view stage,
                           Round round, TokenCount budget, const ScorerConfig& cfg);

/// Every item, insertion order. budget is recorded as the token sum.
RoutedContext route_full_context(std::span<const MemoryItem> snapshot, std::string_view role, Round round);

// One disjunct of a static filter: an item passes when its role_tag is in
// role_tags (or role_tags is empty) and its kind is in kinds (or kinds is
// empty). A rule with both sets empty matches nothing.
struct StaticRule {
    std::set<std::string> role_tags;
    std::set<MemoryKind> kinds;
};

struct StaticRoleFilter {
    std::vector<StaticRule> rules;
    std::optional<std::size_t> cap;
};

struct StaticRoutingConfig {
    std::map<std::string, StaticRoleFilter, std::less<>> roles;
};

/// Planner sees user items, Searcher sees planner and user items,
/// Recommender sees planner and searcher items.
StaticRoutingConfig default_static_config();

bool matches(const StaticRule& rule, const MemoryItem& item);

/// Items passing the role's fixed filter in insertion order, first `cap`
/// kept. Roles without a filter get an empty context.
RoutedContext route_static(std::span<const MemoryItem> snapshot, std::string_view role, Round round,
                           const StaticRoutingConfig& cfg);

struct KnapsackSolution {
    std::set<std::string> ids;
    double best_score = 0.0;
    TokenCount total_tokens = 0;
};

inline constexpr std::size_t kOracleMaxItems = 22;

/// Exhaustive 0/1 knapsack over all 2^n subsets (n <= 22, else TooManyItems).
/// Ties on score go to fewer tokens, then to the lexicographically smallest
/// sorted id tuple.
KnapsackSolution knapsack_oracle(std::span<const MemoryItem> snapshot, std::span<const double> scores,
                                 TokenCount budget);

}  // namespace ctxroute
