#include "ctxroute/router.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>

namespace ctxroute {

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Rcr:         return "rcr";
        case Strategy::FullContext: return "full_context";
        case Strategy::Static:      return "static";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "rcr") return Strategy::Rcr;
    if (name == "full_context" || name == "full") return Strategy::FullContext;
    if (name == "static") return Strategy::Static;
    throw Error(Errc::ConfigError, "unknown routing strategy '" + std::string(name) + "'");
}

std::vector<std::string> RoutedContext::ids() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& m : items) out.push_back(m.id);
    return out;
}

double canonical_score_sum(std::vector<double> scores) {
    std::sort(scores.begin(), scores.end(), std::greater<>());
    double total = 0.0;
    for (double s : scores) total += s;
    return total;
}

RoutedContext route_greedy(std::span<const MemoryItem> snapshot, std::string_view role, std::string_view stage,
                           Round round, TokenCount budget, const Scorer& scorer) {
    RoutedContext ctx;
    ctx.agent_role = std::string(role);
    ctx.round = round;
    ctx.budget = std::max<TokenCount>(0, budget);

    std::vector<double> scores(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) scores[i] = scorer.score(snapshot[i], role, stage, round);

    std::vector<std::size_t> order(snapshot.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (snapshot[a].round_created != snapshot[b].round_created)
            return snapshot[a].round_created > snapshot[b].round_created;
        return snapshot[a].id > snapshot[b].id;
    });

    for (std::size_t idx : order) {
        const TokenCount tokens = snapshot[idx].token_length;
        if (ctx.total_tokens + tokens > ctx.budget) break;
        ctx.items.push_back(snapshot[idx]);
        ctx.scores.push_back(scores[idx]);
        ctx.total_tokens += tokens;
    }
    return ctx;
}

RoutedContext route_greedy(std::span<const MemoryItem> snapshot, std::string_view role, std::string_view stage,
                           Round round, TokenCount budget, const ScorerConfig& cfg) {
    return route_greedy(snapshot, role, stage, round, budget, HeuristicScorer(cfg));
}

RoutedContext route_full_context(std::span<const MemoryItem> snapshot, std::string_view role, Round round) {
    RoutedContext ctx;
    ctx.agent_role = std::string(role);
    ctx.round = round;
    ctx.items.assign(snapshot.begin(), snapshot.end());
    for (const auto& m : snapshot) ctx.total_tokens += m.token_length;
    ctx.budget = ctx.total_tokens;
    return ctx;
}

StaticRoutingConfig default_static_config() {
    StaticRoutingConfig cfg;
    cfg.roles["planner"].rules = {StaticRule{{"user"}, {}}};
    cfg.roles["searcher"].rules = {StaticRule{{"planner", "user"}, {}}};
    cfg.roles["recommender"].rules = {StaticRule{{"planner", "searcher"}, {}}};
    return cfg;
}

bool matches(const StaticRule& rule, const MemoryItem& item) {
    if (rule.role_tags.empty() && rule.kinds.empty()) return false;
    const bool role_ok = rule.role_tags.empty() || rule.role_tags.contains(item.role_tag);
    const bool kind_ok = rule.kinds.empty() || rule.kinds.contains(item.kind);
    return role_ok && kind_ok;
}

RoutedContext route_static(std::span<const MemoryItem> snapshot, std::string_view role, Round round,
                           const StaticRoutingConfig& cfg) {
    RoutedContext ctx;
    ctx.agent_role = std::string(role);
    ctx.round = round;
    const auto it = cfg.roles.find(role);
    if (it != cfg.roles.end()) {
        const auto& filter = it->second;
        for (const auto& m : snapshot) {
            if (filter.cap && ctx.items.size() >= *filter.cap) break;
            const bool pass = std::any_of(filter.rules.begin(), filter.rules.end(),
                                          [&](const StaticRule& r) { return matches(r, m); });
            if (!pass) continue;
            ctx.items.push_back(m);
            ctx.total_tokens += m.token_length;
        }
    }
    ctx.budget = ctx.total_tokens;
    return ctx;
}

KnapsackSolution knapsack_oracle(std::span<const MemoryItem> snapshot, std::span<const double> scores,
                                 TokenCount budget) {
    const std::size_t n = snapshot.size();
    if (n > kOracleMaxItems)
        throw Error(Errc::TooManyItems, fmt::format("oracle supports at most {} items, got {}", kOracleMaxItems, n));
    if (scores.size() != n)
        throw Error(Errc::ConfigError, fmt::format("{} scores for {} items", scores.size(), n));

    auto sorted_ids = [&](std::uint32_t mask) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1U << i)) ids.push_back(snapshot[i].id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    std::uint32_t best_mask = 0;
    double best_score = 0.0;
    TokenCount best_tokens = 0;
    std::vector<double> picked;
    picked.reserve(n);
    const std::uint32_t limit = n == 0 ? 1U : (1U << n);
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
        TokenCount tokens = 0;
        picked.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask & (1U << i))) continue;
            tokens += snapshot[i].token_length;
            picked.push_back(scores[i]);
        }
        if (tokens > budget) continue;
        const double score = canonical_score_sum(picked);
        bool better = score > best_score;
        if (!better && score == best_score) {
            better = tokens < best_tokens || (tokens == best_tokens && sorted_ids(mask) < sorted_ids(best_mask));
        }
        if (better) {
            best_mask = mask;
            best_score = score;
            best_tokens = tokens;
        }
    }

    KnapsackSolution sol;
    const auto ids = sorted_ids(best_mask);
    sol.ids = {ids.begin(), ids.end()};
    sol.best_score = best_score;
    sol.total_tokens = best_tokens;
    return sol;
}

}  // namespace ctxroute
