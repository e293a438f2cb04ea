#include "ctxroute/error.hpp"
#include "ctxroute/scoring.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace ctxroute;

namespace {

const TokenEstimator kWs(EstimatorMode::Whitespace);

MemoryItem item(std::string text, MemoryKind kind = MemoryKind::TaskKnowledge, std::string sub_kind = "fact",
                Round round = 0) {
    return make_item("i", std::move(text), "user", "input", kind, std::move(sub_kind), round, kWs);
}

ScorerConfig cfg_with(std::string role, std::set<std::string> keywords) {
    ScorerConfig c;
    c.role_keywords[std::move(role)] = std::move(keywords);
    return c;
}

}  // namespace

TEST_CASE("whole-word keyword matching") {
    CHECK(contains_whole_word("search for the album Green", "search"));
    CHECK(contains_whole_word("SEARCH: results", "search"));
    CHECK_FALSE(contains_whole_word("research notes", "search"));
    CHECK_FALSE(contains_whole_word("searches", "search"));
    CHECK(contains_whole_word("re-search", "search"));
    CHECK(contains_whole_word("a search", "search"));
    CHECK_FALSE(contains_whole_word("", "search"));
    CHECK_FALSE(contains_whole_word("anything", ""));
}

TEST_CASE("role relevance") {
    const auto m = item("search for the album Green");
    CHECK(role_relevance(m, "searcher", cfg_with("searcher", {"search"})) == 1.0);
    CHECK(role_relevance(m, "searcher", cfg_with("searcher", {})) == 0.0);
    CHECK(role_relevance(m, "nobody", cfg_with("searcher", {"search"})) == 0.0);
    CHECK(role_relevance(item("research notes"), "searcher", cfg_with("searcher", {"search"})) == 0.0);
}

TEST_CASE("stage priority") {
    ScorerConfig c;
    c.stage_types["planning"] = {"plan"};
    c.stage_types["execution"] = {"tool_result"};
    c.stage_types["review"] = {"structured_state"};
    c.stage_types["audit"] = {"structured_state/plan"};
    const auto plan = item("p", MemoryKind::StructuredState, "plan");
    CHECK(stage_priority(plan, "planning", c) == 1.0);
    CHECK(stage_priority(plan, "execution", c) == 0.0);
    CHECK(stage_priority(plan, "zzz", c) == 0.0);
    CHECK(stage_priority(plan, "review", c) == 1.0);
    CHECK(stage_priority(plan, "audit", c) == 1.0);
    CHECK(stage_priority(item("p", MemoryKind::TaskKnowledge, "plan"), "audit", c) == 0.0);
}

TEST_CASE("recency") {
    ScorerConfig c;
    CHECK(recency(item("x", MemoryKind::TaskKnowledge, "fact", 3), 3, c) == 1.0);
    // exp(-0.5) to 20 digits: 0.60653065971263342360
    CHECK(std::abs(recency(item("x", MemoryKind::TaskKnowledge, "fact", 0), 5, c) - 0.60653065971263342360) < 1e-9);
    c.decay_lambda = 0.0;
    CHECK(recency(item("x", MemoryKind::TaskKnowledge, "fact", 0), 40, c) == 1.0);
    try {
        (void)recency(item("x", MemoryKind::TaskKnowledge, "fact", 4), 2, c);
        FAIL("expected NegativeAge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NegativeAge);
    }
}

TEST_CASE("importance examples") {
    ScorerConfig c = cfg_with("searcher", {"search"});
    c.stage_types["search"] = {"fact"};
    const auto hit_all = item("search it", MemoryKind::TaskKnowledge, "fact", 2);
    CHECK(importance(hit_all, "searcher", "search", 2, c) == 3.0);

    c.weights = {0, 0, 0};
    CHECK(importance(hit_all, "searcher", "search", 9, c) == 0.0);

    c.weights = {2, 1, 1};
    const auto role_only = item("search it", MemoryKind::InteractionHistory, "reasoning", 0);
    // 2 + 0 + exp(-0.5)
    CHECK(std::abs(importance(role_only, "searcher", "search", 5, c) - 2.60653065971263342360) < 1e-9);
}

TEST_CASE("config validation") {
    ScorerConfig c;
    c.weights.role = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c.weights.role = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(c.validate(), Error);
    c.weights.role = 1;
    c.decay_lambda = -0.1;
    CHECK_THROWS_AS(HeuristicScorer{c}, Error);
}

TEST_CASE("default config covers the pipeline roles") {
    const auto c = default_scorer_config();
    for (const char* role : {"planner", "searcher", "recommender", "retriever", "executor", "verifier", "critic",
                             "rewriter", "refiner"})
        CHECK(c.role_keywords.contains(role));
    CHECK(stage_priority(item("p", MemoryKind::StructuredState, "plan"), "planning", c) == 1.0);
}

TEST_CASE("property: bounds, monotone recency, linearity, argmax stability") {
    std::mt19937_64 rng(11);
    const ScorerConfig base = default_scorer_config();
    std::uniform_real_distribution<double> w(0.0, 5.0), scale(0.01, 100.0);
    const char* roles[] = {"planner", "searcher", "recommender"};
    const char* stages[] = {"planning", "search", "recommendation"};
    for (int trial = 0; trial < 500; ++trial) {
        ScorerConfig c = base;
        c.weights = {w(rng), w(rng), w(rng)};
        c.decay_lambda = w(rng) / 10;
        const auto items = ctxroute::testing::random_items(rng, 12, 1, 20, 6);
        const char* role = roles[rng() % 3];
        const char* stage = stages[rng() % 3];
        const Round now = 6;
        const double a = scale(rng);
        ScorerConfig scaled = c;
        scaled.weights = c.weights.scaled(a);

        std::vector<double> s, s_scaled;
        for (const auto& m : items) {
            const double v = importance(m, role, stage, now, c);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= c.weights.sum() + 1e-12);
            const double v_scaled = importance(m, role, stage, now, scaled);
            REQUIRE(std::abs(v_scaled - a * v) <= 1e-9 * std::max(1.0, std::abs(a * v)));
            s.push_back(v);
            s_scaled.push_back(v_scaled);

            if (m.round_created > 0) {
                MemoryItem older = m;
                older.round_created -= 1;
                const double vo = importance(older, role, stage, now, c);
                if (c.weights.recency > 0 && c.decay_lambda > 0) REQUIRE(v > vo);
                else REQUIRE(v >= vo);
            }
        }
        const auto top = std::max_element(s.begin(), s.end()) - s.begin();
        const auto top_scaled = std::max_element(s_scaled.begin(), s_scaled.end()) - s_scaled.begin();
        REQUIRE(std::abs(s[static_cast<std::size_t>(top_scaled)] - s[static_cast<std::size_t>(top)]) <=
                1e-12 * std::max(1.0, s[static_cast<std::size_t>(top)]));
    }
}
