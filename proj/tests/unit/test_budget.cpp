#include "ctxroute/budget.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace ctxroute;

TEST_CASE("allocate reproduces the reference pipeline budgets") {
    const auto cfg = default_budget_config();
    CHECK(cfg.base_budget == 1024);
    CHECK(allocate("planner", cfg) == 1500);
    CHECK(allocate("searcher", cfg) == 1000);
    CHECK(allocate("recommender", cfg) == 800);
    CHECK(allocate("verifier", cfg) == 1024);
}

TEST_CASE("uniform budgets and clamping") {
    const auto u = uniform_budget(2048);
    for (const char* role : {"planner", "searcher", "recommender", "anyone"}) CHECK(allocate(role, u) == 2048);
    BudgetConfig c{0, {{"x", -5}}};
    CHECK(allocate("x", c) == 0);
}

TEST_CASE("estimators") {
    const TokenEstimator ws(EstimatorMode::Whitespace), c4(EstimatorMode::CharsDiv4);
    CHECK(ws.estimate("") == 0);
    CHECK(c4.estimate("") == 0);
    CHECK(ws.estimate("a b  c") == 3);
    CHECK(ws.estimate("  lead\ttab\nnew  ") == 3);
    CHECK(c4.estimate("abcdefgh") == 2);
    CHECK(c4.estimate("abcdefghi") == 3);
    CHECK(c4.estimate("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9") == 1);  // four scalars, eight bytes
    CHECK(utf8_scalar_count("\xF0\x9F\x98\x80x") == 2);
    const TokenEstimator ext([](std::string_view s) { return static_cast<TokenCount>(s.size() * 2); });
    CHECK(ext.mode() == EstimatorMode::External);
    CHECK(estimate_tokens("abc", ext) == 6);
    CHECK(TokenEstimator{}.mode() == EstimatorMode::CharsDiv4);
}

TEST_CASE("estimator mode names") {
    CHECK(estimator_mode_from_string("whitespace") == EstimatorMode::Whitespace);
    CHECK(estimator_mode_from_string("chars_div_4") == EstimatorMode::CharsDiv4);
    CHECK(to_string(EstimatorMode::CharsDiv4) == "chars_div_4");
    CHECK_THROWS(estimator_mode_from_string("bpe"));
}

TEST_CASE("property: concatenation monotonicity and non-negative budgets") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> alphabet = {"a", "b", " ", "c", "\t", "\xC3\xA9", "x", "yz", "  "};
    auto random_text = [&] {
        std::string s;
        for (int n = static_cast<int>(rng() % 30); n > 0; --n) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int i = 0; i < 2000; ++i) {
        const std::string a = random_text(), b = random_text();
        for (auto mode : {EstimatorMode::Whitespace, EstimatorMode::CharsDiv4}) {
            const TokenEstimator e(mode);
            const auto joined = e.estimate(a + " " + b);
            REQUIRE(joined >= std::max(e.estimate(a), e.estimate(b)));
        }
        BudgetConfig cfg{static_cast<TokenCount>(rng() % 3000), {{"r", static_cast<TokenCount>(rng() % 6000) - 3000}}};
        REQUIRE(allocate("r", cfg) >= 0);
    }
}
