#include "ctxroute/error.hpp"
#include "ctxroute/metrics.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctxroute;
using ctxroute::testing::latency_round;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::ParseError;
}

RoundRecord token_round(Round round, std::vector<std::pair<TokenCount, TokenCount>> cells) {
    RoundRecord r;
    r.round = round;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto& t = r.per_agent["a" + std::to_string(i)];
        t.prompt_tokens = cells[i].first;
        t.completion_tokens = cells[i].second;
    }
    return r;
}

}  // namespace

TEST_CASE("wall-clock latency") {
    CHECK(total_latency_wall(3.0, 3.0) == 0.0);
    CHECK(total_latency_wall(10.0, 12.5) == 2.5);
    CHECK(code_of([] { (void)total_latency_wall(5.0, 4.0); }) == Errc::NegativeInterval);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(total_latency_wall(t0, t0 + std::chrono::milliseconds(1500)) == doctest::Approx(1.5));
}

TEST_CASE("parallel, serial and per-round latency") {
    CHECK(total_latency_parallel(std::vector{latency_round(1, {2, 5, 3})}) == 5.0);
    const std::vector two = {latency_round(1, {2, 5}), latency_round(2, {4, 1})};
    CHECK(total_latency_parallel(two) == 9.0);
    CHECK(total_latency_serial(two) == 12.0);
    CHECK(total_latency_parallel(std::vector{latency_round(1, {0, 0}), latency_round(2, {0})}) == 0.0);
    CHECK(total_latency_serial(std::vector{latency_round(1, {7})}) == 7.0);
    CHECK(total_latency_serial(std::vector<RoundRecord>{}) == 0.0);
    CHECK(total_latency_parallel(std::vector<RoundRecord>{}) == 0.0);
    CHECK(code_of([] { (void)total_latency_parallel(std::vector{latency_round(1, {})}); }) == Errc::EmptyRound);

    CHECK(per_round_runtime(latency_round(1, {2, 5, 3})) == 10.0);
    CHECK(per_round_runtime(latency_round(1, {4})) == 4.0);
    CHECK(per_round_runtime(latency_round(1, {0, 0, 0})) == 0.0);

    const std::vector table = {latency_round(1, {2, 5, 3}), latency_round(2, {4, 1})};
    CHECK(total_latency(table, LatencyModel::Parallel) == 9.0);
    CHECK(total_latency(table, LatencyModel::Serial) == 15.0);
    CHECK(latency_model_from_string("serial") == LatencyModel::Serial);
}

TEST_CASE("token consumption") {
    CHECK(total_token_consumption(std::vector{token_round(1, {{100, 50}})}) == 150);
    CHECK(total_token_consumption(std::vector{token_round(1, {{10, 10}, {10, 10}}),
                                              token_round(2, {{10, 10}, {10, 10}})}) == 80);
    CHECK(total_token_consumption(std::vector<RoundRecord>{}) == 0);
}

TEST_CASE("property: latency relations over random tables") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lat(0.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<RoundRecord> rounds;
        bool all_single = true;
        for (auto t = rng() % 5 + 1; t > 0; --t) {
            std::vector<double> l(rng() % 4 + 1);
            for (auto& x : l) x = lat(rng);
            all_single &= l.size() == 1;
            rounds.push_back(latency_round(static_cast<Round>(rounds.size() + 1), l));
        }
        const double par = total_latency_parallel(rounds), ser = total_latency_serial(rounds);
        REQUIRE(par <= ser);
        if (all_single) REQUIRE(par == ser);
        double by_round = 0.0;
        for (const auto& r : rounds) by_round += per_round_runtime(r);
        REQUIRE(std::abs(by_round - ser) <= 1e-9);
    }
}

TEST_CASE("judge prompt") {
    CHECK(ctxroute::testing::judge_prompt_matches_golden());
    const auto empty = build_judge_prompt("q", "");
    CHECK(empty.find("Answer: \n\n\nPlease provide a JSON object") != std::string::npos);
    CHECK(build_judge_prompt("q", "a") == build_judge_prompt("q", "a"));
}

TEST_CASE("judge score parsing") {
    auto s = parse_judge_score(R"({"score": 4, "justification": "good"})");
    CHECK(s.score == 4);
    CHECK(s.justification == "good");
    s = parse_judge_score(R"(Sure! {"score": 5, "justification": "x"})");
    CHECK(s.score == 5);
    CHECK(s.justification == "x");
    CHECK(code_of([] { (void)parse_judge_score(R"({"score": 9})"); }) == Errc::ScoreOutOfRange);
    CHECK(code_of([] { (void)parse_judge_score(R"({"score": "4"})"); }) == Errc::MissingField);
    CHECK(code_of([] { (void)parse_judge_score("{not json} nothing else"); }) == Errc::NoJsonFound);
    // first object that parses wins
    CHECK(parse_judge_score(R"({broken {"score": 2} {"score": 3})").score == 2);
}

TEST_CASE("judge corpus") {
    const auto failures = ctxroute::testing::check_judge_corpus();
    for (const auto& f : failures) MESSAGE(f);
    CHECK(failures.empty());
}

TEST_CASE("judge round trip through a backend") {
    FixedScoreJudge judge(3);
    const auto s = judge_answer(judge, "q", "a");
    CHECK(s.score == 3);
    CHECK(s.justification == "fixed score");
    FixedScoreJudge broken(0);
    CHECK(code_of([&] { (void)judge_answer(broken, "q", "a"); }) == Errc::ScoreOutOfRange);
}

TEST_CASE("QA precision, recall and F1") {
    auto m = qa_prf1("miquette giraudy", "miquette giraudy");
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    m = qa_prf1("the giraudy", "miquette giraudy");
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    m = qa_prf1("alpha beta", "gamma");
    CHECK(m.f1 == 0.0);
    m = qa_prf1("", "");
    CHECK(m.f1 == 1.0);
    m = qa_prf1("", "x");
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(normalize_answer("The  Eiffel-Tower!") == "eiffeltower");
    CHECK(exact_match("An apple.", "apple"));
    CHECK_FALSE(exact_match("apples", "apple"));
}

TEST_CASE("property: prf1 symmetry") {
    std::mt19937_64 rng(23);
    const char* words[] = {"a", "the", "paris", "france", "capital", "city", "of", "paris,", "France."};
    for (int trial = 0; trial < 1000; ++trial) {
        std::string p, g;
        for (auto k = rng() % 5; k > 0; --k) p += std::string(words[rng() % 9]) + " ";
        for (auto k = rng() % 5; k > 0; --k) g += std::string(words[rng() % 9]) + " ";
        const auto a = qa_prf1(p, g), b = qa_prf1(g, p);
        REQUIRE(a.precision == b.recall);
        REQUIRE(a.recall == b.precision);
        REQUIRE(a.f1 == doctest::Approx(b.f1).epsilon(1e-12));
    }
}

TEST_CASE("composite objective") {
    CHECK(composite_objective(0.7, 5000, 0.0) == 0.7);
    CHECK(composite_objective(1.0, 1000, 1e-4) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(composite_objective(0.0, 0, 1e-4) == 0.0);
}
