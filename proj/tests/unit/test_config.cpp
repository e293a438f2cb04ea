#include "ctxroute/config.hpp"
#include "ctxroute/error.hpp"

#include <doctest.h>

using namespace ctxroute;
using nlohmann::json;

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

}  // namespace

TEST_CASE("empty document yields defaults") {
    const auto cfg = config_from_json(json::object());
    CHECK(cfg.episode.rounds == 3);
    CHECK(cfg.strategies == std::vector{Strategy::Rcr});
    CHECK(allocate("planner", cfg.engine.budget) == 1500);
    CHECK(cfg.engine.estimator.mode() == EstimatorMode::CharsDiv4);
    CHECK(cfg.backend.kind == BackendKind::Mock);
    CHECK(cfg.judge.kind == JudgeKind::None);
    CHECK(cfg.metrics.latency_model == LatencyModel::Parallel);
    CHECK(cfg.budget_sweep == std::vector<TokenCount>{512, 1024, 2048, 4096});
}

TEST_CASE("sections override defaults") {
    const auto cfg = config_from_json(json::parse(R"({
        "episode": {"rounds": 5, "roles": ["planner", "verifier"], "execution": "parallel",
                    "stage_schedule": {"1": "planning", "2": "verification"}, "answer_role": "verifier"},
        "strategies": ["rcr", "static", "full_context"],
        "budget": {"base_budget": 2048, "role_offsets": {"planner": 100}, "token_estimator": "whitespace"},
        "scorer": {"weights": [2, 1, 0.5], "decay_lambda": 0.2,
                   "role_keywords": {"verifier": ["check"]}, "stage_types": {"verification": ["fact"]}},
        "memory": {"keep_reasoning": false, "role_priority": ["verifier", "planner"]},
        "static_routing": {"verifier": {"rules": [{"role_tags": ["planner"], "kinds": ["structured_state"]}], "cap": 4}},
        "backend": {"kind": "mock", "seed": 9},
        "judge": {"kind": "fixed", "fixed_score": 5},
        "metrics": {"lambda_tradeoff": 0.001, "latency_model": "serial", "success": "f1", "f1_threshold": 0.8},
        "experiment": {"limit": 7, "jobs": 2, "budget_sweep": [100, 200], "rounds_sweep": [1, 3]}
    })"));
    CHECK(cfg.episode.rounds == 5);
    CHECK(cfg.episode.roles == std::vector<std::string>{"planner", "verifier"});
    CHECK(cfg.episode.execution == Execution::Parallel);
    CHECK(cfg.episode.stage_for(4) == "verification");
    CHECK(cfg.episode.answer_role == "verifier");
    CHECK(cfg.strategies.size() == 3);
    CHECK(allocate("planner", cfg.engine.budget) == 2148);
    CHECK(allocate("verifier", cfg.engine.budget) == 2048);
    CHECK(cfg.engine.estimator.mode() == EstimatorMode::Whitespace);
    CHECK(cfg.engine.scorer.weights.role == 2.0);
    CHECK(cfg.engine.scorer.weights.recency == 0.5);
    CHECK(cfg.engine.scorer.decay_lambda == 0.2);
    CHECK(cfg.engine.scorer.role_keywords.at("verifier") == std::set<std::string>{"check"});
    CHECK_FALSE(cfg.engine.update.keep_reasoning);
    CHECK(cfg.engine.update.role_priority.front() == "verifier");
    const auto& filter = cfg.engine.static_routing.roles.at("verifier");
    CHECK(filter.cap == 4);
    CHECK(filter.rules.at(0).kinds == std::set{MemoryKind::StructuredState});
    CHECK(cfg.backend.seed == 9);
    CHECK(cfg.judge.kind == JudgeKind::Fixed);
    CHECK(cfg.judge.fixed_score == 5);
    CHECK(cfg.metrics.latency_model == LatencyModel::Serial);
    CHECK(cfg.metrics.success == SuccessMode::F1Threshold);
    CHECK(cfg.limit == 7);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.rounds_sweep == std::vector<Round>{1, 3});
}

TEST_CASE("role profiles from config") {
    const auto cfg = config_from_json(json::parse(R"({
        "roles": {"summarizer": {"description": "d", "prompt_template": "{task} / {context}", "budget_offset": -100}},
        "episode": {"roles": ["summarizer"]}
    })"));
    CHECK(cfg.engine.roles.get("summarizer").budget_offset == -100);
    CHECK(allocate("summarizer", cfg.engine.budget) == 924);
    CHECK(code_of([] {
              (void)config_from_json(json::parse(R"({"roles": {"x": {"prompt_template": "no slots"}}})"));
          }) == Errc::TemplateMismatch);
}

TEST_CASE("invalid documents are config errors") {
    for (const char* doc : {R"({"unknown": 1})", R"({"episode": {"rounds": 0}})", R"({"episode": {"roundz": 2}})",
                            R"({"scorer": {"weights": [1, -1, 1]}})", R"({"judge": {"kind": "oracle"}})",
                            R"({"budget": {"base_budget": "big"}})", R"({"metrics": {"success": "vibes"}})"}) {
        CAPTURE(doc);
        CHECK_THROWS_AS(config_from_json(json::parse(doc)), Error);
    }
    CHECK(code_of([] { (void)load_config("/nonexistent/config.json"); }) == Errc::ConfigError);
}

TEST_CASE("backend factories") {
    BackendConfig mock;
    const auto set = make_backends(mock, TokenEstimator{});
    CHECK_NOTHROW((void)set.for_role("planner"));
    CHECK_NOTHROW((void)set.for_role("anyone"));

    BackendConfig replay;
    replay.kind = BackendKind::Replay;
    CHECK(code_of([&] { (void)make_backends(replay, TokenEstimator{}); }) == Errc::ConfigError);

    JudgeConfig judge;
    CHECK(make_judge(judge, TokenEstimator{}) == nullptr);
    judge.kind = JudgeKind::Fixed;
    CHECK(make_judge(judge, TokenEstimator{}) != nullptr);
    CHECK(backend_kind_from_string("live") == BackendKind::Live);
    CHECK_THROWS(backend_kind_from_string("carrier-pigeon"));
}

TEST_CASE("mock personas from config") {
    const auto cfg = config_from_json(json::parse(R"({
        "backend": {"personas": {
            "planner": {"blocks": [{"tag": "plan", "text": "p", "key": "plan:main"}], "min_latency_s": 1, "max_latency_s": 1},
            "*": {"blocks": [{"tag": "fact", "text": "default"}]}
        }}
    })"));
    REQUIRE(cfg.backend.personas.size() == 1);
    const auto& p = cfg.backend.personas.at("planner");
    CHECK(p.blocks.at(0).tag == BlockTag::Plan);
    CHECK(p.blocks.at(0).entity_key == "plan:main");
    CHECK(p.min_latency_s == 1.0);
    CHECK(cfg.backend.default_persona.blocks.at(0).text == "default");
}
