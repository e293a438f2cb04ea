#include "ctxroute/config.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace ctxroute {

using nlohmann::json;

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
        case BackendKind::Mock:   return "mock";
        case BackendKind::Replay: return "replay";
        case BackendKind::Live:   return "live";
    }
    return "mock";
}

BackendKind backend_kind_from_string(std::string_view name) {
    if (name == "mock") return BackendKind::Mock;
    if (name == "replay") return BackendKind::Replay;
    if (name == "live") return BackendKind::Live;
    throw Error(Errc::ConfigError, "unknown backend '" + std::string(name) + "'");
}

std::map<std::string, MockPersona, std::less<>> default_mock_personas() {
    std::map<std::string, MockPersona, std::less<>> out;
    out["planner"].blocks = {
        {BlockTag::Plan, "Decompose the question: identify the bridge entity first, then look up the attribute asked for.",
         "plan:main"},
        {BlockTag::Reasoning, "The question needs two hops over the provided passages.", std::nullopt},
    };
    out["searcher"].blocks = {
        {BlockTag::Action, "search issued for the bridge entity; top passages retrieved", std::nullopt},
        {BlockTag::Fact, "Evidence for the bridge entity was found in the retrieved passages.", "evidence:bridge"},
    };
    out["recommender"].blocks = {
        {BlockTag::Fact, "unknown", "answer:final"},
        {BlockTag::Reasoning, "Combined the plan with the retrieved evidence to state the final answer.", std::nullopt},
    };
    return out;
}

namespace {

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

void check_keys(const json& obj, const std::string& section, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw Error(Errc::ConfigError, "section '" + section + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw Error(Errc::ConfigError, fmt::format("unknown key '{}' in section '{}'", key, section));
    }
}

BlockTag block_tag_from_string(const std::string& s) {
    if (s == "fact") return BlockTag::Fact;
    if (s == "action") return BlockTag::Action;
    if (s == "plan") return BlockTag::Plan;
    if (s == "reasoning") return BlockTag::Reasoning;
    throw Error(Errc::ConfigError, "unknown block tag '" + s + "'");
}

LiveBackendConfig live_from_json(const json& j, LiveBackendConfig cfg) {
    check_keys(j, "live", {"endpoint", "model", "api_key_env", "timeout_s", "temperature", "max_in_flight",
                           "max_retries", "retry_backoff_s", "system_prompt"});
    read_if(j, "endpoint", cfg.endpoint);
    read_if(j, "model", cfg.model);
    read_if(j, "api_key_env", cfg.api_key_env);
    read_if(j, "timeout_s", cfg.timeout_s);
    read_if(j, "temperature", cfg.temperature);
    read_if(j, "max_in_flight", cfg.max_in_flight);
    read_if(j, "max_retries", cfg.max_retries);
    read_if(j, "retry_backoff_s", cfg.retry_backoff_s);
    if (j.contains("system_prompt") && j["system_prompt"].is_string()) cfg.system_prompt = j["system_prompt"].get<std::string>();
    return cfg;
}

MockPersona persona_from_json(const json& j) {
    check_keys(j, "persona", {"blocks", "min_latency_s", "max_latency_s"});
    MockPersona p;
    read_if(j, "min_latency_s", p.min_latency_s);
    read_if(j, "max_latency_s", p.max_latency_s);
    if (j.contains("blocks")) {
        for (const auto& b : j.at("blocks")) {
            OutputBlock block;
            block.tag = block_tag_from_string(b.at("tag").get<std::string>());
            block.text = b.at("text").get<std::string>();
            if (b.contains("key") && b["key"].is_string()) block.entity_key = b["key"].get<std::string>();
            p.blocks.push_back(std::move(block));
        }
    }
    return p;
}

void apply_episode(const json& j, EpisodeConfig& ep) {
    check_keys(j, "episode", {"strategy", "rounds", "roles", "stage_schedule", "execution", "answer_role"});
    if (j.contains("strategy")) ep.strategy = strategy_from_string(j["strategy"].get<std::string>());
    read_if(j, "rounds", ep.rounds);
    read_if(j, "roles", ep.roles);
    if (j.contains("stage_schedule")) {
        ep.stage_schedule.clear();
        for (const auto& [round, stage] : j["stage_schedule"].items())
            ep.stage_schedule[std::stoll(round)] = stage.get<std::string>();
    }
    if (j.contains("execution")) ep.execution = execution_from_string(j["execution"].get<std::string>());
    read_if(j, "answer_role", ep.answer_role);
}

void apply_scorer(const json& j, ScorerConfig& sc) {
    check_keys(j, "scorer", {"weights", "decay_lambda", "role_keywords", "stage_types"});
    if (j.contains("weights")) {
        const auto w = j["weights"].get<std::vector<double>>();
        if (w.size() != 3) throw Error(Errc::ConfigError, "scorer.weights needs exactly three values");
        sc.weights = {w[0], w[1], w[2]};
    }
    read_if(j, "decay_lambda", sc.decay_lambda);
    if (j.contains("role_keywords")) {
        for (const auto& [role, kws] : j["role_keywords"].items()) {
            std::set<std::string> lowered;
            for (auto kw : kws.get<std::vector<std::string>>()) {
                for (auto& c : kw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                lowered.insert(std::move(kw));
            }
            sc.role_keywords[role] = std::move(lowered);
        }
    }
    if (j.contains("stage_types"))
        for (const auto& [stage, types] : j["stage_types"].items())
            sc.stage_types[stage] = types.get<std::set<std::string>>();
    sc.validate();
}

void apply_static(const json& j, StaticRoutingConfig& st) {
    if (!j.is_object()) throw Error(Errc::ConfigError, "section 'static_routing' must be an object");
    for (const auto& [role, spec] : j.items()) {
        check_keys(spec, "static_routing." + role, {"rules", "cap"});
        StaticRoleFilter filter;
        if (spec.contains("rules")) {
            for (const auto& r : spec["rules"]) {
                check_keys(r, "static_routing." + role + ".rules", {"role_tags", "kinds"});
                StaticRule rule;
                read_if(r, "role_tags", rule.role_tags);
                if (r.contains("kinds"))
                    for (const auto& k : r["kinds"]) rule.kinds.insert(memory_kind_from_string(k.get<std::string>()));
                filter.rules.push_back(std::move(rule));
            }
        }
        if (spec.contains("cap") && !spec["cap"].is_null()) filter.cap = spec["cap"].get<std::size_t>();
        st.roles[role] = std::move(filter);
    }
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
    check_keys(doc, "<root>", {"episode", "strategies", "budget", "scorer", "memory", "static_routing", "roles",
                               "backend", "judge", "metrics", "experiment"});
    ExperimentConfig cfg;
    try {
        if (doc.contains("episode")) apply_episode(doc["episode"], cfg.episode);
        if (doc.contains("strategies")) {
            cfg.strategies.clear();
            for (const auto& s : doc["strategies"]) cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
        } else {
            cfg.strategies = {cfg.episode.strategy};
        }

        std::map<std::string, TokenCount, std::less<>> explicit_offsets;
        if (doc.contains("budget")) {
            const auto& b = doc["budget"];
            check_keys(b, "budget", {"base_budget", "role_offsets", "token_estimator"});
            read_if(b, "base_budget", cfg.engine.budget.base_budget);
            if (b.contains("role_offsets"))
                for (const auto& [role, off] : b["role_offsets"].items()) explicit_offsets[role] = off.get<TokenCount>();
            if (b.contains("token_estimator"))
                cfg.engine.estimator = TokenEstimator(estimator_mode_from_string(b["token_estimator"].get<std::string>()));
            if (cfg.engine.budget.base_budget < 0) throw Error(Errc::ConfigError, "budget.base_budget must be >= 0");
        }

        if (doc.contains("roles")) {
            const auto& roles = doc["roles"];
            if (!roles.is_object()) throw Error(Errc::ConfigError, "section 'roles' must be an object");
            for (const auto& [name, spec] : roles.items()) {
                check_keys(spec, "roles." + name,
                           {"description", "prompt_template", "budget_offset", "output_schema_hint"});
                RoleProfile p = cfg.engine.roles.contains(name) ? cfg.engine.roles.get(name) : RoleProfile{};
                p.name = name;
                read_if(spec, "description", p.description);
                read_if(spec, "prompt_template", p.prompt_template);
                read_if(spec, "output_schema_hint", p.output_schema_hint);
                if (spec.contains("budget_offset")) {
                    p.budget_offset = spec["budget_offset"].get<TokenCount>();
                    cfg.engine.budget.role_offsets[name] = p.budget_offset;
                }
                cfg.engine.roles.add(std::move(p));
            }
        }
        for (const auto& [role, off] : explicit_offsets) cfg.engine.budget.role_offsets[role] = off;

        if (doc.contains("scorer")) apply_scorer(doc["scorer"], cfg.engine.scorer);

        if (doc.contains("memory")) {
            const auto& m = doc["memory"];
            check_keys(m, "memory", {"keep_reasoning", "keep_unstructured_output", "role_priority"});
            read_if(m, "keep_reasoning", cfg.engine.update.keep_reasoning);
            read_if(m, "keep_unstructured_output", cfg.engine.update.keep_unstructured_output);
            read_if(m, "role_priority", cfg.engine.update.role_priority);
        }

        if (doc.contains("static_routing")) {
            cfg.engine.static_routing = {};
            apply_static(doc["static_routing"], cfg.engine.static_routing);
        }

        if (doc.contains("backend")) {
            const auto& b = doc["backend"];
            check_keys(b, "backend", {"kind", "seed", "personas", "replay_path", "live"});
            if (b.contains("kind")) cfg.backend.kind = backend_kind_from_string(b["kind"].get<std::string>());
            read_if(b, "seed", cfg.backend.seed);
            if (b.contains("personas")) {
                cfg.backend.personas.clear();
                for (const auto& [role, spec] : b["personas"].items()) {
                    if (role == "*") cfg.backend.default_persona = persona_from_json(spec);
                    else cfg.backend.personas[role] = persona_from_json(spec);
                }
            }
            read_if(b, "replay_path", cfg.backend.replay_path);
            if (b.contains("live")) cfg.backend.live = live_from_json(b["live"], cfg.backend.live);
        }

        if (doc.contains("judge")) {
            const auto& j = doc["judge"];
            check_keys(j, "judge", {"kind", "fixed_score", "replay_path", "live"});
            if (j.contains("kind")) {
                const auto k = j["kind"].get<std::string>();
                if (k == "none") cfg.judge.kind = JudgeKind::None;
                else if (k == "fixed" || k == "mock") cfg.judge.kind = JudgeKind::Fixed;
                else if (k == "replay") cfg.judge.kind = JudgeKind::Replay;
                else if (k == "live") cfg.judge.kind = JudgeKind::Live;
                else throw Error(Errc::ConfigError, "unknown judge kind '" + k + "'");
            }
            read_if(j, "fixed_score", cfg.judge.fixed_score);
            read_if(j, "replay_path", cfg.judge.replay_path);
            if (j.contains("live")) cfg.judge.live = live_from_json(j["live"], cfg.judge.live);
        }

        if (doc.contains("metrics")) {
            const auto& m = doc["metrics"];
            check_keys(m, "metrics", {"lambda_tradeoff", "latency_model", "success", "f1_threshold"});
            read_if(m, "lambda_tradeoff", cfg.metrics.lambda_tradeoff);
            if (m.contains("latency_model"))
                cfg.metrics.latency_model = latency_model_from_string(m["latency_model"].get<std::string>());
            if (m.contains("success")) {
                const auto s = m["success"].get<std::string>();
                if (s == "exact_match") cfg.metrics.success = SuccessMode::ExactMatch;
                else if (s == "f1") cfg.metrics.success = SuccessMode::F1Threshold;
                else throw Error(Errc::ConfigError, "unknown success mode '" + s + "'");
            }
            read_if(m, "f1_threshold", cfg.metrics.f1_threshold);
        }

        if (doc.contains("experiment")) {
            const auto& e = doc["experiment"];
            check_keys(e, "experiment", {"limit", "jobs", "budget_sweep", "rounds_sweep"});
            read_if(e, "limit", cfg.limit);
            read_if(e, "jobs", cfg.jobs);
            read_if(e, "budget_sweep", cfg.budget_sweep);
            read_if(e, "rounds_sweep", cfg.rounds_sweep);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, e.what());
    }
    cfg.episode.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, fmt::format("{}: {}", path, e.what()));
    }
    return config_from_json(doc);
}

BackendSet make_backends(const BackendConfig& cfg, const TokenEstimator& est) {
    switch (cfg.kind) {
        case BackendKind::Mock: {
            auto with_defaults = [&](MockPersona p) {
                p.seed = cfg.seed;
                p.estimator = est;
                return p;
            };
            BackendSet set(std::make_shared<MockBackend>(with_defaults(cfg.default_persona)));
            for (const auto& [role, persona] : cfg.personas)
                set.set(role, std::make_shared<MockBackend>(with_defaults(persona)));
            return set;
        }
        case BackendKind::Replay: {
            if (cfg.replay_path.empty()) throw Error(Errc::ConfigError, "replay backend needs backend.replay_path");
            return BackendSet(std::make_shared<ReplayBackend>(ReplayBackend::from_jsonl(cfg.replay_path)));
        }
        case BackendKind::Live: {
            LiveBackendConfig live = cfg.live;
            live.estimator = est;
            return BackendSet(std::make_shared<LiveBackend>(std::move(live)));
        }
    }
    throw Error(Errc::ConfigError, "unsupported backend kind");
}

std::shared_ptr<AgentBackend> make_judge(const JudgeConfig& cfg, const TokenEstimator& est) {
    switch (cfg.kind) {
        case JudgeKind::None: return nullptr;
        case JudgeKind::Fixed: return std::make_shared<FixedScoreJudge>(cfg.fixed_score);
        case JudgeKind::Replay:
            if (cfg.replay_path.empty()) throw Error(Errc::ConfigError, "replay judge needs judge.replay_path");
            return std::make_shared<ReplayBackend>(ReplayBackend::from_jsonl(cfg.replay_path));
        case JudgeKind::Live: {
            LiveBackendConfig live = cfg.live;
            live.estimator = est;
            return std::make_shared<LiveBackend>(std::move(live));
        }
    }
    return nullptr;
}

}  // namespace ctxroute
