#include "ctxroute/orchestrator.hpp"

#include "ctxroute/error.hpp"
#include "ctxroute/json_format.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <future>
#include <numeric>
#include <set>

namespace ctxroute {

std::string_view to_string(Execution e) noexcept {
    return e == Execution::Parallel ? "parallel" : "sequential";
}

Execution execution_from_string(std::string_view name) {
    if (name == "parallel") return Execution::Parallel;
    if (name == "sequential") return Execution::Sequential;
    throw Error(Errc::ConfigError, "unknown execution mode '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
    if (rounds < 1) throw Error(Errc::ConfigError, fmt::format("rounds must be >= 1 (got {})", rounds));
    if (roles.empty()) throw Error(Errc::ConfigError, "episode needs at least one role");
    std::set<std::string> unique(roles.begin(), roles.end());
    if (unique.size() != roles.size()) throw Error(Errc::ConfigError, "episode roles must be distinct");
    if (stage_schedule.empty()) throw Error(Errc::ConfigError, "stage schedule is empty");
}

std::string EpisodeConfig::stage_for(Round round) const {
    auto it = stage_schedule.upper_bound(round);
    if (it == stage_schedule.begin()) return it->second;
    return std::prev(it)->second;
}

void BackendSet::set(std::string role, std::shared_ptr<AgentBackend> backend) {
    by_role_.insert_or_assign(std::move(role), std::move(backend));
}

AgentBackend& BackendSet::for_role(std::string_view role) const {
    if (const auto it = by_role_.find(role); it != by_role_.end() && it->second) return *it->second;
    if (fallback_) return *fallback_;
    throw Error(Errc::ConfigError, "no backend configured for role '" + std::string(role) + "'");
}

const AgentTurn& RoundRecord::turn(std::string_view role) const {
    const auto it = per_agent.find(std::string(role));
    if (it == per_agent.end()) throw Error(Errc::ConfigError, "round has no turn for role '" + std::string(role) + "'");
    return it->second;
}

double context_quality(const RoutedContext& context) {
    if (context.scores.empty()) return 0.0;
    return std::accumulate(context.scores.begin(), context.scores.end(), 0.0) /
           static_cast<double>(context.scores.size());
}

namespace {

AgentTurn run_turn(const Snapshot& snapshot, const std::string& role, const std::string& stage, Round round,
                   const std::string& task, const EpisodeConfig& cfg, const EngineConfig& engine,
                   const BackendSet& backends) {
    AgentTurn turn;
    const RoleProfile& profile = engine.roles.get(role);
    switch (cfg.strategy) {
        case Strategy::Rcr:
            turn.context = route_greedy(snapshot, role, stage, round, allocate(role, engine.budget), engine.scorer);
            break;
        case Strategy::FullContext: turn.context = route_full_context(snapshot, role, round); break;
        case Strategy::Static: turn.context = route_static(snapshot, role, round, engine.static_routing); break;
    }
    // Baselines do not score; score their contexts so quality is comparable.
    if (turn.context.scores.size() != turn.context.items.size()) {
        turn.context.scores.clear();
        for (const auto& m : turn.context.items)
            turn.context.scores.push_back(importance(m, role, stage, round, engine.scorer));
    }
    turn.context_quality = context_quality(turn.context);

    const std::string prompt = build_prompt(profile, task, stage, turn.context);
    turn.prompt_sha256 = sha256_hex(prompt);
    try {
        BackendResult r = backends.for_role(role).invoke(prompt);
        turn.prompt_tokens = r.prompt_tokens;
        turn.completion_tokens = r.completion_tokens;
        turn.latency_seconds = r.latency_seconds;
        turn.output = parse_structured_output(r.raw_text, role, round);
    } catch (const std::exception& e) {
        turn.error = e.what();
        turn.output = StructuredOutput{};
        turn.output.agent_role = role;
        turn.output.round = round;
    }
    turn.output.stage = stage;
    return turn;
}

std::string pick_final_answer(const std::vector<RoundRecord>& rounds, const EpisodeConfig& cfg) {
    const bool has_answer_role = std::find(cfg.roles.begin(), cfg.roles.end(), cfg.answer_role) != cfg.roles.end();
    const std::string& role = has_answer_role ? cfg.answer_role : cfg.roles.back();
    for (auto it = rounds.rbegin(); it != rounds.rend(); ++it) {
        const auto found = it->per_agent.find(role);
        if (found == it->per_agent.end()) continue;
        const auto& out = found->second.output;
        if (!out.facts.empty()) return out.facts.front().text;
        return out.raw_text;
    }
    return {};
}

}  // namespace

EpisodeResult run_episode(const std::string& task, const EpisodeConfig& cfg, const EngineConfig& engine,
                          const BackendSet& backends, const std::vector<MemoryItem>& seed_items) {
    cfg.validate();
    for (const auto& role : cfg.roles) (void)engine.roles.get(role);

    // Seeds live at round 0; round t runs with the store at round t.
    MemoryStore store(1, engine.estimator);
    store.append(make_item("task", task, "user", "input", MemoryKind::InteractionHistory, "query", 0, engine.estimator));
    for (const auto& seed : seed_items) {
        MemoryItem item = seed;
        item.round_created = 0;
        store.append(std::move(item));
    }

    EpisodeResult result;
    result.task = task;
    result.strategy = cfg.strategy;
    for (Round t = 1; t <= cfg.rounds; ++t) {
        RoundRecord record;
        record.round = t;
        record.stage = cfg.stage_for(t);
        record.roles = cfg.roles;
        record.memory_size_before = store.size();
        record.memory_tokens_before = store.total_tokens();

        const Snapshot base = store.snapshot();
        std::vector<StructuredOutput> outputs;
        if (cfg.execution == Execution::Parallel) {
            std::vector<std::future<AgentTurn>> pending;
            for (const auto& role : cfg.roles)
                pending.push_back(std::async(std::launch::async, [&, role] {
                    return run_turn(base, role, record.stage, t, task, cfg, engine, backends);
                }));
            for (std::size_t i = 0; i < cfg.roles.size(); ++i) {
                AgentTurn turn = pending[i].get();
                outputs.push_back(turn.output);
                record.per_agent.emplace(cfg.roles[i], std::move(turn));
            }
        } else {
            // Later agents see earlier same-round outputs through a staged
            // (uncommitted) update of the store.
            for (const auto& role : cfg.roles) {
                const Snapshot view = outputs.empty() ? base : memory_update(store, outputs, engine.update).items();
                AgentTurn turn = run_turn(view, role, record.stage, t, task, cfg, engine, backends);
                outputs.push_back(turn.output);
                record.per_agent.emplace(role, std::move(turn));
            }
        }

        apply_memory_update(store, outputs, engine.update);
        record.memory_size_after = store.size();
        if (cfg.keep_memory_trajectory) result.memory_trajectory.push_back(store.to_jsonl());
        result.rounds.push_back(std::move(record));
    }
    result.final_answer = pick_final_answer(result.rounds, cfg);
    result.final_memory = std::move(store);
    return result;
}

nlohmann::json to_json(const StructuredOutput& output) {
    auto key_json = [](const std::optional<std::string>& k) { return k ? nlohmann::json(*k) : nlohmann::json(nullptr); };
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& f : output.facts) facts.push_back({{"text", f.text}, {"entity_key", key_json(f.entity_key)}});
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& a : output.actions)
        actions.push_back({{"text", a.text}, {"entity_key", key_json(a.entity_key)}, {"sub_kind", a.sub_kind}});
    return {{"agent_role", output.agent_role}, {"round", output.round},     {"stage", output.stage},
            {"facts", std::move(facts)},       {"actions", std::move(actions)}, {"reasoning", output.reasoning},
            {"raw_text", output.raw_text}};
}

nlohmann::json to_json(const RoundRecord& record) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& role : record.roles) {
        const AgentTurn& turn = record.turn(role);
        agents.push_back({{"role", role},
                          {"budget", turn.context.budget},
                          {"routed_tokens", turn.context.total_tokens},
                          {"context_ids", turn.context.ids()},
                          {"scores", turn.context.scores},
                          {"context_quality", turn.context_quality},
                          {"prompt_sha256", turn.prompt_sha256},
                          {"prompt_tokens", turn.prompt_tokens},
                          {"completion_tokens", turn.completion_tokens},
                          {"latency_seconds", turn.latency_seconds},
                          {"error", turn.error ? nlohmann::json(*turn.error) : nlohmann::json(nullptr)},
                          {"output", to_json(turn.output)}});
    }
    return {{"round", record.round},
            {"stage", record.stage},
            {"memory_size_before", record.memory_size_before},
            {"memory_size_after", record.memory_size_after},
            {"memory_tokens_before", record.memory_tokens_before},
            {"agents", std::move(agents)}};
}

std::string trace_jsonl(const EpisodeResult& result) {
    std::string out;
    for (const auto& r : result.rounds) {
        out += dump_fixed(to_json(r));
        out += '\n';
    }
    return out;
}

}  // namespace ctxroute
