#pragma once

#include "ctxroute/agents.hpp"
#include "ctxroute/budget.hpp"
#include "ctxroute/memory.hpp"
#include "ctxroute/router.hpp"
#include "ctxroute/scoring.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctxroute {

enum class Execution { Parallel, Sequential };

std::string_view to_string(Execution e) noexcept;
Execution execution_from_string(std::string_view name);

struct EpisodeConfig {
    Strategy strategy = Strategy::Rcr;
    Round rounds = 3;
    std::vector<std::string> roles = {"planner", "searcher", "recommender"};
    std::map<Round, std::string> stage_schedule = {{1, "planning"}, {2, "search"}, {3, "recommendation"}};
    Execution execution = Execution::Sequential;
    // Role whose last output supplies the final answer; falls back to the
    // last configured role when absent from `roles`.
    std::string answer_role = "recommender";
    bool keep_memory_trajectory = false;

    /// Throws ConfigError (rounds < 1, no roles, duplicate roles, empty
    /// schedule).
    void validate() const;

    /// Stage of the latest schedule entry at or before `round`; rounds before
    /// the first entry use the first entry.
    [[nodiscard]] std::string stage_for(Round round) const;
};

// Everything the loop needs besides the episode shape.
struct EngineConfig {
    ScorerConfig scorer = default_scorer_config();
    BudgetConfig budget = default_budget_config();
    TokenEstimator estimator;
    UpdatePolicy update;
    StaticRoutingConfig static_routing = default_static_config();
    RoleRegistry roles = RoleRegistry::builtin();
};

// Role -> backend, with an optional fallback for roles not listed.
class BackendSet {
public:
    BackendSet() = default;
    explicit BackendSet(std::shared_ptr<AgentBackend> fallback) : fallback_(std::move(fallback)) {}

    void set(std::string role, std::shared_ptr<AgentBackend> backend);
    [[nodiscard]] AgentBackend& for_role(std::string_view role) const;

private:
    std::map<std::string, std::shared_ptr<AgentBackend>, std::less<>> by_role_;
    std::shared_ptr<AgentBackend> fallback_;
};

struct AgentTurn {
    RoutedContext context;
    std::string prompt_sha256;
    TokenCount prompt_tokens = 0;
    TokenCount completion_tokens = 0;
    double latency_seconds = 0.0;
    double context_quality = 0.0;
    StructuredOutput output;
    std::optional<std::string> error;  // BackendFailure message when the call failed
};

struct RoundRecord {
    Round round = 0;
    std::string stage;
    std::vector<std::string> roles;  // invocation order
    std::map<std::string, AgentTurn> per_agent;
    std::size_t memory_size_before = 0;
    std::size_t memory_size_after = 0;
    TokenCount memory_tokens_before = 0;

    [[nodiscard]] const AgentTurn& turn(std::string_view role) const;
};

struct EpisodeResult {
    std::string task;
    Strategy strategy = Strategy::Rcr;
    std::vector<RoundRecord> rounds;
    std::string final_answer;
    MemoryStore final_memory;
    std::vector<std::string> memory_trajectory;  // JSON-Lines dump after each round, when requested
};

/// Seeds memory with the task (user/query item) and `seed_items`, then runs
/// cfg.rounds rounds of route -> prompt -> invoke -> parse -> memory update.
/// A failing backend call degrades to an empty output for that agent.
EpisodeResult run_episode(const std::string& task, const EpisodeConfig& cfg, const EngineConfig& engine,
                          const BackendSet& backends, const std::vector<MemoryItem>& seed_items = {});

/// Mean importance score of the context's items; 0 for an empty context.
double context_quality(const RoutedContext& context);

nlohmann::json to_json(const StructuredOutput& output);
nlohmann::json to_json(const RoundRecord& record);

/// One JSON line per round, written with dump_fixed.
std::string trace_jsonl(const EpisodeResult& result);

}  // namespace ctxroute
