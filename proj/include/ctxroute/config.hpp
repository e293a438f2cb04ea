#pragma once

#include "ctxroute/agents.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctxroute {

enum class BackendKind { Mock, Replay, Live };

std::string_view to_string(BackendKind k) noexcept;
BackendKind backend_kind_from_string(std::string_view name);

/// Canned blocks the mock agents emit for the planner/searcher/recommender
/// pipeline.
std::map<std::string, MockPersona, std::less<>> default_mock_personas();

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::uint64_t seed = 0;
    std::map<std::string, MockPersona, std::less<>> personas = default_mock_personas();  // by role
    MockPersona default_persona;
    std::string replay_path;
    LiveBackendConfig live;
};

enum class JudgeKind { None, Fixed, Replay, Live };

struct JudgeConfig {
    JudgeKind kind = JudgeKind::None;
    int fixed_score = 4;
    std::string replay_path;
    LiveBackendConfig live;
};

enum class SuccessMode { ExactMatch, F1Threshold };

struct MetricsConfig {
    double lambda_tradeoff = 1e-4;
    LatencyModel latency_model = LatencyModel::Parallel;
    SuccessMode success = SuccessMode::ExactMatch;
    double f1_threshold = 0.5;
};

struct ExperimentConfig {
    EpisodeConfig episode;
    EngineConfig engine;
    BackendConfig backend;
    JudgeConfig judge;
    MetricsConfig metrics;
    std::vector<Strategy> strategies = {Strategy::Rcr};
    std::size_t limit = 0;  // 0 = every example
    int jobs = 1;
    std::vector<TokenCount> budget_sweep = {512, 1024, 2048, 4096};
    std::vector<Round> rounds_sweep = {1, 2, 3, 4, 5};
};

/// Defaults overlaid with the keys present in `doc`. Unknown top-level keys
/// are rejected with ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Backends for every role of the episode, per the backend config.
BackendSet make_backends(const BackendConfig& cfg, const TokenEstimator& est);

/// Null for JudgeKind::None.
std::shared_ptr<AgentBackend> make_judge(const JudgeConfig& cfg, const TokenEstimator& est);

}  // namespace ctxroute
