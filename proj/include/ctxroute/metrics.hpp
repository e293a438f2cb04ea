#pragma once

#include "ctxroute/agents.hpp"
#include "ctxroute/orchestrator.hpp"

#include <chrono>
#include <span>
#include <string>
#include <string_view>

namespace ctxroute {

// --- Latency and runtime --------------------------------------------------------

/// end - start in seconds; throws NegativeInterval when end < start.
double total_latency_wall(double start_s, double end_s);
double total_latency_wall(std::chrono::steady_clock::time_point start, std::chrono::steady_clock::time_point end);

/// Sum over rounds of the slowest agent. Throws EmptyRound for a round with
/// no agents.
double total_latency_parallel(std::span<const RoundRecord> records);

/// Sum of every agent latency in every round.
double total_latency_serial(std::span<const RoundRecord> records);

double per_round_runtime(const RoundRecord& record);

/// Prompt plus completion tokens over all agents and rounds.
TokenCount total_token_consumption(std::span<const RoundRecord> records);

enum class LatencyModel { Parallel, Serial };

std::string_view to_string(LatencyModel m) noexcept;
LatencyModel latency_model_from_string(std::string_view name);
double total_latency(std::span<const RoundRecord> records, LatencyModel model);

// --- Answer quality judge ---------------------------------------------------------

std::string build_judge_prompt(std::string_view query, std::string_view answer);

struct JudgeScore {
    int score = 0;
    std::string justification;
};

/// First balanced JSON object in `raw` that parses; the score must be an
/// integral number in [1, 5]. Errors: NoJsonFound, MissingField (absent or
/// non-numeric score), ScoreOutOfRange (outside [1, 5] or not integral).
JudgeScore parse_judge_score(std::string_view raw);

/// build -> invoke -> parse.
JudgeScore judge_answer(AgentBackend& judge, std::string_view query, std::string_view answer);

// Judge double that always answers with a fixed score.
class FixedScoreJudge final : public AgentBackend {
public:
    explicit FixedScoreJudge(int score) : score_(score) {}
    BackendResult invoke(const std::string& prompt) override;

private:
    int score_;
};

// --- QA metrics ---------------------------------------------------------------------

/// Lowercase, drop punctuation and the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

PrecisionRecallF1 qa_prf1(std::string_view prediction, std::string_view gold);
bool exact_match(std::string_view prediction, std::string_view gold);

/// task_success - lambda_tradeoff * total_tokens.
double composite_objective(double task_success, TokenCount total_tokens, double lambda_tradeoff);

}  // namespace ctxroute
