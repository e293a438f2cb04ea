#pragma once

#include "ctxroute/config.hpp"
#include "ctxroute/dataset.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ctxroute {

// One cell of a sweep: a strategy with a concrete budget and round count.
struct Variant {
    Strategy strategy = Strategy::Rcr;
    BudgetConfig budget;
    Round rounds = 3;
    std::string label;  // trace sub-directory
};

struct RoundSummary {
    Round round = 0;
    double runtime_s = 0.0;
    TokenCount tokens = 0;
    TokenCount routed_tokens = 0;
    double context_quality = 0.0;  // mean over the round's agents
};

struct RoundAverage {
    Round round = 0;
    double avg_runtime_s = 0.0;
    double avg_tokens = 0.0;
    double avg_routed_tokens = 0.0;
    double avg_context_quality = 0.0;
};

struct ExampleRow {
    std::string example_id;
    std::string strategy;
    TokenCount budget = 0;
    Round rounds = 0;
    double runtime_s = 0.0;
    TokenCount total_tokens = 0;
    std::string answer;
    std::string gold;
    double em = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> answer_quality;
    double composite_objective = 0.0;
    std::vector<RoundSummary> per_round;
};

struct AggregateRow {
    std::string strategy;
    TokenCount budget = 0;
    Round rounds = 0;
    std::size_t num_examples = 0;
    double avg_runtime_s = 0.0;
    double total_tokens = 0.0;  // mean per example
    std::optional<double> answer_quality;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double em = 0.0;
    double composite_objective = 0.0;
    std::vector<RoundAverage> per_round;
};

struct SweepError {
    std::string example_id;
    std::string strategy;
    std::string message;
};

struct ExperimentReport {
    std::vector<AggregateRow> aggregates;
    std::vector<ExampleRow> examples;
    std::vector<SweepError> errors;
};

/// One variant per configured strategy, with the configured budget/rounds.
std::vector<Variant> strategy_variants(const ExperimentConfig& cfg);
/// strategies x budget_sweep, each with a uniform per-agent budget.
std::vector<Variant> budget_variants(const ExperimentConfig& cfg);
/// strategies x rounds_sweep.
std::vector<Variant> rounds_variants(const ExperimentConfig& cfg);

/// Runs every example under every variant (up to cfg.jobs examples at once),
/// scores answers and aggregates. When `out_dir` is set, writes report.json,
/// report.csv and traces/<label>/<example>.jsonl there.
ExperimentReport run_experiment(const std::vector<DatasetExample>& dataset, const ExperimentConfig& cfg,
                                const std::vector<Variant>& variants,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

AggregateRow aggregate(const std::vector<ExampleRow>& rows);

nlohmann::json to_json(const ExampleRow& row);
nlohmann::json to_json(const AggregateRow& row);
nlohmann::json to_json(const ExperimentReport& report);

/// Columns of the aggregate rows; floats at six decimals.
std::string report_csv(const ExperimentReport& report);

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

}  // namespace ctxroute
