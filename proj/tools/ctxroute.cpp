// ctxroute: experiment runner and debugging front end.
//
//   ctxroute run           --dataset d.jsonl --strategy rcr --strategy full_context --out out/
//   ctxroute ablate-budget --dataset d.jsonl --out out/
//   ctxroute ablate-rounds --dataset d.jsonl --out out/
//   ctxroute route         --memory dump.jsonl --role searcher --stage search --round 2
//   ctxroute judge         --answers answers.jsonl --judge fixed
//
// Precedence: flags > --config file > built-in defaults.

#include "ctxroute/config.hpp"
#include "ctxroute/dataset.hpp"
#include "ctxroute/error.hpp"
#include "ctxroute/experiment.hpp"
#include "ctxroute/json_format.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/router.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace ctxroute;

struct CommonFlags {
    std::string config;
    std::string dataset;
    std::string format = "generic";
    std::vector<std::string> strategies;
    std::optional<Round> rounds;
    std::optional<TokenCount> budget;
    std::optional<std::size_t> limit;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::string fixtures;
    std::optional<int> jobs;
    std::string execution;
    std::string judge;
    std::optional<int> judge_score;
    std::string judge_fixtures;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--dataset", f.dataset, "dataset file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", f.format, "hotpotqa | musique | 2wiki | generic");
    cmd->add_option("--strategy", f.strategies, "rcr | full_context | static (repeatable)");
    cmd->add_option("--rounds", f.rounds, "rounds per episode")->check(CLI::PositiveNumber);
    cmd->add_option("--budget", f.budget, "uniform per-agent token budget")->check(CLI::NonNegativeNumber);
    cmd->add_option("--limit", f.limit, "examples to run (0 = all)");
    cmd->add_option("--out", f.out, "output directory")->required();
    cmd->add_option("--seed", f.seed, "mock backend seed");
    cmd->add_option("--backend", f.backend, "mock | replay | live");
    cmd->add_option("--fixtures", f.fixtures, "replay fixtures (JSONL) for --backend replay");
    cmd->add_option("--jobs", f.jobs, "examples run concurrently")->check(CLI::PositiveNumber);
    cmd->add_option("--execution", f.execution, "sequential | parallel");
    cmd->add_option("--judge", f.judge, "none | fixed | replay | live");
    cmd->add_option("--judge-score", f.judge_score, "score returned by the fixed judge");
    cmd->add_option("--judge-fixtures", f.judge_fixtures, "replay fixtures for --judge replay");
}

JudgeKind judge_kind_from_string(const std::string& k) {
    if (k == "none") return JudgeKind::None;
    if (k == "fixed") return JudgeKind::Fixed;
    if (k == "replay") return JudgeKind::Replay;
    if (k == "live") return JudgeKind::Live;
    throw Error(Errc::ConfigError, "unknown judge kind '" + k + "'");
}

ExperimentConfig resolve(const CommonFlags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (!f.strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : f.strategies) cfg.strategies.push_back(strategy_from_string(s));
    }
    if (f.rounds) cfg.episode.rounds = *f.rounds;
    if (f.budget) cfg.engine.budget = uniform_budget(*f.budget);
    if (f.limit) cfg.limit = *f.limit;
    if (f.seed) cfg.backend.seed = *f.seed;
    if (!f.backend.empty()) cfg.backend.kind = backend_kind_from_string(f.backend);
    if (!f.fixtures.empty()) cfg.backend.replay_path = f.fixtures;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (!f.execution.empty()) cfg.episode.execution = execution_from_string(f.execution);
    if (!f.judge.empty()) cfg.judge.kind = judge_kind_from_string(f.judge);
    if (f.judge_score) cfg.judge.fixed_score = *f.judge_score;
    if (!f.judge_fixtures.empty()) cfg.judge.replay_path = f.judge_fixtures;
    cfg.episode.validate();
    return cfg;
}

void print_summary(const ExperimentReport& report) {
    fmt::print("{:<14} {:>7} {:>6} {:>5} {:>12} {:>14} {:>8} {:>8}\n", "strategy", "budget", "rounds", "n",
               "runtime_s", "total_tokens", "f1", "em");
    for (const auto& a : report.aggregates)
        fmt::print("{:<14} {:>7} {:>6} {:>5} {:>12.3f} {:>14.1f} {:>8.3f} {:>8.3f}\n", a.strategy, a.budget,
                   a.rounds, a.num_examples, a.avg_runtime_s, a.total_tokens, a.f1, a.em);
    if (!report.errors.empty()) fmt::print(stderr, "{} episode(s) failed; see report.json\n", report.errors.size());
}

int run_sweep(const CommonFlags& f, std::vector<Variant> (*variants_of)(const ExperimentConfig&)) {
    const ExperimentConfig cfg = resolve(f);
    const auto dataset = ingest(f.dataset, dataset_format_from_string(f.format));
    const auto report = run_experiment(dataset, cfg, variants_of(cfg), std::filesystem::path(f.out));
    print_summary(report);
    return 0;
}

struct RouteFlags {
    std::string config;
    std::string memory;
    std::string role;
    std::string stage;
    Round round = 1;
    std::optional<TokenCount> budget;
    std::string strategy = "rcr";
};

int run_route(const RouteFlags& f) {
    const ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    std::ifstream in(f.memory, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot open memory dump '" + f.memory + "'");
    const MemoryStore store = MemoryStore::read_jsonl(in, f.round, cfg.engine.estimator);
    const Snapshot snap = store.snapshot(f.round);
    const std::string stage = f.stage.empty() ? cfg.episode.stage_for(f.round) : f.stage;

    RoutedContext ctx;
    switch (strategy_from_string(f.strategy)) {
        case Strategy::Rcr: {
            const TokenCount budget = f.budget ? *f.budget : allocate(f.role, cfg.engine.budget);
            ctx = route_greedy(snap, f.role, stage, f.round, budget, cfg.engine.scorer);
            break;
        }
        case Strategy::FullContext: ctx = route_full_context(snap, f.role, f.round); break;
        case Strategy::Static: ctx = route_static(snap, f.role, f.round, cfg.engine.static_routing); break;
    }

    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < ctx.items.size(); ++i) {
        nlohmann::json item = to_json(ctx.items[i]);
        if (i < ctx.scores.size()) item["score"] = ctx.scores[i];
        items.push_back(std::move(item));
    }
    std::cout << dump_fixed({{"role", ctx.agent_role},
                             {"stage", stage},
                             {"round", ctx.round},
                             {"budget", ctx.budget},
                             {"total_tokens", ctx.total_tokens},
                             {"items", std::move(items)}})
              << '\n';
    return 0;
}

struct JudgeFlags {
    std::string config;
    std::string answers;
    std::string judge;
    std::optional<int> score;
    std::string fixtures;
};

// answers file: JSON Lines of {"id", "question", "answer"}.
int run_judge(const JudgeFlags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (!f.judge.empty()) cfg.judge.kind = judge_kind_from_string(f.judge);
    if (f.score) cfg.judge.fixed_score = *f.score;
    if (!f.fixtures.empty()) cfg.judge.replay_path = f.fixtures;
    if (cfg.judge.kind == JudgeKind::None) throw Error(Errc::ConfigError, "judge: pick a judge with --judge");
    const auto judge = make_judge(cfg.judge, cfg.engine.estimator);

    std::ifstream in(f.answers, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot open answers '" + f.answers + "'");
    std::string line;
    std::size_t line_no = 0, scored = 0, failed = 0;
    double total = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::ParseError, fmt::format("line {}: {}", line_no, e.what()));
        }
        nlohmann::json out = {{"id", row.value("id", fmt::format("line{}", line_no))}};
        try {
            const auto s = judge_answer(*judge, row.at("question").get<std::string>(),
                                        row.at("answer").get<std::string>());
            out["score"] = s.score;
            out["justification"] = s.justification;
            total += s.score;
            ++scored;
        } catch (const std::exception& e) {
            out["error"] = e.what();
            ++failed;
        }
        std::cout << dump_fixed(out) << '\n';
    }
    fmt::print(stderr, "scored {} answer(s), {} failed, mean {:.6f}\n", scored, failed,
               scored ? total / static_cast<double>(scored) : 0.0);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Role-aware, token-budgeted context routing for multi-agent pipelines"};
    app.require_subcommand(1);

    CommonFlags run_flags, budget_flags, rounds_flags;
    auto* run = app.add_subcommand("run", "compare strategies over a dataset");
    add_common(run, run_flags);
    auto* ablate_budget = app.add_subcommand("ablate-budget", "sweep the per-agent budget");
    add_common(ablate_budget, budget_flags);
    auto* ablate_rounds = app.add_subcommand("ablate-rounds", "sweep the number of rounds");
    add_common(ablate_rounds, rounds_flags);

    RouteFlags route_flags;
    auto* route = app.add_subcommand("route", "route one agent over a memory dump");
    route->add_option("--config", route_flags.config)->check(CLI::ExistingFile);
    route->add_option("--memory", route_flags.memory, "memory JSONL dump")->required()->check(CLI::ExistingFile);
    route->add_option("--role", route_flags.role)->required();
    route->add_option("--stage", route_flags.stage, "defaults to the schedule entry for --round");
    route->add_option("--round", route_flags.round)->check(CLI::NonNegativeNumber);
    route->add_option("--budget", route_flags.budget)->check(CLI::NonNegativeNumber);
    route->add_option("--strategy", route_flags.strategy);

    JudgeFlags judge_flags;
    auto* judge = app.add_subcommand("judge", "score an answers file with the answer-quality judge");
    judge->add_option("--config", judge_flags.config)->check(CLI::ExistingFile);
    judge->add_option("--answers", judge_flags.answers, "JSONL of {id, question, answer}")
        ->required()
        ->check(CLI::ExistingFile);
    judge->add_option("--judge", judge_flags.judge, "fixed | replay | live");
    judge->add_option("--judge-score", judge_flags.score);
    judge->add_option("--fixtures", judge_flags.fixtures);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_sweep(run_flags, strategy_variants);
        if (*ablate_budget) return run_sweep(budget_flags, budget_variants);
        if (*ablate_rounds) return run_sweep(rounds_flags, rounds_variants);
        if (*route) return run_route(route_flags);
        if (*judge) return run_judge(judge_flags);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 0;
}
