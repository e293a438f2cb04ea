#include "ctxroute/experiment.hpp"

#include "ctxroute/error.hpp"
#include "ctxroute/json_format.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace ctxroute {

namespace fs = std::filesystem;

std::vector<Variant> strategy_variants(const ExperimentConfig& cfg) {
    std::vector<Variant> out;
    for (Strategy s : cfg.strategies)
        out.push_back({s, cfg.engine.budget, cfg.episode.rounds, std::string(to_string(s))});
    return out;
}

std::vector<Variant> budget_variants(const ExperimentConfig& cfg) {
    std::vector<Variant> out;
    for (Strategy s : cfg.strategies)
        for (TokenCount b : cfg.budget_sweep)
            out.push_back({s, uniform_budget(b), cfg.episode.rounds, fmt::format("{}_b{}", to_string(s), b)});
    return out;
}

std::vector<Variant> rounds_variants(const ExperimentConfig& cfg) {
    std::vector<Variant> out;
    for (Strategy s : cfg.strategies)
        for (Round t : cfg.rounds_sweep)
            out.push_back({s, cfg.engine.budget, t, fmt::format("{}_t{}", to_string(s), t)});
    return out;
}

namespace {

std::string safe_file_name(std::string_view id) {
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() ? "example" : out;
}

ExampleRow score_episode(const DatasetExample& ex, const Variant& v, const EpisodeResult& result,
                         const ExperimentConfig& cfg, AgentBackend* judge) {
    ExampleRow row;
    row.example_id = ex.id;
    row.strategy = std::string(to_string(v.strategy));
    row.budget = v.budget.base_budget;
    row.rounds = v.rounds;
    row.runtime_s = total_latency(result.rounds, cfg.metrics.latency_model);
    row.total_tokens = total_token_consumption(result.rounds);
    row.answer = result.final_answer;
    row.gold = ex.gold_answer;
    row.em = exact_match(row.answer, row.gold) ? 1.0 : 0.0;
    const auto prf = qa_prf1(row.answer, row.gold);
    row.precision = prf.precision;
    row.recall = prf.recall;
    row.f1 = prf.f1;
    if (judge) row.answer_quality = judge_answer(*judge, ex.question, row.answer).score;
    const double success =
        cfg.metrics.success == SuccessMode::ExactMatch ? row.em : (row.f1 >= cfg.metrics.f1_threshold ? 1.0 : 0.0);
    row.composite_objective = composite_objective(success, row.total_tokens, cfg.metrics.lambda_tradeoff);

    for (const auto& r : result.rounds) {
        RoundSummary s;
        s.round = r.round;
        s.runtime_s = per_round_runtime(r);
        double quality = 0.0;
        for (const auto& [_, turn] : r.per_agent) {
            s.tokens += turn.prompt_tokens + turn.completion_tokens;
            s.routed_tokens += turn.context.total_tokens;
            quality += turn.context_quality;
        }
        s.context_quality = r.per_agent.empty() ? 0.0 : quality / static_cast<double>(r.per_agent.size());
        row.per_round.push_back(s);
    }
    return row;
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string csv_field(const std::optional<double>& v) { return v ? format_fixed6(*v) : std::string{}; }

}  // namespace

AggregateRow aggregate(const std::vector<ExampleRow>& rows) {
    AggregateRow agg;
    if (rows.empty()) return agg;
    agg.strategy = rows.front().strategy;
    agg.budget = rows.front().budget;
    agg.rounds = rows.front().rounds;
    agg.num_examples = rows.size();
    const auto n = static_cast<double>(rows.size());

    double quality_sum = 0.0;
    std::size_t quality_n = 0;
    std::map<Round, std::pair<std::size_t, std::array<double, 4>>> per_round;
    for (const auto& r : rows) {
        agg.avg_runtime_s += r.runtime_s;
        agg.total_tokens += static_cast<double>(r.total_tokens);
        agg.precision += r.precision;
        agg.recall += r.recall;
        agg.f1 += r.f1;
        agg.em += r.em;
        agg.composite_objective += r.composite_objective;
        if (r.answer_quality) {
            quality_sum += *r.answer_quality;
            ++quality_n;
        }
        for (const auto& s : r.per_round) {
            auto& [count, sums] = per_round[s.round];
            ++count;
            sums[0] += s.runtime_s;
            sums[1] += static_cast<double>(s.tokens);
            sums[2] += static_cast<double>(s.routed_tokens);
            sums[3] += s.context_quality;
        }
    }
    agg.avg_runtime_s /= n;
    agg.total_tokens /= n;
    agg.precision /= n;
    agg.recall /= n;
    agg.f1 /= n;
    agg.em /= n;
    agg.composite_objective /= n;
    if (quality_n > 0) agg.answer_quality = quality_sum / static_cast<double>(quality_n);
    for (const auto& [round, entry] : per_round) {
        const auto& [count, sums] = entry;
        const auto c = static_cast<double>(count);
        agg.per_round.push_back({round, sums[0] / c, sums[1] / c, sums[2] / c, sums[3] / c});
    }
    return agg;
}

ExperimentReport run_experiment(const std::vector<DatasetExample>& dataset, const ExperimentConfig& cfg,
                                const std::vector<Variant>& variants, const std::optional<fs::path>& out_dir) {
    const std::size_t n_examples = cfg.limit == 0 ? dataset.size() : std::min(cfg.limit, dataset.size());
    const BackendSet backends = make_backends(cfg.backend, cfg.engine.estimator);
    const std::shared_ptr<AgentBackend> judge = make_judge(cfg.judge, cfg.engine.estimator);

    struct Slot {
        std::optional<ExampleRow> row;
        std::string trace;
        std::optional<std::string> error;
    };
    const std::size_t n_tasks = variants.size() * n_examples;
    std::vector<Slot> slots(n_tasks);

    auto run_task = [&](std::size_t task) {
        const Variant& v = variants[task / n_examples];
        const DatasetExample& ex = dataset[task % n_examples];
        Slot& slot = slots[task];
        try {
            EpisodeConfig ep = cfg.episode;
            ep.strategy = v.strategy;
            ep.rounds = v.rounds;
            EngineConfig engine = cfg.engine;
            engine.budget = v.budget;
            const EpisodeResult result =
                run_episode(ex.question, ep, engine, backends, passages_to_memory(ex, engine.estimator));
            slot.trace = trace_jsonl(result);
            slot.row = score_episode(ex, v, result, cfg, judge.get());
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.jobs)), 1, std::max<std::size_t>(1, n_tasks));
    if (workers == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_tasks; i = next++) run_task(i);
            });
    }

    ExperimentReport report;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        std::vector<ExampleRow> rows;
        for (std::size_t ei = 0; ei < n_examples; ++ei) {
            Slot& slot = slots[vi * n_examples + ei];
            if (slot.row) {
                rows.push_back(*slot.row);
                report.examples.push_back(std::move(*slot.row));
            } else {
                report.errors.push_back({dataset[ei].id, std::string(to_string(variants[vi].strategy)),
                                         slot.error.value_or("unknown error")});
            }
        }
        AggregateRow agg = rows.empty() ? AggregateRow{} : aggregate(rows);
        agg.strategy = std::string(to_string(variants[vi].strategy));
        agg.budget = variants[vi].budget.base_budget;
        agg.rounds = variants[vi].rounds;
        report.aggregates.push_back(std::move(agg));
    }

    if (out_dir) {
        write_report(report, *out_dir);
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
            const fs::path dir = *out_dir / "traces" / variants[vi].label;
            fs::create_directories(dir);
            for (std::size_t ei = 0; ei < n_examples; ++ei) {
                const Slot& slot = slots[vi * n_examples + ei];
                if (slot.error) continue;
                std::ofstream(dir / (safe_file_name(dataset[ei].id) + ".jsonl"), std::ios::binary) << slot.trace;
            }
        }
    }
    return report;
}

nlohmann::json to_json(const ExampleRow& row) {
    nlohmann::json per_round = nlohmann::json::array();
    for (const auto& s : row.per_round)
        per_round.push_back({{"round", s.round},
                             {"runtime_s", s.runtime_s},
                             {"tokens", s.tokens},
                             {"routed_tokens", s.routed_tokens},
                             {"context_quality", s.context_quality}});
    return {{"example_id", row.example_id},
            {"strategy", row.strategy},
            {"budget", row.budget},
            {"rounds", row.rounds},
            {"runtime_s", row.runtime_s},
            {"total_tokens", row.total_tokens},
            {"answer", row.answer},
            {"gold", row.gold},
            {"em", row.em},
            {"precision", row.precision},
            {"recall", row.recall},
            {"f1", row.f1},
            {"answer_quality", optional_number(row.answer_quality)},
            {"composite_objective", row.composite_objective},
            {"per_round", std::move(per_round)}};
}

nlohmann::json to_json(const AggregateRow& row) {
    nlohmann::json per_round = nlohmann::json::array();
    for (const auto& s : row.per_round)
        per_round.push_back({{"round", s.round},
                             {"avg_runtime_s", s.avg_runtime_s},
                             {"avg_tokens", s.avg_tokens},
                             {"avg_routed_tokens", s.avg_routed_tokens},
                             {"avg_context_quality", s.avg_context_quality}});
    return {{"strategy", row.strategy},
            {"budget", row.budget},
            {"rounds", row.rounds},
            {"num_examples", row.num_examples},
            {"avg_runtime_s", row.avg_runtime_s},
            {"total_tokens", row.total_tokens},
            {"answer_quality", optional_number(row.answer_quality)},
            {"precision", row.precision},
            {"recall", row.recall},
            {"f1", row.f1},
            {"em", row.em},
            {"composite_objective", row.composite_objective},
            {"per_round", std::move(per_round)}};
}

nlohmann::json to_json(const ExperimentReport& report) {
    nlohmann::json aggregates = nlohmann::json::array();
    for (const auto& a : report.aggregates) aggregates.push_back(to_json(a));
    nlohmann::json examples = nlohmann::json::array();
    for (const auto& e : report.examples) examples.push_back(to_json(e));
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : report.errors)
        errors.push_back({{"example_id", e.example_id}, {"strategy", e.strategy}, {"error", e.message}});
    return {{"aggregates", std::move(aggregates)}, {"examples", std::move(examples)}, {"errors", std::move(errors)}};
}

std::string report_csv(const ExperimentReport& report) {
    std::string out =
        "strategy,budget,rounds,num_examples,avg_runtime_s,total_tokens,answer_quality,precision,recall,f1,em,"
        "composite_objective\n";
    for (const auto& a : report.aggregates) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", a.strategy, a.budget, a.rounds, a.num_examples,
                           format_fixed6(a.avg_runtime_s), format_fixed6(a.total_tokens), csv_field(a.answer_quality),
                           format_fixed6(a.precision), format_fixed6(a.recall), format_fixed6(a.f1),
                           format_fixed6(a.em), format_fixed6(a.composite_objective));
    }
    return out;
}

void write_report(const ExperimentReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "report.json", std::ios::binary) << dump_fixed(to_json(report)) << '\n';
    std::ofstream(out_dir / "report.csv", std::ios::binary) << report_csv(report);
}

}  // namespace ctxroute
