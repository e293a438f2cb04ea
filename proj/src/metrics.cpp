#include "ctxroute/metrics.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace ctxroute {

double total_latency_wall(double start_s, double end_s) {
    if (end_s < start_s)
        throw Error(Errc::NegativeInterval, fmt::format("end {} precedes start {}", end_s, start_s));
    return end_s - start_s;
}

double total_latency_wall(std::chrono::steady_clock::time_point start, std::chrono::steady_clock::time_point end) {
    if (end < start) throw Error(Errc::NegativeInterval, "end time precedes start time");
    return std::chrono::duration<double>(end - start).count();
}

double total_latency_parallel(std::span<const RoundRecord> records) {
    double total = 0.0;
    for (const auto& r : records) {
        if (r.per_agent.empty()) throw Error(Errc::EmptyRound, fmt::format("round {} has no agents", r.round));
        double slowest = 0.0;
        for (const auto& [_, turn] : r.per_agent) slowest = std::max(slowest, turn.latency_seconds);
        total += slowest;
    }
    return total;
}

double per_round_runtime(const RoundRecord& record) {
    double total = 0.0;
    for (const auto& [_, turn] : record.per_agent) total += turn.latency_seconds;
    return total;
}

double total_latency_serial(std::span<const RoundRecord> records) {
    double total = 0.0;
    for (const auto& r : records) total += per_round_runtime(r);
    return total;
}

TokenCount total_token_consumption(std::span<const RoundRecord> records) {
    TokenCount total = 0;
    for (const auto& r : records)
        for (const auto& [_, turn] : r.per_agent) total += turn.prompt_tokens + turn.completion_tokens;
    return total;
}

std::string_view to_string(LatencyModel m) noexcept { return m == LatencyModel::Parallel ? "parallel" : "serial"; }

LatencyModel latency_model_from_string(std::string_view name) {
    if (name == "parallel") return LatencyModel::Parallel;
    if (name == "serial") return LatencyModel::Serial;
    throw Error(Errc::ConfigError, "unknown latency model '" + std::string(name) + "'");
}

double total_latency(std::span<const RoundRecord> records, LatencyModel model) {
    return model == LatencyModel::Parallel ? total_latency_parallel(records) : total_latency_serial(records);
}

std::string build_judge_prompt(std::string_view query, std::string_view answer) {
    std::string out =
        "You are an expert judge. Your task is to evaluate how well the answer responds to the user's query.\n"
        "\n"
        "User Query: \n";
    out += query;
    out += "\n\nAnswer: \n";
    out += answer;
    out +=
        "\n\nPlease provide a JSON object with the following format:\n"
        R"({"score": (1 to 5), "justification": "a short explanation of the score"})";
    return out;
}

namespace {

// End of the balanced {...} starting at `open`, honouring JSON strings.
std::size_t matching_brace(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::string_view::npos;
}

}  // namespace

JudgeScore parse_judge_score(std::string_view raw) {
    std::optional<nlohmann::json> obj;
    for (auto open = raw.find('{'); open != std::string_view::npos && !obj; open = raw.find('{', open + 1)) {
        const auto close = matching_brace(raw, open);
        if (close == std::string_view::npos) continue;
        auto parsed = nlohmann::json::parse(raw.substr(open, close - open + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) obj = std::move(parsed);
    }
    if (!obj) throw Error(Errc::NoJsonFound, "judge output contains no JSON object");

    if (!obj->contains("score") || !(*obj)["score"].is_number())
        throw Error(Errc::MissingField, "judge JSON has no numeric 'score' field");
    const double value = (*obj)["score"].get<double>();
    if (!std::isfinite(value) || value != std::floor(value) || value < 1.0 || value > 5.0)
        throw Error(Errc::ScoreOutOfRange, fmt::format("score {} is not an integer in [1, 5]", value));

    JudgeScore out;
    out.score = static_cast<int>(value);
    if (obj->contains("justification")) {
        const auto& j = (*obj)["justification"];
        out.justification = j.is_string() ? j.get<std::string>() : j.dump();
    }
    return out;
}

JudgeScore judge_answer(AgentBackend& judge, std::string_view query, std::string_view answer) {
    return parse_judge_score(judge.invoke(build_judge_prompt(query, answer)).raw_text);
}

BackendResult FixedScoreJudge::invoke(const std::string& prompt) {
    BackendResult r;
    r.raw_text = nlohmann::json{{"score", score_}, {"justification", "fixed score"}}.dump();
    r.prompt_tokens = TokenEstimator{}.estimate(prompt);
    r.completion_tokens = TokenEstimator{}.estimate(r.raw_text);
    return r;
}

std::string normalize_answer(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc < 0x80 && std::ispunct(uc)) continue;
        cleaned.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
    }
    std::istringstream words(cleaned);
    std::string word;
    std::string out;
    while (words >> word) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

PrecisionRecallF1 qa_prf1(std::string_view prediction, std::string_view gold) {
    auto tokens = [](std::string_view s) {
        std::vector<std::string> out;
        std::istringstream in(normalize_answer(s));
        std::string w;
        while (in >> w) out.push_back(w);
        return out;
    };
    const auto pred = tokens(prediction);
    const auto ref = tokens(gold);
    if (pred.empty() && ref.empty()) return {1.0, 1.0, 1.0};
    if (pred.empty() || ref.empty()) return {};

    std::map<std::string, int> counts;
    for (const auto& w : ref) ++counts[w];
    int overlap = 0;
    for (const auto& w : pred) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return {};
    PrecisionRecallF1 out;
    out.precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    out.recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

bool exact_match(std::string_view prediction, std::string_view gold) {
    return normalize_answer(prediction) == normalize_answer(gold);
}

double composite_objective(double task_success, TokenCount total_tokens, double lambda_tradeoff) {
    return task_success - lambda_tradeoff * static_cast<double>(total_tokens);
}

}  // namespace ctxroute
