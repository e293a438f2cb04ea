#include "ctxroute/scoring.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>

namespace ctxroute {

namespace {

char lower(char c) {
    const auto uc = static_cast<unsigned char>(c);
    return uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c;
}

bool is_word_char(char c) {
    const auto uc = static_cast<unsigned char>(c);
    return uc >= 0x80 || std::isalnum(uc) || c == '_';
}

}  // namespace

void ScorerConfig::validate() const {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0)
            throw Error(Errc::ConfigError, fmt::format("{} must be finite and >= 0 (got {})", name, v));
    };
    check(weights.role, "weights.role");
    check(weights.stage, "weights.stage");
    check(weights.recency, "weights.recency");
    check(decay_lambda, "decay_lambda");
}

ScorerConfig default_scorer_config() {
    ScorerConfig cfg;
    cfg.role_keywords = {
        {"planner", {"plan", "subgoal", "goal", "decompose", "question", "query", "step"}},
        {"searcher", {"search", "find", "retrieve", "document", "passage", "evidence", "entity"}},
        {"recommender", {"answer", "recommend", "result", "final", "conclusion", "summary"}},
        {"retriever", {"retrieve", "document", "passage", "source", "evidence"}},
        {"executor", {"answer", "result", "intermediate", "integrate"}},
        {"verifier", {"verify", "check", "consistent", "evidence", "confirm"}},
        {"critic", {"error", "issue", "revise", "critique", "wrong"}},
        {"rewriter", {"answer", "final", "clarity", "rewrite"}},
        {"refiner", {"feedback", "improve", "refine", "partial"}},
    };
    cfg.stage_types = {
        {"planning", {"query", "plan"}},
        {"search", {"plan", "tool_result", "task_knowledge"}},
        {"recommendation", {"fact", "tool_result"}},
    };
    return cfg;
}

bool contains_whole_word(std::string_view text, std::string_view keyword) {
    if (keyword.empty() || keyword.size() > text.size()) return false;
    for (std::size_t pos = 0; pos + keyword.size() <= text.size(); ++pos) {
        std::size_t k = 0;
        while (k < keyword.size() && lower(text[pos + k]) == lower(keyword[k])) ++k;
        if (k != keyword.size()) continue;
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + keyword.size();
        const bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

double role_relevance(const MemoryItem& item, std::string_view role, const ScorerConfig& cfg) {
    const auto it = cfg.role_keywords.find(role);
    if (it == cfg.role_keywords.end()) return 0.0;
    for (const auto& kw : it->second)
        if (contains_whole_word(item.text, kw)) return 1.0;
    return 0.0;
}

double stage_priority(const MemoryItem& item, std::string_view stage, const ScorerConfig& cfg) {
    const auto it = cfg.stage_types.find(stage);
    if (it == cfg.stage_types.end()) return 0.0;
    const std::string kind(to_string(item.kind));
    const auto& types = it->second;
    if (types.contains(item.sub_kind) || types.contains(kind) || types.contains(kind + "/" + item.sub_kind))
        return 1.0;
    return 0.0;
}

double recency(const MemoryItem& item, Round current_round, const ScorerConfig& cfg) {
    if (current_round < item.round_created)
        throw Error(Errc::NegativeAge, fmt::format("item '{}' created at round {} is newer than round {}", item.id,
                                                   item.round_created, current_round));
    const auto age = static_cast<double>(current_round - item.round_created);
    return std::exp(-cfg.decay_lambda * age);
}

double importance(const MemoryItem& item, std::string_view role, std::string_view stage, Round current_round,
                  const ScorerConfig& cfg) {
    const double r = recency(item, current_round, cfg);
    return cfg.weights.role * role_relevance(item, role, cfg) + cfg.weights.stage * stage_priority(item, stage, cfg) +
           cfg.weights.recency * r;
}

}  // namespace ctxroute
