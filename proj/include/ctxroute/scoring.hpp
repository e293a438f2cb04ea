#pragma once

#include "ctxroute/memory.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace ctxroute {

struct ScoreWeights {
    double role = 1.0;
    double stage = 1.0;
    double recency = 1.0;

    [[nodiscard]] ScoreWeights scaled(double a) const { return {role * a, stage * a, recency * a}; }
    [[nodiscard]] double sum() const { return role + stage + recency; }
};

struct ScorerConfig {
    ScoreWeights weights;
    double decay_lambda = 0.1;
    // Role name -> lowercased keywords.
    std::map<std::string, std::set<std::string>, std::less<>> role_keywords;
    // Stage name -> preferred item types. An entry matches a sub_kind
    // ("plan"), a kind ("task_knowledge") or a "kind/sub_kind" pair.
    std::map<std::string, std::set<std::string>, std::less<>> stage_types;

    /// Throws ConfigError on negative or non-finite weights / decay.
    void validate() const;
};

/// Keywords and stage preferences for the planner/searcher/recommender
/// pipeline and the extended roles.
ScorerConfig default_scorer_config();

/// True when `keyword` occurs in `text` case-insensitively and is bounded on
/// both sides by a non-alphanumeric character or the string edge.
bool contains_whole_word(std::string_view text, std::string_view keyword);

double role_relevance(const MemoryItem& item, std::string_view role, const ScorerConfig& cfg);
double stage_priority(const MemoryItem& item, std::string_view stage, const ScorerConfig& cfg);
/// exp(-lambda * (t - t_m)); throws NegativeAge when t < t_m.
double recency(const MemoryItem& item, Round current_round, const ScorerConfig& cfg);
double importance(const MemoryItem& item, std::string_view role, std::string_view stage, Round current_round,
                  const ScorerConfig& cfg);

// Scoring strategy used by the router. The heuristic scorer is the only
// shipped implementation; learned scorers can implement the same interface.
class Scorer {
public:
    virtual ~Scorer() = default;
    [[nodiscard]] virtual double score(const MemoryItem& item, std::string_view role, std::string_view stage,
                                       Round current_round) const = 0;
};

class HeuristicScorer final : public Scorer {
public:
    explicit HeuristicScorer(ScorerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    [[nodiscard]] double score(const MemoryItem& item, std::string_view role, std::string_view stage,
                               Round current_round) const override {
        return importance(item, role, stage, current_round, cfg_);
    }

    [[nodiscard]] const ScorerConfig& config() const noexcept { return cfg_; }

private:
    ScorerConfig cfg_;
};

}  // namespace ctxroute
