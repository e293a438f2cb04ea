#pragma once

#include "ctxroute/budget.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ctxroute {

using Round = std::int64_t;

enum class MemoryKind { InteractionHistory, TaskKnowledge, StructuredState };

std::string_view to_string(MemoryKind kind) noexcept;
MemoryKind memory_kind_from_string(std::string_view name);

struct MemoryItem {
    std::string id;
    std::string text;
    std::string role_tag;
    std::string stage_tag;
    MemoryKind kind = MemoryKind::InteractionHistory;
    std::string sub_kind;
    Round round_created = 0;
    TokenCount token_length = 0;
    std::optional<std::string> entity_key;

    friend bool operator==(const MemoryItem&, const MemoryItem&) = default;
};

/// Builds an item with token_length computed by the estimator.
MemoryItem make_item(std::string id, std::string text, std::string role_tag, std::string stage_tag,
                     MemoryKind kind, std::string sub_kind, Round round_created,
                     const TokenEstimator& est, std::optional<std::string> entity_key = std::nullopt);

/// Lowercase, collapse whitespace runs, trim, strip punctuation at both ends.
std::string normalize_text(std::string_view text);

// Canonical record: one JSON object per item, sorted keys, compact.
nlohmann::json to_json(const MemoryItem& item);
MemoryItem item_from_json(const nlohmann::json& j);
std::string to_record_line(const MemoryItem& item);

struct FactRecord {
    std::string text;
    std::optional<std::string> entity_key;

    friend bool operator==(const FactRecord&, const FactRecord&) = default;
};

// An action or tool outcome. `sub_kind` distinguishes tool results from
// plans; both land in structured state.
struct ActionRecord {
    std::string text;
    std::optional<std::string> entity_key;
    std::string sub_kind = "tool_result";
    std::optional<std::string> payload;

    friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct StructuredOutput {
    std::string agent_role;
    Round round = 0;
    std::string stage;
    std::vector<FactRecord> facts;
    std::vector<ActionRecord> actions;
    std::vector<std::string> reasoning;
    std::string raw_text;

    [[nodiscard]] bool has_entries() const noexcept {
        return !facts.empty() || !actions.empty() || !reasoning.empty();
    }

    friend bool operator==(const StructuredOutput&, const StructuredOutput&) = default;
};

struct UpdatePolicy {
    bool keep_reasoning = true;
    // An output with no tagged entries but non-empty raw text is stored as a
    // single interaction-history "message" item.
    bool keep_unstructured_output = true;
    // Earlier entries win same-round entity_key conflicts.
    std::vector<std::string> role_priority = {"planner", "searcher", "recommender"};
};

using Snapshot = std::vector<MemoryItem>;

class MemoryStore {
public:
    MemoryStore() = default;
    explicit MemoryStore(Round current_round, TokenEstimator estimator = {})
        : current_round_(current_round), estimator_(std::move(estimator)) {}

    /// Throws DuplicateId or RoundFromFuture. token_length is recomputed.
    void append(MemoryItem item);

    /// Items with round_created <= at_round, insertion order. The returned
    /// vector is an independent copy.
    [[nodiscard]] Snapshot snapshot(Round at_round) const;
    [[nodiscard]] Snapshot snapshot() const { return items_; }

    [[nodiscard]] const std::vector<MemoryItem>& items() const noexcept { return items_; }
    [[nodiscard]] Round current_round() const noexcept { return current_round_; }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] bool contains(std::string_view id) const;
    [[nodiscard]] const TokenEstimator& estimator() const noexcept { return estimator_; }
    [[nodiscard]] TokenCount total_tokens() const noexcept;

    // JSON-Lines persistence in the canonical record format.
    void write_jsonl(std::ostream& os) const;
    [[nodiscard]] std::string to_jsonl() const;
    static MemoryStore read_jsonl(std::istream& is, Round current_round, TokenEstimator est = {});

    void write_yaml(std::ostream& os) const;

    friend bool operator==(const MemoryStore& a, const MemoryStore& b) {
        return a.current_round_ == b.current_round_ && a.items_ == b.items_;
    }

private:
    friend void apply_memory_update(MemoryStore&, const std::vector<StructuredOutput>&, const UpdatePolicy&);

    std::vector<MemoryItem> items_;
    std::unordered_set<std::string> ids_;
    Round current_round_ = 0;
    TokenEstimator estimator_;
};

/// Integrates one round of agent outputs: extraction, novelty filtering,
/// structuring and entity_key conflict resolution. Advances the round by 1.
/// Throws RoundMismatch when an output is not stamped with the current round.
MemoryStore memory_update(MemoryStore store, const std::vector<StructuredOutput>& outputs,
                          const UpdatePolicy& policy = {});

/// In-place variant of memory_update.
void apply_memory_update(MemoryStore& store, const std::vector<StructuredOutput>& outputs,
                         const UpdatePolicy& policy = {});

}  // namespace ctxroute
