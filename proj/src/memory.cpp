#include "ctxroute/memory.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ctxroute {

std::string_view to_string(MemoryKind kind) noexcept {
    switch (kind) {
        case MemoryKind::InteractionHistory: return "interaction_history";
        case MemoryKind::TaskKnowledge:      return "task_knowledge";
        case MemoryKind::StructuredState:    return "structured_state";
    }
    return "unknown";
}

MemoryKind memory_kind_from_string(std::string_view name) {
    if (name == "interaction_history") return MemoryKind::InteractionHistory;
    if (name == "task_knowledge") return MemoryKind::TaskKnowledge;
    if (name == "structured_state") return MemoryKind::StructuredState;
    throw Error(Errc::ParseError, "unknown memory kind '" + std::string(name) + "'");
}

MemoryItem make_item(std::string id, std::string text, std::string role_tag, std::string stage_tag,
                     MemoryKind kind, std::string sub_kind, Round round_created,
                     const TokenEstimator& est, std::optional<std::string> entity_key) {
    MemoryItem item;
    item.id = std::move(id);
    item.token_length = est.estimate(text);
    item.text = std::move(text);
    item.role_tag = std::move(role_tag);
    item.stage_tag = std::move(stage_tag);
    item.kind = kind;
    item.sub_kind = std::move(sub_kind);
    item.round_created = round_created;
    item.entity_key = std::move(entity_key);
    return item;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
    }
    auto is_strip = [](char c) {
        const auto uc = static_cast<unsigned char>(c);
        return uc < 0x80 && (std::ispunct(uc) || std::isspace(uc));
    };
    const auto first = std::find_if_not(out.begin(), out.end(), is_strip);
    const auto last = std::find_if_not(out.rbegin(), std::make_reverse_iterator(first), is_strip).base();
    return {first, last};
}

nlohmann::json to_json(const MemoryItem& item) {
    nlohmann::json j;
    j["id"] = item.id;
    j["text"] = item.text;
    j["role_tag"] = item.role_tag;
    j["stage_tag"] = item.stage_tag;
    j["kind"] = std::string(to_string(item.kind));
    j["sub_kind"] = item.sub_kind;
    j["round_created"] = item.round_created;
    j["token_length"] = item.token_length;
    j["entity_key"] = item.entity_key ? nlohmann::json(*item.entity_key) : nlohmann::json(nullptr);
    return j;
}

MemoryItem item_from_json(const nlohmann::json& j) {
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw Error(Errc::ParseError, fmt::format("memory record missing field '{}'", name));
        return j.at(name);
    };
    try {
        MemoryItem item;
        item.id = field("id").get<std::string>();
        item.text = field("text").get<std::string>();
        item.role_tag = field("role_tag").get<std::string>();
        item.stage_tag = field("stage_tag").get<std::string>();
        item.kind = memory_kind_from_string(field("kind").get<std::string>());
        item.sub_kind = field("sub_kind").get<std::string>();
        item.round_created = field("round_created").get<Round>();
        item.token_length = field("token_length").get<TokenCount>();
        if (j.contains("entity_key") && !j.at("entity_key").is_null())
            item.entity_key = j.at("entity_key").get<std::string>();
        return item;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed memory record: ") + e.what());
    }
}

std::string to_record_line(const MemoryItem& item) { return to_json(item).dump(); }

void MemoryStore::append(MemoryItem item) {
    if (ids_.contains(item.id)) throw Error(Errc::DuplicateId, "id '" + item.id + "' already in store");
    if (item.round_created > current_round_)
        throw Error(Errc::RoundFromFuture,
                    fmt::format("item '{}' created at round {} but store is at round {}", item.id,
                                item.round_created, current_round_));
    if (!items_.empty() && item.round_created < items_.back().round_created)
        throw Error(Errc::RoundFromFuture,
                    fmt::format("item '{}' at round {} would break round ordering (last item at round {})",
                                item.id, item.round_created, items_.back().round_created));
    item.token_length = estimator_.estimate(item.text);
    ids_.insert(item.id);
    items_.push_back(std::move(item));
}

Snapshot MemoryStore::snapshot(Round at_round) const {
    if (at_round < 0 || at_round > current_round_)
        throw Error(Errc::RoundOutOfRange,
                    fmt::format("snapshot round {} outside [0, {}]", at_round, current_round_));
    Snapshot out;
    std::copy_if(items_.begin(), items_.end(), std::back_inserter(out),
                 [&](const MemoryItem& m) { return m.round_created <= at_round; });
    return out;
}

bool MemoryStore::contains(std::string_view id) const { return ids_.contains(std::string(id)); }

TokenCount MemoryStore::total_tokens() const noexcept {
    TokenCount total = 0;
    for (const auto& m : items_) total += m.token_length;
    return total;
}

void MemoryStore::write_jsonl(std::ostream& os) const {
    for (const auto& item : items_) os << to_record_line(item) << '\n';
}

std::string MemoryStore::to_jsonl() const {
    std::ostringstream os;
    write_jsonl(os);
    return os.str();
}

MemoryStore MemoryStore::read_jsonl(std::istream& is, Round current_round, TokenEstimator est) {
    MemoryStore store(current_round, std::move(est));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::ParseError, fmt::format("line {}: {}", line_no, e.what()));
        }
        // Stored lengths are kept verbatim so that dumps from other
        // estimators round-trip.
        MemoryItem item = item_from_json(j);
        const TokenCount stored = item.token_length;
        store.append(std::move(item));
        store.items_.back().token_length = stored;
    }
    return store;
}

void MemoryStore::write_yaml(std::ostream& os) const {
    YAML::Emitter out;
    out << YAML::BeginSeq;
    for (const auto& m : items_) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << m.id;
        out << YAML::Key << "text" << YAML::Value << m.text;
        out << YAML::Key << "role_tag" << YAML::Value << m.role_tag;
        out << YAML::Key << "stage_tag" << YAML::Value << m.stage_tag;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(m.kind));
        out << YAML::Key << "sub_kind" << YAML::Value << m.sub_kind;
        out << YAML::Key << "round_created" << YAML::Value << m.round_created;
        out << YAML::Key << "token_length" << YAML::Value << m.token_length;
        out << YAML::Key << "entity_key" << YAML::Value;
        if (m.entity_key) out << *m.entity_key; else out << YAML::Null;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    os << out.c_str() << '\n';
}

namespace {

struct Candidate {
    std::string text;
    std::string role;
    std::string stage;
    MemoryKind kind;
    std::string sub_kind;
    std::optional<std::string> entity_key;
    bool is_reasoning = false;
};

std::vector<Candidate> extract_candidates(const std::vector<StructuredOutput>& outputs,
                                          const UpdatePolicy& policy) {
    std::vector<Candidate> out;
    for (const auto& o : outputs) {
        for (const auto& f : o.facts)
            out.push_back({f.text, o.agent_role, o.stage, MemoryKind::TaskKnowledge, "fact", f.entity_key});
        for (const auto& a : o.actions) {
            std::string text = a.payload ? a.text + "\n" + *a.payload : a.text;
            out.push_back({std::move(text), o.agent_role, o.stage, MemoryKind::StructuredState,
                           a.sub_kind.empty() ? "tool_result" : a.sub_kind, a.entity_key});
        }
        for (const auto& r : o.reasoning)
            out.push_back({r, o.agent_role, o.stage, MemoryKind::InteractionHistory, "reasoning", std::nullopt, true});
        if (!o.has_entries() && policy.keep_unstructured_output && !normalize_text(o.raw_text).empty())
            out.push_back({o.raw_text, o.agent_role, o.stage, MemoryKind::InteractionHistory, "message", std::nullopt});
    }
    return out;
}

std::size_t role_rank(const UpdatePolicy& policy, std::string_view role) {
    const auto it = std::find(policy.role_priority.begin(), policy.role_priority.end(), role);
    return static_cast<std::size_t>(it - policy.role_priority.begin());
}

}  // namespace

void apply_memory_update(MemoryStore& store, const std::vector<StructuredOutput>& outputs,
                         const UpdatePolicy& policy) {
    const Round t = store.current_round_;
    for (const auto& o : outputs)
        if (o.round != t)
            throw Error(Errc::RoundMismatch,
                        fmt::format("output from '{}' stamped round {} but store is at round {}",
                                    o.agent_role, o.round, t));

    // Extraction, then novelty filtering against the store and against
    // earlier candidates of this round.
    std::vector<Candidate> candidates = extract_candidates(outputs, policy);
    std::unordered_set<std::string> seen;
    for (const auto& m : store.items_) seen.insert(normalize_text(m.text));

    std::vector<Candidate> survivors;
    for (auto& c : candidates) {
        if (c.is_reasoning && !policy.keep_reasoning) continue;
        std::string norm = normalize_text(c.text);
        if (norm.empty() || !seen.insert(std::move(norm)).second) continue;
        survivors.push_back(std::move(c));
    }

    // Same-round conflicts: highest-priority role wins, later entry breaks ties.
    std::map<std::string, std::size_t> key_winner;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        const auto& key = survivors[i].entity_key;
        if (!key) continue;
        auto [it, inserted] = key_winner.emplace(*key, i);
        if (!inserted && role_rank(policy, survivors[i].role) <= role_rank(policy, survivors[it->second].role))
            it->second = i;
    }

    // Structuring into records.
    std::vector<MemoryItem> fresh;
    std::size_t seq = 0;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        auto& c = survivors[i];
        if (c.entity_key && key_winner.at(*c.entity_key) != i) continue;
        std::string id = fmt::format("r{}-{}-{}", t, c.role, seq++);
        for (int bump = 1; store.ids_.contains(id); ++bump) id = fmt::format("r{}-{}-{}~{}", t, c.role, seq - 1, bump);
        fresh.push_back(make_item(std::move(id), std::move(c.text), std::move(c.role), std::move(c.stage), c.kind,
                                  std::move(c.sub_kind), t, store.estimator_, std::move(c.entity_key)));
    }

    // Replacement of older versions of each key.
    if (!key_winner.empty()) {
        std::erase_if(store.items_, [&](const MemoryItem& m) {
            if (!m.entity_key || !key_winner.contains(*m.entity_key)) return false;
            store.ids_.erase(m.id);
            return true;
        });
    }

    for (auto& item : fresh) {
        store.ids_.insert(item.id);
        store.items_.push_back(std::move(item));
    }
    ++store.current_round_;
}

MemoryStore memory_update(MemoryStore store, const std::vector<StructuredOutput>& outputs,
                          const UpdatePolicy& policy) {
    apply_memory_update(store, outputs, policy);
    return store;
}

}  // namespace ctxroute
