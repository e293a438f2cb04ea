#pragma once

#include "ctxroute/error.hpp"
#include "ctxroute/memory.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/orchestrator.hpp"
#include "ctxroute/scoring.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ctxroute::testing {

inline std::string data_path(const std::string& rel) { return std::string(CTXROUTE_TEST_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline StructuredOutput output_from_json(const nlohmann::json& j) {
    StructuredOutput o;
    o.agent_role = j.at("agent_role").get<std::string>();
    o.round = j.at("round").get<Round>();
    o.stage = j.value("stage", std::string{});
    o.raw_text = j.value("raw_text", std::string{});
    for (const auto& f : j.value("facts", nlohmann::json::array())) {
        FactRecord r{f.at("text").get<std::string>(), std::nullopt};
        if (f.contains("entity_key")) r.entity_key = f["entity_key"].get<std::string>();
        o.facts.push_back(std::move(r));
    }
    for (const auto& a : j.value("actions", nlohmann::json::array())) {
        ActionRecord r;
        r.text = a.at("text").get<std::string>();
        if (a.contains("entity_key")) r.entity_key = a["entity_key"].get<std::string>();
        if (a.contains("sub_kind")) r.sub_kind = a["sub_kind"].get<std::string>();
        if (a.contains("payload")) r.payload = a["payload"].get<std::string>();
        o.actions.push_back(std::move(r));
    }
    for (const auto& r : j.value("reasoning", nlohmann::json::array())) o.reasoning.push_back(r.get<std::string>());
    return o;
}

struct MemoryScenario {
    MemoryStore store;
    std::vector<StructuredOutput> outputs;
};

// Items keep their recorded token_length; the whitespace estimator is used
// for anything the update creates.
inline MemoryScenario load_memory_scenario(const std::string& name) {
    const auto doc = nlohmann::json::parse(read_file(data_path("data/memory/" + name + ".json")));
    std::ostringstream lines;
    for (const auto& item : doc.at("store")) lines << item.dump() << '\n';
    std::istringstream in(lines.str());
    MemoryScenario s{MemoryStore::read_jsonl(in, doc.at("current_round").get<Round>(),
                                             TokenEstimator(EstimatorMode::Whitespace)),
                     {}};
    for (const auto& o : doc.at("outputs")) s.outputs.push_back(output_from_json(o));
    return s;
}

// Random snapshot with distinct ids, rounds in [0, max_round], tokens in
// [min_tokens, max_tokens].
inline std::vector<MemoryItem> random_items(std::mt19937_64& rng, std::size_t n, TokenCount min_tokens,
                                            TokenCount max_tokens, Round max_round = 5) {
    static const char* roles[] = {"planner", "searcher", "recommender", "user", "tool"};
    static const MemoryKind kinds[] = {MemoryKind::InteractionHistory, MemoryKind::TaskKnowledge,
                                       MemoryKind::StructuredState};
    static const char* sub_kinds[] = {"query", "plan", "fact", "tool_result", "reasoning", "passage"};
    static const char* words[] = {"plan", "search", "query", "evidence", "answer", "passage", "retrieve",
                                  "recommend", "step", "result", "bridge", "entity", "final"};
    std::uniform_int_distribution<TokenCount> tok(min_tokens, max_tokens);
    std::uniform_int_distribution<Round> rnd(0, max_round);
    std::uniform_int_distribution<int> pick(0, 1 << 20);
    std::vector<MemoryItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        MemoryItem m;
        m.id = "m" + std::to_string(i);
        std::string text;
        for (int w = pick(rng) % 4 + 1; w > 0; --w) text += std::string(words[pick(rng) % 13]) + " ";
        m.text = text;
        m.role_tag = roles[pick(rng) % 5];
        m.stage_tag = "input";
        m.kind = kinds[pick(rng) % 3];
        m.sub_kind = sub_kinds[pick(rng) % 6];
        m.round_created = rnd(rng);
        m.token_length = tok(rng);
        items.push_back(std::move(m));
    }
    return items;
}

// Scores looked up by item id (missing ids score 0); role, stage and round
// are ignored.
class TableScorer final : public Scorer {
public:
    explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
    [[nodiscard]] double score(const MemoryItem& item, std::string_view, std::string_view, Round) const override {
        const auto it = table_.find(item.id);
        return it == table_.end() ? 0.0 : it->second;
    }

private:
    std::map<std::string, double> table_;
};

// A round whose agents ("a0", "a1", ...) have the given latencies.
inline RoundRecord latency_round(Round round, const std::vector<double>& latencies) {
    RoundRecord r;
    r.round = round;
    for (std::size_t i = 0; i < latencies.size(); ++i) {
        const std::string role = "a" + std::to_string(i);
        r.roles.push_back(role);
        r.per_agent[role].latency_seconds = latencies[i];
    }
    return r;
}

// Runs every case of the judge corpus; returns one message per mismatch.
inline std::vector<std::string> check_judge_corpus() {
    std::vector<std::string> failures;
    std::istringstream lines(read_file(data_path("data/judge_corpus.jsonl")));
    std::size_t cases = 0;
    for (std::string line; std::getline(lines, line);) {
        if (line.empty()) continue;
        ++cases;
        const auto c = nlohmann::json::parse(line);
        const std::string name = c.at("name");
        const auto& expect = c.at("expect");
        try {
            const auto got = parse_judge_score(c.at("raw").get<std::string>());
            if (expect.contains("error"))
                failures.push_back(name + ": expected " + expect["error"].get<std::string>() + ", got a score");
            else if (got.score != expect["score"].get<int>() ||
                     got.justification != expect["justification"].get<std::string>())
                failures.push_back(name + ": wrong score or justification");
        } catch (const Error& e) {
            if (!expect.contains("error") || to_string(e.code()) != expect["error"].get<std::string>())
                failures.push_back(name + ": unexpected " + std::string(to_string(e.code())));
        }
    }
    if (cases != 12) failures.push_back("corpus has " + std::to_string(cases) + " cases, expected 12");
    return failures;
}

inline bool judge_prompt_matches_golden() {
    return build_judge_prompt("Which city hosts the Morrow Museum?", "The museum is in Calder.") ==
           read_file(data_path("golden/judge_prompt.txt"));
}

}  // namespace ctxroute::testing
