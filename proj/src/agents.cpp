#include "ctxroute/agents.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <fstream>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>

namespace ctxroute {

namespace {

constexpr std::string_view kOutputHint =
    "Report your results as fenced blocks, one entry per block. Start each block with "
    "'fact:', 'plan:', 'action:' or 'reasoning:'. When an entry revises something already "
    "known, write 'key=<entity>' before the colon, e.g. 'fact key=capital:france: Paris'.";

RoleProfile make_profile(std::string name, std::string description, std::string charter, TokenCount offset) {
    RoleProfile p;
    p.name = std::move(name);
    p.description = std::move(description);
    p.prompt_template = "You are the " + charter +
                        "\n\nTask: {task}\nCurrent stage: {stage}\n\nShared memory routed to you:\n{context}";
    p.budget_offset = offset;
    p.output_schema_hint = std::string(kOutputHint);
    return p;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

void validate_template(std::string_view prompt_template) {
    const auto contexts = count_occurrences(prompt_template, "{context}");
    if (contexts != 1)
        throw Error(Errc::TemplateMismatch,
                    fmt::format("template must contain {{context}} exactly once (found {})", contexts));
    if (count_occurrences(prompt_template, "{task}") == 0)
        throw Error(Errc::TemplateMismatch, "template is missing the {task} placeholder");
}

RoleRegistry RoleRegistry::builtin() {
    RoleRegistry reg;
    reg.add(make_profile("planner", "Decomposes the query into sub-goals and search intents.",
                         "Planner of a multi-agent question answering team. Decompose the task into sub-goals "
                         "and concrete search intents, and revise the plan when new evidence arrives.",
                         476));
    reg.add(make_profile("searcher", "Turns the latest plan into retrieval queries and reports evidence.",
                         "Searcher of a multi-agent question answering team. Use the most recent plan as the "
                         "query, find the supporting passages and report the evidence you found.",
                         -24));
    reg.add(make_profile("recommender", "Aggregates plan and evidence into the final answer.",
                         "Recommender of a multi-agent question answering team. Combine the plan and the "
                         "retrieved evidence and state the final answer as the first fact.",
                         -224));
    reg.add(make_profile("retriever", "Fetches and verifies external knowledge.",
                         "Retriever. Fetch documents relevant to the open sub-goals and verify them.", 0));
    reg.add(make_profile("executor", "Integrates retrieved knowledge into intermediate answers.",
                         "Executor. Integrate the retrieved knowledge into an intermediate answer.", 0));
    reg.add(make_profile("verifier", "Checks factual consistency and reasoning errors.",
                         "Verifier. Cross-check the retrieved facts and the inference chain for consistency.", 0));
    reg.add(make_profile("critic", "Reviews intermediate steps and suggests revisions.",
                         "Critic. Review the intermediate steps and point out what should be revised.", 0));
    reg.add(make_profile("rewriter", "Paraphrases outputs for clarity and style.",
                         "Rewriter. Rewrite the current answer for clarity and style without changing it.", 0));
    reg.add(make_profile("refiner", "Improves partial solutions from feedback.",
                         "Refiner. Improve the partial solution using the feedback and tool outputs.", 0));
    return reg;
}

void RoleRegistry::add(RoleProfile profile) {
    validate_template(profile.prompt_template);
    auto name = profile.name;
    profiles_.insert_or_assign(std::move(name), std::move(profile));
}

const RoleProfile& RoleRegistry::get(std::string_view name) const {
    const auto it = profiles_.find(name);
    if (it == profiles_.end()) throw Error(Errc::ConfigError, "unknown role '" + std::string(name) + "'");
    return it->second;
}

bool RoleRegistry::contains(std::string_view name) const { return profiles_.find(name) != profiles_.end(); }

std::vector<std::string> RoleRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : profiles_) out.push_back(name);
    return out;
}

std::map<std::string, TokenCount, std::less<>> RoleRegistry::budget_offsets() const {
    std::map<std::string, TokenCount, std::less<>> out;
    for (const auto& [name, p] : profiles_) out.emplace(name, p.budget_offset);
    return out;
}

std::string render_context(const RoutedContext& context) {
    if (context.items.empty()) return "(no context)";
    std::string out;
    for (std::size_t k = 0; k < context.items.size(); ++k) {
        const auto& m = context.items[k];
        if (k > 0) out += '\n';
        out += fmt::format("[{}] ({}/{}@{}) {}", k + 1, m.role_tag, to_string(m.kind), m.round_created, m.text);
    }
    return out;
}

std::string build_prompt(const RoleProfile& profile, std::string_view task, std::string_view stage,
                         const RoutedContext& context) {
    validate_template(profile.prompt_template);
    if (context.agent_role != profile.name)
        throw Error(Errc::TemplateMismatch,
                    fmt::format("context routed for '{}' used with profile '{}'", context.agent_role, profile.name));

    // Single left-to-right pass so substituted text is never re-expanded.
    const std::string_view tpl = profile.prompt_template;
    const std::string rendered_context = render_context(context);
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, open - pos));
        const auto rest = tpl.substr(open);
        if (rest.starts_with("{context}")) {
            out += rendered_context;
            pos = open + 9;
        } else if (rest.starts_with("{task}")) {
            out += task;
            pos = open + 6;
        } else if (rest.starts_with("{stage}")) {
            out += stage;
            pos = open + 7;
        } else {
            out += '{';
            pos = open + 1;
        }
    }
    if (!profile.output_schema_hint.empty()) {
        out += "\n\n";
        out += profile.output_schema_hint;
    }
    return out;
}

std::string_view to_string(BlockTag tag) noexcept {
    switch (tag) {
        case BlockTag::Fact:      return "fact";
        case BlockTag::Action:    return "action";
        case BlockTag::Plan:      return "plan";
        case BlockTag::Reasoning: return "reasoning";
    }
    return "fact";
}

std::string format_block(const OutputBlock& block) {
    std::string header(to_string(block.tag));
    if (block.entity_key) header += " key=" + *block.entity_key;
    return fmt::format("```\n{}: {}\n```\n", header, block.text);
}

StructuredOutput parse_structured_output(std::string_view raw_text, std::string_view role, Round round) {
    static const std::regex header(R"(^\s*(fact|action|plan|reasoning)(?:\s+key=(\S+))?:[ \t]*(.*)$)",
                                   std::regex::icase);
    StructuredOutput out;
    out.agent_role = std::string(role);
    out.round = round;
    out.raw_text = std::string(raw_text);

    std::vector<OutputBlock> blocks;
    bool in_fence = false;
    bool open_entry = false;
    std::istringstream lines{std::string(raw_text)};
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line.compare(first, 3, "```") == 0) {
            in_fence = !in_fence;
            open_entry = false;
            continue;
        }
        if (!in_fence) continue;
        std::smatch m;
        if (std::regex_match(line, m, header)) {
            OutputBlock b;
            std::string tag = m[1].str();
            for (auto& c : tag) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            b.tag = tag == "fact" ? BlockTag::Fact
                  : tag == "action" ? BlockTag::Action
                  : tag == "plan" ? BlockTag::Plan
                  : BlockTag::Reasoning;
            if (m[2].matched) b.entity_key = m[2].str();
            b.text = m[3].str();
            blocks.push_back(std::move(b));
            open_entry = true;
        } else if (open_entry) {
            blocks.back().text += '\n';
            blocks.back().text += line;
        }
    }

    for (auto& b : blocks) {
        while (!b.text.empty() && std::isspace(static_cast<unsigned char>(b.text.back()))) b.text.pop_back();
        if (b.text.empty()) continue;
        switch (b.tag) {
            case BlockTag::Fact: out.facts.push_back({std::move(b.text), std::move(b.entity_key)}); break;
            case BlockTag::Action:
                out.actions.push_back({std::move(b.text), std::move(b.entity_key), "tool_result", std::nullopt});
                break;
            case BlockTag::Plan:
                out.actions.push_back({std::move(b.text), std::move(b.entity_key), "plan", std::nullopt});
                break;
            case BlockTag::Reasoning: out.reasoning.push_back(std::move(b.text)); break;
        }
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(Errc::BackendFailure, "SHA-256 digest failed");
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

BackendResult mock_invoke(const std::string& prompt, const MockPersona& persona) {
    const std::string digest = sha256_hex(prompt);
    std::string raw = format_block({BlockTag::Reasoning, "prompt digest " + digest.substr(0, 16), std::nullopt});
    for (const auto& b : persona.blocks) raw += format_block(b);

    const std::uint64_t prompt_seed = std::stoull(digest.substr(0, 16), nullptr, 16);
    std::mt19937_64 rng(prompt_seed ^ persona.seed);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;

    BackendResult r;
    r.latency_seconds = persona.min_latency_s + u * (persona.max_latency_s - persona.min_latency_s);
    r.prompt_tokens = persona.estimator.estimate(prompt);
    r.completion_tokens = persona.estimator.estimate(raw);
    r.raw_text = std::move(raw);
    return r;
}

nlohmann::json to_json(const ReplayFixture& fx) {
    return {{"prompt_sha256", fx.prompt_sha256},
            {"raw_text", fx.result.raw_text},
            {"latency_seconds", fx.result.latency_seconds},
            {"prompt_tokens", fx.result.prompt_tokens},
            {"completion_tokens", fx.result.completion_tokens}};
}

ReplayFixture replay_fixture_from_json(const nlohmann::json& j) {
    try {
        ReplayFixture fx;
        fx.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
        fx.result.raw_text = j.at("raw_text").get<std::string>();
        fx.result.latency_seconds = j.value("latency_seconds", 0.0);
        fx.result.prompt_tokens = j.value("prompt_tokens", TokenCount{0});
        fx.result.completion_tokens = j.value("completion_tokens", TokenCount{0});
        return fx;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed replay fixture: ") + e.what());
    }
}

ReplayBackend::ReplayBackend(std::vector<ReplayFixture> fixtures) {
    for (auto& fx : fixtures) by_hash_.insert_or_assign(std::move(fx.prompt_sha256), std::move(fx.result));
}

ReplayBackend ReplayBackend::from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot open replay fixtures '" + path + "'");
    std::vector<ReplayFixture> fixtures;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fixtures.push_back(replay_fixture_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::ParseError, fmt::format("{}:{}: {}", path, line_no, e.what()));
        }
    }
    return ReplayBackend(std::move(fixtures));
}

BackendResult ReplayBackend::invoke(const std::string& prompt) {
    const std::string hash = sha256_hex(prompt);
    const auto it = by_hash_.find(hash);
    if (it == by_hash_.end()) throw Error(Errc::BackendFailure, "no replay fixture for prompt " + hash.substr(0, 16));
    return it->second;
}

BackendResult RecordingBackend::invoke(const std::string& prompt) {
    BackendResult r = inner_->invoke(prompt);
    std::lock_guard lock(mu_);
    recorded_.insert_or_assign(sha256_hex(prompt), r);
    return r;
}

void RecordingBackend::write_jsonl(std::ostream& os) const {
    std::lock_guard lock(mu_);
    for (const auto& [hash, r] : recorded_) os << to_json(ReplayFixture{hash, r}).dump() << '\n';
}

}  // namespace ctxroute
