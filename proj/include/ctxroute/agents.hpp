#pragma once

#include "ctxroute/budget.hpp"
#include "ctxroute/memory.hpp"
#include "ctxroute/router.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxroute {

struct RoleProfile {
    std::string name;
    std::string description;
    // Placeholders: {task}, {stage}, {context} ({context} exactly once).
    std::string prompt_template;
    TokenCount budget_offset = 0;
    std::string output_schema_hint;
};

/// Throws TemplateMismatch unless {context} occurs exactly once and {task}
/// occurs at least once.
void validate_template(std::string_view prompt_template);

class RoleRegistry {
public:
    /// Planner, Searcher, Recommender plus the extended roles (Retriever,
    /// Executor, Verifier, Critic, Rewriter, Refiner).
    static RoleRegistry builtin();

    void add(RoleProfile profile);  // replaces a profile with the same name
    [[nodiscard]] const RoleProfile& get(std::string_view name) const;
    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    /// Offsets of every registered profile, keyed by role.
    [[nodiscard]] std::map<std::string, TokenCount, std::less<>> budget_offsets() const;

private:
    std::map<std::string, RoleProfile, std::less<>> profiles_;
};

/// Numbered blocks "[k] (role_tag/kind@round) text", one per line; "(no
/// context)" for an empty context.
std::string render_context(const RoutedContext& context);

std::string build_prompt(const RoleProfile& profile, std::string_view task, std::string_view stage,
                         const RoutedContext& context);

// --- Tagged-block output protocol --------------------------------------------
//
// Agents report structure as fenced blocks whose first line is a header
// "<tag>[ key=<entity_key>]: <text>", e.g.
//
//   ```
//   fact key=capital:france: Paris
//   ```
//
// Tags: fact, action, plan (an action with sub_kind "plan"), reasoning.
// Lines inside a fence that do not start with a header continue the
// previous entry.

enum class BlockTag { Fact, Action, Plan, Reasoning };

std::string_view to_string(BlockTag tag) noexcept;

struct OutputBlock {
    BlockTag tag = BlockTag::Fact;
    std::string text;
    std::optional<std::string> entity_key;
};

std::string format_block(const OutputBlock& block);

/// Never throws; unparseable input yields empty lists and raw_text intact.
StructuredOutput parse_structured_output(std::string_view raw_text, std::string_view role, Round round);

// --- Backends -------------------------------------------------------------------

struct BackendResult {
    std::string raw_text;
    double latency_seconds = 0.0;
    TokenCount prompt_tokens = 0;
    TokenCount completion_tokens = 0;

    friend bool operator==(const BackendResult&, const BackendResult&) = default;
};

// invoke() may be called concurrently from several threads.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual BackendResult invoke(const std::string& prompt) = 0;
};

/// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

struct MockPersona {
    std::vector<OutputBlock> blocks;
    double min_latency_s = 0.5;
    double max_latency_s = 2.0;
    std::uint64_t seed = 0;
    TokenEstimator estimator;
};

/// Deterministic synthetic agent output for a prompt.
BackendResult mock_invoke(const std::string& prompt, const MockPersona& persona);

class MockBackend final : public AgentBackend {
public:
    explicit MockBackend(MockPersona persona) : persona_(std::move(persona)) {}
    BackendResult invoke(const std::string& prompt) override { return mock_invoke(prompt, persona_); }

private:
    MockPersona persona_;
};

struct ReplayFixture {
    std::string prompt_sha256;
    BackendResult result;
};

nlohmann::json to_json(const ReplayFixture& fx);
ReplayFixture replay_fixture_from_json(const nlohmann::json& j);

// Serves recorded responses keyed by prompt hash. A miss is a
// BackendFailure.
class ReplayBackend final : public AgentBackend {
public:
    explicit ReplayBackend(std::vector<ReplayFixture> fixtures);
    static ReplayBackend from_jsonl(const std::string& path);

    BackendResult invoke(const std::string& prompt) override;
    [[nodiscard]] std::size_t size() const noexcept { return by_hash_.size(); }

private:
    std::map<std::string, BackendResult, std::less<>> by_hash_;
};

// Forwards to another backend and keeps every exchange so it can be written
// out as replay fixtures.
class RecordingBackend final : public AgentBackend {
public:
    explicit RecordingBackend(std::shared_ptr<AgentBackend> inner) : inner_(std::move(inner)) {}
    BackendResult invoke(const std::string& prompt) override;
    void write_jsonl(std::ostream& os) const;

private:
    std::shared_ptr<AgentBackend> inner_;
    mutable std::mutex mu_;
    std::map<std::string, BackendResult> recorded_;
};

struct LiveBackendConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 60.0;
    double temperature = 0.0;
    int max_in_flight = 4;
    int max_retries = 2;
    double retry_backoff_s = 0.5;  // doubled after every failed attempt
    std::optional<std::string> system_prompt;
    TokenEstimator estimator;  // used when the response carries no usage block
};

/// Chat-completion request body for a single user prompt.
nlohmann::json build_chat_request(const LiveBackendConfig& cfg, const std::string& prompt);

/// Extracts choices[0].message.content and usage; throws BackendFailure on a
/// malformed body.
BackendResult parse_chat_response(const nlohmann::json& body, const LiveBackendConfig& cfg,
                                  const std::string& prompt);

class LiveBackend final : public AgentBackend {
public:
    explicit LiveBackend(LiveBackendConfig cfg);
    ~LiveBackend() override;
    BackendResult invoke(const std::string& prompt) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ctxroute
