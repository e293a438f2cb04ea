#include "ctxroute/agents.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

namespace ctxroute {

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::ConfigError, "endpoint '" + url + "' has no scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

nlohmann::json build_chat_request(const LiveBackendConfig& cfg, const std::string& prompt) {
    nlohmann::json messages = nlohmann::json::array();
    if (cfg.system_prompt) messages.push_back({{"role", "system"}, {"content", *cfg.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", prompt}});
    return {{"model", cfg.model}, {"messages", std::move(messages)}, {"temperature", cfg.temperature}};
}

BackendResult parse_chat_response(const nlohmann::json& body, const LiveBackendConfig& cfg,
                                  const std::string& prompt) {
    BackendResult r;
    try {
        const auto& content = body.at("choices").at(0).at("message").at("content");
        r.raw_text = content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::BackendFailure, std::string("malformed chat completion response: ") + e.what());
    }
    if (body.contains("usage") && body["usage"].is_object()) {
        r.prompt_tokens = body["usage"].value("prompt_tokens", cfg.estimator.estimate(prompt));
        r.completion_tokens = body["usage"].value("completion_tokens", cfg.estimator.estimate(r.raw_text));
    } else {
        r.prompt_tokens = cfg.estimator.estimate(prompt);
        r.completion_tokens = cfg.estimator.estimate(r.raw_text);
    }
    return r;
}

struct LiveBackend::Impl {
    explicit Impl(LiveBackendConfig c)
        : cfg(std::move(c)), url(split_url(cfg.endpoint)), slots(std::max(1, cfg.max_in_flight)) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) api_key = key;
    }

    LiveBackendConfig cfg;
    ParsedUrl url;
    std::string api_key;
    std::counting_semaphore<1024> slots;
};

LiveBackend::LiveBackend(LiveBackendConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

LiveBackend::~LiveBackend() = default;

BackendResult LiveBackend::invoke(const std::string& prompt) {
    auto& s = *impl_;
    s.slots.acquire();
    struct Release {
        std::counting_semaphore<1024>& sem;
        ~Release() { sem.release(); }
    } release{s.slots};

    // One client per call: httplib clients are not safe to share between
    // threads.
    httplib::Client client(s.url.origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(s.cfg.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);

    const std::string body = build_chat_request(s.cfg, prompt).dump();
    std::string last_error;
    double backoff = s.cfg.retry_backoff_s;
    for (int attempt = 0; attempt <= s.cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(s.url.path, headers, body, "application/json");
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
            if (retryable(res->status)) continue;
            break;
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::BackendFailure, std::string("response is not JSON: ") + e.what());
        }
        BackendResult r = parse_chat_response(parsed, s.cfg, prompt);
        r.latency_seconds = elapsed;
        return r;
    }
    throw Error(Errc::BackendFailure, last_error);
}

}  // namespace ctxroute
