// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace alexandria {

struct GenerationRequest {
    std::string system_prompt;
    std::string user_prompt;
    int max_output_tokens = 1024;
    double temperature = 0.0;
    std::string model_id;
    std::optional<std::uint64_t> seed;
};

struct RetryPolicy {
    int max_retries = 2;
    int base_backoff_ms = 200;
};

struct ProviderConfig {
    std::string kind = "mock"; // "mock" or "openai-chat"
    std::string endpoint_uri;
    std::string api_key_env_var_name;
    int max_concurrent_requests = 4;
    RetryPolicy retry;
    int timeout_ms = 30000;
    int mock_embed_dim = 512;
    std::uint64_t mock_seed = 0;
};

// Transport-level interface. Retries, admission control, and audit logging
// live in the Gateway so every provider behaves the same.
class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    virtual std::string generate(const GenerationRequest& request) = 0;
    virtual std::vector<double> embed(const std::string& text, const std::string& model_id) = 0;
    virtual bool supports_option_scoring() const { return false; }
    // Per-option continuation scores for cloze evaluation; higher is better.
    virtual std::vector<double> score_options(const std::string& stem,
                                              const std::vector<std::string>& options);
};

// Extracts the body of a "=== NAME ===" section from a prompt; empty string
// when the marker is absent. Shared by the mock provider and test doubles.
std::string prompt_section(std::string_view prompt, std::string_view name);

// First line of the system prompt names the task ("TASK: ku-extract" etc.).
std::string prompt_task(std::string_view system_prompt);

struct MockOptions {
    std::uint64_t seed = 0;
    int embed_dim = 512;
    // Responses served verbatim, FIFO, before any synthesis.
    std::deque<std::string> scripted;
    // Any request whose user prompt contains this marker gets garbage output.
    std::string corrupt_marker;
    // Substring of the user prompt -> canned response.
    std::map<std::string, std::string> canned;
};

// Deterministic offline provider: a pure function of (request, options).
// Text tasks are synthesized from the prompt sections; embeddings are
// bag-of-words counts, which makes the embedder order-insensitive on purpose.
class MockProvider : public Provider {
public:
    explicit MockProvider(MockOptions options = {});

    std::string name() const override { return "mock"; }
    std::string generate(const GenerationRequest& request) override;
    std::vector<double> embed(const std::string& text, const std::string& model_id) override;
    bool supports_option_scoring() const override { return true; }
    std::vector<double> score_options(const std::string& stem,
                                      const std::vector<std::string>& options) override;

private:
    std::string synthesize_extraction(const GenerationRequest& request) const;
    std::string synthesize_header(const GenerationRequest& request) const;
    std::string synthesize_mcqs(const GenerationRequest& request) const;
    std::string synthesize_answer(const GenerationRequest& request);
    std::string synthesize_reconstruction(const GenerationRequest& request) const;

    MockOptions options_;
    std::mutex mutex_; // guards scripted_
    std::deque<std::string> scripted_;
};

// OpenAI-style chat/embeddings adapter over HTTP. The endpoint URI is the API
// base (e.g. "http://127.0.0.1:8080/v1"); the API key is read from the
// configured environment variable on every call, before any network I/O.
class HttpProvider : public Provider {
public:
    HttpProvider(ProviderConfig config, std::string provider_name);

    std::string name() const override { return name_; }
    std::string generate(const GenerationRequest& request) override;
    std::vector<double> embed(const std::string& text, const std::string& model_id) override;

private:
    std::string resolve_api_key() const;

    ProviderConfig config_;
    std::string name_;
    std::string scheme_host_port_;
    std::string base_path_;
};

// Append-only JSONL audit log; registered secrets are redacted from every
// logged field.
class AuditLog {
public:
    explicit AuditLog(const std::filesystem::path& file);
    void add_secret(std::string secret);
    void record(std::string_view kind, const GenerationRequest& request,
                std::string_view response, int retries);
    void record_embed(std::string_view model, std::string_view text, std::size_t dim);

private:
    std::string redact(std::string_view text) const;

    std::filesystem::path file_;
    std::vector<std::string> secrets_;
    std::mutex mutex_;
    std::uint64_t sequence_ = 0;
};

struct GatewayStats {
    std::atomic<std::uint64_t> generate_calls{0};
    std::atomic<std::uint64_t> embed_calls{0};
    std::atomic<std::uint64_t> retries{0};
};

// Bounded-concurrency, retrying front door to a provider. Retries apply to
// transient failures only (RateLimited, Timeout) with exponential backoff and
// seeded jitter; a request that succeeded is never re-sent.
class Gateway {
public:
    using Sleeper = std::function<void(int /*ms*/)>;

    Gateway(std::shared_ptr<Provider> provider, ProviderConfig config,
            std::shared_ptr<AuditLog> audit = nullptr, Sleeper sleeper = nullptr);

    std::string generate(const GenerationRequest& request);
    std::vector<double> embed(const std::string& text, const std::string& model_id);
    std::vector<double> score_options(const std::string& stem,
                                      const std::vector<std::string>& options);
    bool supports_option_scoring() const { return provider_->supports_option_scoring(); }

    const GatewayStats& stats() const { return stats_; }
    Provider& provider() { return *provider_; }
    const ProviderConfig& config() const { return config_; }

private:
    int backoff_ms(int attempt);

    std::shared_ptr<Provider> provider_;
    ProviderConfig config_;
    std::shared_ptr<AuditLog> audit_;
    Sleeper sleeper_;
    std::counting_semaphore<1 << 20> admission_;
    std::mutex jitter_mutex_;
    std::uint64_t jitter_state_;
    GatewayStats stats_;
};

// Strict structured parse with bounded repair: pass 1 strips code fences and
// trims to the outermost JSON value; pass 2 converts single-quoted strings,
// removes trailing commas, and maps Python literals. Throws
// UnparseableResponse (carrying the raw text) after the second repair fails.
nlohmann::ordered_json parse_structured_response(const std::string& raw);
std::string repair_structured_text(const std::string& text, int pass);

} // namespace alexandria
