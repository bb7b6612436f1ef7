// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "alexandria/errors.hpp"
#include "alexandria/llm_gateway.hpp"
#include "support/paths.hpp"

using namespace alexandria;

namespace {

GenerationRequest simple_request(const std::string& task, const std::string& user) {
    GenerationRequest request;
    request.system_prompt = "TASK: " + task + "\nDo the task.";
    request.user_prompt = user;
    request.model_id = "mock-small";
    return request;
}

// Throws a transient error for the first `failures` calls, then succeeds.
class FlakyProvider : public Provider {
public:
    explicit FlakyProvider(int failures) : remaining_(failures) {}
    std::string name() const override { return "flaky"; }
    std::string generate(const GenerationRequest&) override {
        if (remaining_-- > 0) throw RateLimited("slow down");
        return "ok";
    }
    std::vector<double> embed(const std::string&, const std::string&) override { return {1.0}; }

private:
    std::atomic<int> remaining_;
};

// Counts concurrently running calls; fails the invariant if admission ever
// exceeds the configured limit.
class InstrumentedProvider : public Provider {
public:
    std::string name() const override { return "instrumented"; }
    std::string generate(const GenerationRequest&) override {
        int now = in_flight_.fetch_add(1) + 1;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        in_flight_.fetch_sub(1);
        return "done";
    }
    std::vector<double> embed(const std::string&, const std::string&) override { return {1.0}; }
    int max_in_flight() const { return max_in_flight_.load(); }

private:
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

} // namespace

TEST_CASE("mock provider output is a pure function of the request") {
    MockProvider mock;
    GenerationRequest request = simple_request(
        "ku-extract", "=== HEADER ===\nTitle: T\n=== PREVIOUS UNITS ===\n(none)\n"
                      "=== EXEMPLAR ===\nnone\n=== CHUNK ===\nThe Large Probe measured 17 volts.");
    CHECK(mock.generate(request) == mock.generate(request));
    auto parsed = parse_structured_response(mock.generate(request));
    CHECK(parsed.contains("entities"));
    CHECK(parsed.at("entities").size() >= 1);
}

TEST_CASE("mock embeddings are deterministic with the configured dimension") {
    MockOptions options;
    options.embed_dim = 64;
    MockProvider mock(options);
    auto v1 = mock.embed("some repeated text tokens text", "mock-bow");
    auto v2 = mock.embed("some repeated text tokens text", "mock-bow");
    CHECK(v1 == v2);
    CHECK(v1.size() == 64);
    CHECK(mock.embed("other", "mock-bow") != v1);
}

TEST_CASE("scripted mock responses are consumed first, in order") {
    MockOptions options;
    options.scripted = {"first reply", "second reply"};
    MockProvider mock(options);
    GenerationRequest request = simple_request("mcq-answer", "whatever");
    CHECK(mock.generate(request) == "first reply");
    CHECK(mock.generate(request) == "second reply");
    CHECK(mock.generate(request) != "first reply"); // falls through to synthesis
}

TEST_CASE("prompt sections parse by marker") {
    std::string prompt = "=== CONTEXT ===\nctx line\n=== QUESTION ===\nq?\n=== OPTIONS ===\nA) x";
    CHECK(prompt_section(prompt, "CONTEXT") == "ctx line");
    CHECK(prompt_section(prompt, "QUESTION") == "q?");
    CHECK(prompt_section(prompt, "MISSING").empty());
    CHECK(prompt_task("TASK: ku-extract\nrest") == "ku-extract");
    CHECK(prompt_task("no marker").empty());
}

TEST_CASE("structured parsing repairs fenced single-quoted output") {
    CHECK(parse_structured_response(R"({"a": 1})").at("a") == 1);

    std::string fenced = "Here is the unit:\n```json\n{'context_summary': 'A summary.',\n"
                         " 'entities': [{'name': 'Earth', 'attributes': {'radius': '6371 km'},\n"
                         " 'relations': {'orbits': 'Sun',}}],}\n```\nDone.";
    auto parsed = parse_structured_response(fenced);
    CHECK(parsed.at("context_summary") == "A summary.");
    CHECK(parsed.at("entities")[0].at("relations").at("orbits") == "Sun");

    CHECK_THROWS_AS(parse_structured_response("purely prose, nothing structured"),
                    UnparseableResponse);
    try {
        parse_structured_response("prose only");
    } catch (const UnparseableResponse& e) {
        CHECK(e.raw() == "prose only");
    }
}

TEST_CASE("repair leaves well-formed content semantically unchanged") {
    const std::string inputs[] = {
        R"({"k": "it's fine", "n": [1, 2, 3]})",
        R"(["a", {"b": true}, null])",
        R"({"nested": {"deep": {"x": "y"}}})",
    };
    for (const std::string& input : inputs) {
        auto direct = nlohmann::json::parse(input);
        auto repaired = nlohmann::json::parse(
            repair_structured_text(repair_structured_text(input, 0), 1));
        CHECK(direct == repaired);
    }
}

TEST_CASE("repair converts python-style literals") {
    auto parsed = parse_structured_response("{'flag': True, 'missing': None, 'off': False}");
    CHECK(parsed.at("flag") == true);
    CHECK(parsed.at("missing").is_null());
    CHECK(parsed.at("off") == false);
}

TEST_CASE("gateway rejects invalid generation requests") {
    Gateway gateway(std::make_shared<MockProvider>(), ProviderConfig{});
    GenerationRequest bad_temperature = simple_request("x", "y");
    bad_temperature.temperature = -0.5;
    CHECK_THROWS_AS(gateway.generate(bad_temperature), ConfigError);
    GenerationRequest bad_budget = simple_request("x", "y");
    bad_budget.max_output_tokens = 0;
    CHECK_THROWS_AS(gateway.generate(bad_budget), ConfigError);
}

TEST_CASE("gateway retries transient failures with backoff") {
    auto provider = std::make_shared<FlakyProvider>(1);
    ProviderConfig config;
    config.retry.max_retries = 2;
    config.retry.base_backoff_ms = 1;
    std::vector<int> sleeps;
    Gateway gateway(provider, config, nullptr, [&](int ms) { sleeps.push_back(ms); });
    CHECK(gateway.generate(simple_request("x", "y")) == "ok");
    CHECK(gateway.stats().retries.load() == 1);
    CHECK(sleeps.size() == 1);
    CHECK(sleeps[0] >= 1);
}

TEST_CASE("gateway gives up after max retries") {
    auto provider = std::make_shared<FlakyProvider>(10);
    ProviderConfig config;
    config.retry.max_retries = 2;
    config.retry.base_backoff_ms = 1;
    Gateway gateway(provider, config, nullptr, [](int) {});
    CHECK_THROWS_AS(gateway.generate(simple_request("x", "y")), RateLimited);
    CHECK(gateway.stats().retries.load() == 2);
}

TEST_CASE("in-flight requests never exceed the admission limit") {
    auto provider = std::make_shared<InstrumentedProvider>();
    ProviderConfig config;
    config.max_concurrent_requests = 3;
    Gateway gateway(provider, config);
    std::vector<std::thread> threads;
    for (int t = 0; t < 12; ++t) {
        threads.emplace_back([&] { gateway.generate(simple_request("x", "y")); });
    }
    for (std::thread& t : threads) t.join();
    CHECK(provider->max_in_flight() <= 3);
    CHECK(gateway.stats().generate_calls.load() == 12);
}

TEST_CASE("http provider demands credentials before any network call") {
    ::unsetenv("ALEXANDRIA_TESTPROV_API_KEY");
    ProviderConfig config;
    config.kind = "openai-chat";
    // Port 9 is discard; if the provider attempted a connection the error
    // would be a Timeout, not an AuthError.
    config.endpoint_uri = "http://127.0.0.1:9/v1";
    config.api_key_env_var_name = "ALEXANDRIA_TESTPROV_API_KEY";
    HttpProvider provider(config, "testprov");
    CHECK_THROWS_AS(provider.generate(simple_request("x", "y")), AuthError);
}

TEST_CASE("http provider retries a 429 then succeeds against a fake server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.get_header_value("Authorization") == "Bearer sesame");
        if (hits.fetch_add(1) == 0) {
            res.status = 429;
            return;
        }
        nlohmann::json body;
        body["choices"] = {{{"message", {{"content", "hello from the fake"}}}}};
        res.set_content(body.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json body;
        body["data"] = {{{"embedding", {0.25, 0.5}}}};
        res.set_content(body.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("ALEXANDRIA_FAKE_API_KEY", "sesame", 1);
    ProviderConfig config;
    config.kind = "openai-chat";
    config.endpoint_uri = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    config.api_key_env_var_name = "ALEXANDRIA_FAKE_API_KEY";
    config.retry.max_retries = 2;
    config.retry.base_backoff_ms = 1;
    auto provider = std::make_shared<HttpProvider>(config, "fake");
    Gateway gateway(provider, config, nullptr, [](int) {});

    CHECK(gateway.generate(simple_request("x", "y")) == "hello from the fake");
    CHECK(gateway.stats().retries.load() == 1); // one retry recorded
    CHECK(gateway.embed("text", "embed-model") == std::vector<double>{0.25, 0.5});

    server.stop();
    listener.join();
    ::unsetenv("ALEXANDRIA_FAKE_API_KEY");
}

TEST_CASE("audit log redacts registered secrets") {
    testsupport::TempDir tmp("audit");
    auto audit = std::make_shared<AuditLog>(tmp / "audit.jsonl");
    audit->add_secret("sesame");
    auto provider = std::make_shared<MockProvider>();
    ProviderConfig config;
    Gateway gateway(provider, config, audit);
    GenerationRequest request = simple_request("unknown-task", "please do not log sesame");
    gateway.generate(request);

    std::ifstream in(tmp / "audit.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line.find("sesame") == std::string::npos);
    CHECK(line.find("[REDACTED]") != std::string::npos);
    auto entry = nlohmann::json::parse(line);
    CHECK(entry.at("kind") == "generate");
    CHECK(entry.at("retries") == 0);
}
