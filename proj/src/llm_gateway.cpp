// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "alexandria/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "alexandria/corpus.hpp"
#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<double> Provider::score_options(const std::string&, const std::vector<std::string>&) {
    throw GatewayError("provider '" + name() + "' does not expose option scoring");
}

std::string prompt_section(std::string_view prompt, std::string_view name) {
    std::string marker = "=== " + std::string(name) + " ===";
    std::size_t pos = prompt.find(marker);
    if (pos == std::string_view::npos) return {};
    pos += marker.size();
    if (pos < prompt.size() && prompt[pos] == '\n') ++pos;
    std::size_t end = prompt.find("\n=== ", pos);
    std::string_view body =
        end == std::string_view::npos ? prompt.substr(pos) : prompt.substr(pos, end - pos);
    while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.remove_suffix(1);
    return std::string(body);
}

std::string prompt_task(std::string_view system_prompt) {
    constexpr std::string_view kPrefix = "TASK: ";
    if (system_prompt.substr(0, kPrefix.size()) != kPrefix) return {};
    std::size_t eol = system_prompt.find('\n');
    std::string_view line = system_prompt.substr(kPrefix.size(),
                                                 eol == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : eol - kPrefix.size());
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.remove_suffix(1);
    return std::string(line);
}

// ---------------------------------------------------------------------------
// MockProvider
// ---------------------------------------------------------------------------

namespace {

struct WordToken {
    std::string clean;     // surrounding punctuation stripped
    std::string raw;
    bool capital = false;
    bool sentence_initial = false;
};

std::vector<WordToken> word_tokens(std::string_view text) {
    std::vector<WordToken> tokens;
    std::size_t i = 0;
    bool at_sentence_start = true;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        WordToken tok;
        tok.raw = std::string(text.substr(start, i - start));
        std::string_view clean = tok.raw;
        while (!clean.empty() && std::ispunct(static_cast<unsigned char>(clean.front())) &&
               clean.front() != '(')
            clean.remove_prefix(1);
        while (!clean.empty() && std::ispunct(static_cast<unsigned char>(clean.back())) &&
               clean.back() != ')')
            clean.remove_suffix(1);
        tok.clean = std::string(clean);
        tok.capital = !tok.clean.empty() && std::isupper(static_cast<unsigned char>(tok.clean[0]));
        tok.sentence_initial = at_sentence_start;
        char last = tok.raw.empty() ? ' ' : tok.raw.back();
        at_sentence_start = (last == '.' || last == '!' || last == '?');
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

bool is_numeric_token(std::string_view token) {
    bool has_digit = false;
    for (char c : token) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            has_digit = true;
        } else if (std::string_view("+-.,x^()eE").find(c) == std::string_view::npos) {
            return false;
        }
    }
    return has_digit;
}

bool is_short_unit(std::string_view token) {
    if (token.empty() || token.size() > 6) return false;
    return std::all_of(token.begin(), token.end(), [](unsigned char c) {
        return std::islower(c) && std::isalpha(c);
    });
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Capitalized-run entity names, the deterministic stand-in for model output.
std::vector<std::string> capitalized_entities(const std::vector<WordToken>& tokens) {
    std::vector<std::string> names;
    std::vector<std::string> seen;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!tokens[i].capital || tokens[i].clean.empty()) {
            ++i;
            continue;
        }
        std::size_t run_start = i;
        while (i < tokens.size() && tokens[i].capital && !tokens[i].clean.empty()) ++i;
        std::size_t run_end = i;
        if (run_end - run_start == 1 && tokens[run_start].sentence_initial) continue;
        std::size_t first = run_start;
        if (run_end - run_start >= 2 && tokens[first].sentence_initial) ++first;
        std::string name;
        for (std::size_t w = first; w < run_end; ++w) {
            if (!name.empty()) name.push_back(' ');
            name += tokens[w].clean;
        }
        if (name.size() < 3) continue;
        std::string key = lowercase(name);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        names.push_back(std::move(name));
        if (names.size() >= 8) break;
    }
    return names;
}

std::string first_numeric_fact(const std::vector<WordToken>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!tokens[i].clean.empty() && is_numeric_token(tokens[i].clean)) {
            std::string fact = tokens[i].clean;
            if (i + 1 < tokens.size() && is_short_unit(tokens[i + 1].clean)) {
                fact += " " + tokens[i + 1].clean;
            }
            return fact;
        }
    }
    return {};
}

std::string shift_digits(std::string_view value, int shift) {
    std::string out(value);
    for (char& c : out) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            c = static_cast<char>('0' + ((c - '0' + shift) % 10));
        }
    }
    return out;
}

std::string humanize_key(std::string_view key) {
    std::string out(key);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

} // namespace

MockProvider::MockProvider(MockOptions options)
    : options_(std::move(options)), scripted_(options_.scripted) {}

std::string MockProvider::generate(const GenerationRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!scripted_.empty()) {
            std::string out = scripted_.front();
            scripted_.pop_front();
            return out;
        }
    }
    if (!options_.corrupt_marker.empty() &&
        request.user_prompt.find(options_.corrupt_marker) != std::string::npos) {
        return "%%% corrupted model output; not a structured response %%%";
    }
    for (const auto& [needle, response] : options_.canned) {
        if (request.user_prompt.find(needle) != std::string::npos) return response;
    }
    std::string task = prompt_task(request.system_prompt);
    if (task == "ku-extract") return synthesize_extraction(request);
    if (task == "ku-header") return synthesize_header(request);
    if (task == "mcq-generate") return synthesize_mcqs(request);
    if (task == "mcq-answer") return synthesize_answer(request);
    if (task == "ku-reconstruct") return synthesize_reconstruction(request);
    // Unknown task: deterministic echo, enough for smoke tests.
    return "[mock:" + request.model_id + "] " + request.user_prompt.substr(0, 120);
}

std::string MockProvider::synthesize_extraction(const GenerationRequest& request) const {
    std::string chunk = prompt_section(request.user_prompt, "CHUNK");
    std::string prev = prompt_section(request.user_prompt, "PREVIOUS UNITS");
    auto tokens = word_tokens(chunk);
    std::vector<std::string> names = capitalized_entities(tokens);
    if (names.empty()) {
        for (const auto& tok : tokens) {
            if (tok.clean.size() >= 3) {
                std::string fallback = tok.clean;
                fallback[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(fallback[0])));
                names.push_back(fallback);
                break;
            }
        }
    }
    if (names.empty()) names.push_back("Passage");

    ordered_json out;
    std::string summary = "Covers ";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) summary += i + 1 == names.size() ? " and " : ", ";
        summary += names[i];
    }
    summary += ".";
    bool has_prev = !prev.empty() && prev != "(none)";
    if (has_prev) summary += " Builds on the earlier units of this document.";
    out["context_summary"] = summary;

    std::string fact = first_numeric_fact(tokens);
    out["entities"] = ordered_json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        ordered_json entity;
        entity["name"] = names[i];
        entity["attributes"] = ordered_json::object();
        if (i == 0 && !fact.empty()) entity["attributes"]["reported_value"] = fact;
        entity["relations"] = ordered_json::object();
        if (i + 1 < names.size()) entity["relations"]["mentioned_with"] = names[i + 1];
        out["entities"].push_back(std::move(entity));
    }
    return out.dump();
}

std::string MockProvider::synthesize_header(const GenerationRequest& request) const {
    std::string metadata = prompt_section(request.user_prompt, "METADATA");
    std::string domain = "other";
    std::istringstream lines(metadata);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("Domain: ", 0) == 0) domain = line.substr(8);
    }
    ordered_json out;
    out["genre"] = "Academic Journal, " + domain;
    out["style_descriptor"] =
        "The writing style is formal and technical, characteristic of scholarly " + domain +
        " prose. Sentences are declarative and information dense.";
    return out.dump();
}

std::string MockProvider::synthesize_mcqs(const GenerationRequest& request) const {
    std::string source = prompt_section(request.user_prompt, "SOURCE");
    int count = 3;
    {
        std::istringstream lines(request.user_prompt);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.rfind("COUNT: ", 0) == 0) {
                count = std::max(1, std::atoi(line.c_str() + 7));
                break;
            }
        }
    }
    std::vector<Sentence> sentences = split_sentences(source);
    if (sentences.empty()) return "[]";

    // Distractor pool: long distinct words from the whole source.
    auto all_tokens = word_tokens(source);
    std::vector<std::string> pool;
    for (const auto& tok : all_tokens) {
        if (tok.clean.size() >= 5 && !is_numeric_token(tok.clean)) {
            std::string key = lowercase(tok.clean);
            bool dup = std::any_of(pool.begin(), pool.end(),
                                   [&](const std::string& p) { return lowercase(p) == key; });
            if (!dup) pool.push_back(tok.clean);
        }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const std::string& a, const std::string& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });

    ordered_json items = ordered_json::array();
    for (int q = 0; q < count; ++q) {
        const Sentence& sentence =
            sentences[(static_cast<std::size_t>(q) * sentences.size()) / count];
        auto tokens = word_tokens(sentence.text);
        std::string fact = first_numeric_fact(tokens);
        bool numeric = !fact.empty();
        if (!numeric) {
            for (const auto& tok : tokens) {
                if (tok.clean.size() > fact.size() && !is_numeric_token(tok.clean)) {
                    fact = tok.clean;
                }
            }
        }
        if (fact.empty()) continue;

        std::string blanked = sentence.text;
        std::size_t pos = blanked.find(fact);
        if (pos != std::string::npos) blanked.replace(pos, fact.size(), "____");
        ordered_json item;
        item["question"] =
            "Which term or value completes this statement from the source: \"" + blanked + "\"";
        std::vector<std::string> options{fact};
        if (numeric) {
            options.push_back(shift_digits(fact, 1));
            options.push_back(shift_digits(fact, 3));
            options.push_back(shift_digits(fact, 7));
        } else {
            for (const auto& candidate : pool) {
                if (options.size() >= 4) break;
                if (lowercase(candidate) == lowercase(fact)) continue;
                options.push_back(candidate);
            }
            int suffix = 1;
            while (options.size() < 4) options.push_back(fact + "-" + std::to_string(suffix++));
        }
        item["options"] = options;
        item["correct_index"] = 0;
        items.push_back(std::move(item));
    }
    return items.dump();
}

std::vector<double> MockProvider::score_options(const std::string& stem,
                                                const std::vector<std::string>& options) {
    std::string context = prompt_section(stem, "CONTEXT");
    std::string question = prompt_section(stem, "QUESTION");

    // The blanked source sentence, when the question carries one in quotes.
    std::string quoted;
    std::size_t first_quote = question.find('"');
    std::size_t last_quote = question.rfind('"');
    if (first_quote != std::string::npos && last_quote > first_quote) {
        quoted = question.substr(first_quote + 1, last_quote - first_quote - 1);
    }

    std::vector<double> scores;
    scores.reserve(options.size());
    for (const auto& option : options) {
        double jitter = static_cast<double>(hash32(option + "\x1f" + question, options_.seed)) /
                        4294967296.0;
        double score = jitter;
        if (!option.empty() && !context.empty()) {
            std::size_t blank = quoted.find("____");
            if (blank != std::string::npos) {
                std::string candidate = quoted;
                candidate.replace(blank, 4, option);
                if (context.find(candidate) != std::string::npos) {
                    score = 3.0 + 0.0001 * jitter;
                }
            }
            if (score < 3.0 && context.find(option) != std::string::npos) {
                score = 2.0 + 0.0001 * jitter;
            }
        }
        scores.push_back(score);
    }
    return scores;
}

std::string MockProvider::synthesize_answer(const GenerationRequest& request) {
    std::string options_block = prompt_section(request.user_prompt, "OPTIONS");
    std::vector<std::string> options;
    std::istringstream lines(options_block);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'D' && line[1] == ')') {
            std::string_view text(line);
            text.remove_prefix(2);
            while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
            options.emplace_back(text);
        }
    }
    if (options.empty()) return "A";
    std::vector<double> scores = score_options(request.user_prompt, options);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return std::string(1, static_cast<char>('A' + best));
}

std::string MockProvider::synthesize_reconstruction(const GenerationRequest& request) const {
    std::string units_block = prompt_section(request.user_prompt, "UNITS");
    json units;
    try {
        units = json::parse(units_block);
    } catch (const json::exception&) {
        return "The provided units could not be read.";
    }
    std::string prose;
    auto add_sentence = [&prose](const std::string& s) {
        if (!prose.empty()) prose.push_back(' ');
        prose += s;
    };
    if (!units.is_array()) return "The provided units could not be read.";
    bool first_entity_named = false;
    for (const auto& unit : units) {
        if (!unit.contains("entities")) continue;
        for (const auto& entity : unit.at("entities")) {
            std::string name = entity.value("name", "");
            if (name.empty()) continue;
            if (!first_entity_named) {
                add_sentence("This passage concerns " + name + ".");
                first_entity_named = true;
            }
            if (entity.contains("relations")) {
                for (const auto& [key, value] : entity.at("relations").items()) {
                    std::string targets;
                    if (value.is_array()) {
                        for (const auto& v : value) {
                            if (!targets.empty()) targets += " and ";
                            targets += v.is_string() ? v.get<std::string>() : v.dump();
                        }
                    } else {
                        targets = value.is_string() ? value.get<std::string>() : value.dump();
                    }
                    add_sentence(name + " " + humanize_key(key) + " " + targets + ".");
                }
            }
            if (entity.contains("attributes")) {
                for (const auto& [key, value] : entity.at("attributes").items()) {
                    std::string v = value.is_string() ? value.get<std::string>() : value.dump();
                    add_sentence(name + " has " + humanize_key(key) + " " + v + ".");
                }
            }
        }
    }
    if (prose.empty()) prose = "The units describe no entities.";
    return prose;
}

std::vector<double> MockProvider::embed(const std::string& text, const std::string&) {
    // Bag-of-words counts: identical token multisets embed identically, so
    // word order is invisible to this embedder.
    std::vector<double> vec(static_cast<std::size_t>(options_.embed_dim), 0.0);
    for (const std::string& token : normalize_tokens(text)) {
        vec[hash32(token, 0xB0E5ULL) % vec.size()] += 1.0;
    }
    return vec;
}

// ---------------------------------------------------------------------------
// HttpProvider
// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(ProviderConfig config, std::string provider_name)
    : config_(std::move(config)), name_(std::move(provider_name)) {
    const std::string& uri = config_.endpoint_uri;
    std::size_t scheme_end = uri.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URI must include a scheme: " + uri);
    }
    std::size_t path_start = uri.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = uri;
        base_path_ = "";
    } else {
        scheme_host_port_ = uri.substr(0, path_start);
        base_path_ = uri.substr(path_start);
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }
}

std::string HttpProvider::resolve_api_key() const {
    if (config_.api_key_env_var_name.empty()) return {};
    const char* value = std::getenv(config_.api_key_env_var_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthError("environment variable " + config_.api_key_env_var_name + " is not set");
    }
    return value;
}

namespace {

json post_json(const std::string& scheme_host_port, const std::string& path,
               const std::string& api_key, int timeout_ms, const json& body) {
    httplib::Client client(scheme_host_port);
    client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw Timeout("request to " + scheme_host_port + path + " failed: " +
                      httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
        throw RateLimited("provider rate limit (HTTP 429)");
    }
    if (res->status >= 500) {
        throw Timeout("provider server error (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw ProviderMalformedResponse("unexpected HTTP status " + std::to_string(res->status) +
                                        ": " + res->body.substr(0, 200));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProviderMalformedResponse(std::string("response is not JSON: ") + e.what());
    }
}

} // namespace

std::string HttpProvider::generate(const GenerationRequest& request) {
    std::string api_key = resolve_api_key(); // AuthError before any network call
    json body;
    body["model"] = request.model_id;
    body["messages"] = json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                                    json{{"role", "user"}, {"content", request.user_prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    if (request.seed) body["seed"] = *request.seed;
    json res = post_json(scheme_host_port_, base_path_ + "/chat/completions", api_key,
                         config_.timeout_ms, body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ProviderMalformedResponse("completion response missing choices[0].message.content");
    }
}

std::vector<double> HttpProvider::embed(const std::string& text, const std::string& model_id) {
    std::string api_key = resolve_api_key();
    json body;
    body["model"] = model_id;
    body["input"] = text;
    json res = post_json(scheme_host_port_, base_path_ + "/embeddings", api_key,
                         config_.timeout_ms, body);
    try {
        return res.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ProviderMalformedResponse("embedding response missing data[0].embedding");
    }
}

// ---------------------------------------------------------------------------
// AuditLog
// ---------------------------------------------------------------------------

AuditLog::AuditLog(const std::filesystem::path& file) : file_(file) {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error("cannot open audit log: " + file_.string());
}

void AuditLog::add_secret(std::string secret) {
    if (secret.empty()) return;
    std::lock_guard<std::mutex> lock(mutex_);
    secrets_.push_back(std::move(secret));
}

std::string AuditLog::redact(std::string_view text) const {
    std::string out(text);
    for (const std::string& secret : secrets_) {
        std::size_t pos = 0;
        while ((pos = out.find(secret, pos)) != std::string::npos) {
            out.replace(pos, secret.size(), "[REDACTED]");
            pos += 10;
        }
    }
    return out;
}

void AuditLog::record(std::string_view kind, const GenerationRequest& request,
                      std::string_view response, int retries) {
    std::lock_guard<std::mutex> lock(mutex_);
    ordered_json entry;
    entry["seq"] = sequence_++;
    entry["kind"] = std::string(kind);
    entry["model"] = request.model_id;
    entry["system_prompt"] = redact(request.system_prompt);
    entry["user_prompt"] = redact(request.user_prompt);
    entry["response"] = redact(response);
    entry["retries"] = retries;
    std::ofstream out(file_, std::ios::app);
    out << entry.dump() << '\n';
}

void AuditLog::record_embed(std::string_view model, std::string_view text, std::size_t dim) {
    std::lock_guard<std::mutex> lock(mutex_);
    ordered_json entry;
    entry["seq"] = sequence_++;
    entry["kind"] = "embed";
    entry["model"] = std::string(model);
    entry["text"] = redact(text);
    entry["dim"] = dim;
    std::ofstream out(file_, std::ios::app);
    out << entry.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

namespace {

class AdmissionGuard {
public:
    explicit AdmissionGuard(std::counting_semaphore<1 << 20>& sem) : sem_(sem) { sem_.acquire(); }
    ~AdmissionGuard() { sem_.release(); }
    AdmissionGuard(const AdmissionGuard&) = delete;
    AdmissionGuard& operator=(const AdmissionGuard&) = delete;

private:
    std::counting_semaphore<1 << 20>& sem_;
};

bool is_transient(const GatewayError& e) {
    return dynamic_cast<const RateLimited*>(&e) != nullptr ||
           dynamic_cast<const Timeout*>(&e) != nullptr;
}

} // namespace

Gateway::Gateway(std::shared_ptr<Provider> provider, ProviderConfig config,
                 std::shared_ptr<AuditLog> audit, Sleeper sleeper)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      audit_(std::move(audit)),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }),
      admission_(std::max(1, config_.max_concurrent_requests)),
      jitter_state_(config_.mock_seed ^ 0x6A09E667F3BCC908ULL) {}

int Gateway::backoff_ms(int attempt) {
    int base = std::max(1, config_.retry.base_backoff_ms);
    std::uint64_t jitter;
    {
        std::lock_guard<std::mutex> lock(jitter_mutex_);
        Rng rng(jitter_state_);
        jitter = rng.next();
        jitter_state_ = jitter;
    }
    return base * (1 << std::min(attempt, 10)) + static_cast<int>(jitter % static_cast<std::uint64_t>(base));
}

std::string Gateway::generate(const GenerationRequest& request) {
    if (request.temperature < 0.0) {
        throw ConfigError("temperature must be >= 0");
    }
    if (request.max_output_tokens < 1) {
        throw ConfigError("max_output_tokens must be >= 1");
    }
    AdmissionGuard guard(admission_);
    int attempt = 0;
    for (;;) {
        try {
            std::string out = provider_->generate(request);
            stats_.generate_calls.fetch_add(1);
            if (audit_) audit_->record("generate", request, out, attempt);
            return out;
        } catch (const GatewayError& e) {
            if (!is_transient(e) || attempt >= config_.retry.max_retries) throw;
            stats_.retries.fetch_add(1);
            sleeper_(backoff_ms(attempt));
            ++attempt;
        }
    }
}

std::vector<double> Gateway::embed(const std::string& text, const std::string& model_id) {
    AdmissionGuard guard(admission_);
    int attempt = 0;
    for (;;) {
        try {
            std::vector<double> out = provider_->embed(text, model_id);
            stats_.embed_calls.fetch_add(1);
            if (audit_) audit_->record_embed(model_id, text, out.size());
            return out;
        } catch (const GatewayError& e) {
            if (!is_transient(e) || attempt >= config_.retry.max_retries) throw;
            stats_.retries.fetch_add(1);
            sleeper_(backoff_ms(attempt));
            ++attempt;
        }
    }
}

std::vector<double> Gateway::score_options(const std::string& stem,
                                           const std::vector<std::string>& options) {
    AdmissionGuard guard(admission_);
    return provider_->score_options(stem, options);
}

// ---------------------------------------------------------------------------
// Structured-response parsing and repair
// ---------------------------------------------------------------------------

namespace {

bool is_word_boundary(const std::string& s, std::size_t pos, std::size_t len) {
    bool before = pos == 0 || !std::isalnum(static_cast<unsigned char>(s[pos - 1]));
    bool after =
        pos + len >= s.size() || !std::isalnum(static_cast<unsigned char>(s[pos + len]));
    return before && after;
}

} // namespace

std::string repair_structured_text(const std::string& text, int pass) {
    if (pass == 0) {
        // Strip code-fence lines, then trim to the outermost JSON value.
        std::string stripped;
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            std::string_view lv(line);
            while (!lv.empty() && (lv.front() == ' ' || lv.front() == '\t')) lv.remove_prefix(1);
            if (lv.substr(0, 3) == "```") continue;
            stripped += line;
            stripped.push_back('\n');
        }
        std::size_t first = stripped.find_first_of("[{");
        if (first != std::string::npos) {
            char close = stripped[first] == '[' ? ']' : '}';
            std::size_t last = stripped.find_last_of(close);
            if (last != std::string::npos && last > first) {
                return stripped.substr(first, last - first + 1);
            }
        }
        return stripped;
    }

    // Pass 1: single-quoted strings -> double-quoted, trailing commas removed,
    // Python literals mapped.
    std::string out;
    out.reserve(text.size());
    bool in_double = false;
    bool in_single = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_double) {
            out.push_back(c);
            if (c == '\\' && i + 1 < text.size()) {
                out.push_back(text[++i]);
            } else if (c == '"') {
                in_double = false;
            }
            continue;
        }
        if (in_single) {
            if (c == '\\' && i + 1 < text.size()) {
                char next = text[i + 1];
                if (next == '\'') {
                    out.push_back('\'');
                } else {
                    out.push_back(c);
                    out.push_back(next);
                }
                ++i;
                continue;
            }
            if (c == '\'') {
                out.push_back('"');
                in_single = false;
                continue;
            }
            if (c == '"') {
                out += "\\\"";
                continue;
            }
            out.push_back(c);
            continue;
        }
        if (c == '"') {
            in_double = true;
            out.push_back(c);
            continue;
        }
        if (c == '\'') {
            in_single = true;
            out.push_back('"');
            continue;
        }
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
            out.push_back(c);
            continue;
        }
        if (c == 'T' && text.compare(i, 4, "True") == 0 && is_word_boundary(text, i, 4)) {
            out += "true";
            i += 3;
            continue;
        }
        if (c == 'F' && text.compare(i, 5, "False") == 0 && is_word_boundary(text, i, 5)) {
            out += "false";
            i += 4;
            continue;
        }
        if (c == 'N' && text.compare(i, 4, "None") == 0 && is_word_boundary(text, i, 4)) {
            out += "null";
            i += 3;
            continue;
        }
        out.push_back(c);
    }
    return out;
}

nlohmann::ordered_json parse_structured_response(const std::string& raw) {
    std::string attempt = raw;
    for (int pass = 0; pass <= 2; ++pass) {
        try {
            return ordered_json::parse(attempt);
        } catch (const ordered_json::exception&) {
            if (pass == 2) break;
            attempt = repair_structured_text(attempt, pass);
        }
    }
    throw UnparseableResponse(raw);
}

} // namespace alexandria
