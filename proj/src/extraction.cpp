// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

using nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string lowercase_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

PromptLibrary::PromptLibrary(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("prompt directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::string content = read_file(entry.path());
        Template tpl;
        std::istringstream lines(content);
        std::string line;
        enum class Part { head, system, user } part = Part::head;
        while (std::getline(lines, line)) {
            if (line == "=== SYSTEM ===" && part == Part::head) {
                part = Part::system;
                continue;
            }
            if (line == "=== USER ===" && part == Part::system) {
                part = Part::user;
                continue;
            }
            switch (part) {
            case Part::head:
                if (line.rfind("TASK: ", 0) == 0) tpl.task = line.substr(6);
                if (line.rfind("VERSION: ", 0) == 0) tpl.version = line.substr(9);
                break;
            case Part::system:
                tpl.system += line;
                tpl.system.push_back('\n');
                break;
            case Part::user:
                tpl.user += line;
                tpl.user.push_back('\n');
                break;
            }
        }
        while (!tpl.system.empty() && tpl.system.back() == '\n') tpl.system.pop_back();
        while (!tpl.user.empty() && tpl.user.back() == '\n') tpl.user.pop_back();
        if (tpl.task.empty() || tpl.version.empty()) {
            throw ConfigError("prompt template missing TASK/VERSION header: " +
                              entry.path().string());
        }
        templates_[tpl.task] = std::move(tpl);
    }
    if (templates_.empty()) {
        throw ConfigError("no prompt templates in " + dir.string());
    }
}

namespace {

std::string substitute(const std::string& tpl,
                       const std::vector<std::pair<std::string, std::string>>& vars) {
    std::string out = tpl;
    for (const auto& [key, value] : vars) {
        std::string placeholder = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(placeholder, pos)) != std::string::npos) {
            out.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return out;
}

} // namespace

PromptLibrary::Rendered PromptLibrary::render(
    const std::string& task, const std::vector<std::pair<std::string, std::string>>& vars) const {
    auto it = templates_.find(task);
    if (it == templates_.end()) throw ConfigError("no prompt template for task: " + task);
    Rendered rendered;
    rendered.system = substitute(it->second.system, vars);
    rendered.user = substitute(it->second.user, vars);
    rendered.version = it->second.version;
    return rendered;
}

const std::string& PromptLibrary::version(const std::string& task) const {
    auto it = templates_.find(task);
    if (it == templates_.end()) throw ConfigError("no prompt template for task: " + task);
    return it->second.version;
}

ExemplarLibrary::ExemplarLibrary(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("exemplar directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        ordered_json j = ordered_json::parse(read_file(entry.path()));
        Exemplar ex;
        ex.chunk = j.at("chunk").get<std::string>();
        ex.ku = j.at("ku");
        ex.prose = j.value("prose", "");
        by_domain_[j.at("domain").get<std::string>()] = std::move(ex);
    }
    if (by_domain_.empty()) throw ConfigError("no exemplars in " + dir.string());
}

const ExemplarLibrary::Exemplar& ExemplarLibrary::pick(DomainTag domain) const {
    auto it = by_domain_.find(to_string(domain));
    if (it == by_domain_.end()) it = by_domain_.find("other");
    if (it == by_domain_.end()) it = by_domain_.begin();
    return it->second;
}

std::string ExemplarLibrary::extraction_block(DomainTag domain) const {
    const Exemplar& ex = pick(domain);
    return "Example chunk:\n" + ex.chunk + "\nExample output:\n" + ex.ku.dump(2);
}

std::string ExemplarLibrary::reconstruction_block(DomainTag domain) const {
    const Exemplar& ex = pick(domain);
    return "Example units:\n" + ex.ku.dump(2) + "\nExample prose:\n" + ex.prose;
}

namespace {

std::string header_block(const DocumentHeader& header) {
    std::string out = "Title: " + header.title + "\nAuthors: ";
    for (std::size_t i = 0; i < header.authors.size(); ++i) {
        if (i > 0) out += "; ";
        out += header.authors[i];
    }
    out += "\nGenre: " + header.genre + "\nStyle: " + header.style_descriptor;
    return out;
}

std::string previous_units_block(const std::vector<KnowledgeUnit>& prev_kus, std::size_t skip) {
    if (skip >= prev_kus.size()) return "(none)";
    std::string out;
    for (std::size_t i = skip; i < prev_kus.size(); ++i) {
        if (!out.empty()) out.push_back('\n');
        out += ku_to_json(prev_kus[i]).dump();
    }
    return out;
}

} // namespace

GenerationRequest build_extraction_prompt(const Chunk& chunk,
                                          const std::vector<KnowledgeUnit>& prev_kus,
                                          const DocumentHeader& header,
                                          const PromptLibrary& prompts,
                                          const ExemplarLibrary& exemplars, DomainTag domain,
                                          const ExtractionConfig& config,
                                          std::vector<std::string>* notes) {
    std::string exemplar = exemplars.extraction_block(domain);
    std::string header_text = header_block(header);

    std::size_t skip = 0;
    PromptLibrary::Rendered rendered;
    for (;;) {
        rendered = prompts.render("ku-extract",
                                  {{"header", header_text},
                                   {"previous_units", previous_units_block(prev_kus, skip)},
                                   {"exemplar", exemplar},
                                   {"chunk", chunk.text()}});
        std::size_t total = rendered.system.size() + rendered.user.size();
        if (total <= config.max_prompt_chars) break;
        if (skip >= prev_kus.size()) {
            throw PromptTooLarge("chunk " + std::to_string(chunk.chunk_index) +
                                 " exceeds the prompt budget even with no previous units (" +
                                 std::to_string(total) + " > " +
                                 std::to_string(config.max_prompt_chars) + " chars)");
        }
        if (notes != nullptr) {
            notes->push_back("chunk " + std::to_string(chunk.chunk_index) +
                             ": dropped previous unit " + prev_kus[skip].ku_id +
                             " to fit the prompt budget");
        }
        ++skip;
    }

    GenerationRequest request;
    request.system_prompt = rendered.system;
    request.user_prompt = rendered.user;
    request.model_id = config.extractor_model;
    request.temperature = 0.0;
    request.max_output_tokens = 2048;
    request.seed = config.seed;
    return request;
}

namespace {

// Converts a parsed model response into entities, normalizing keys on ingest.
std::vector<Entity> entities_from_model_json(const ordered_json& j) {
    if (!j.is_array()) throw SchemaViolation("entities", "expected an array");
    std::vector<Entity> entities;
    auto to_value = [](const ordered_json& v, const std::string& path) -> ValueOrList {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number() || v.is_boolean()) return v.dump();
        if (v.is_array()) {
            std::vector<std::string> items;
            for (const auto& item : v) {
                items.push_back(item.is_string() ? item.get<std::string>() : item.dump());
            }
            return items;
        }
        throw SchemaViolation(path, "expected a string or a list");
    };
    for (std::size_t i = 0; i < j.size(); ++i) {
        const ordered_json& ej = j[i];
        Entity entity;
        if (!ej.is_object() || !ej.contains("name") || !ej.at("name").is_string()) {
            throw SchemaViolation("entities[" + std::to_string(i) + "].name",
                                  "missing entity name");
        }
        entity.name = ej.at("name").get<std::string>();
        std::string path = "entities[" + std::to_string(i) + "]";
        if (ej.contains("attributes") && ej.at("attributes").is_object()) {
            for (const auto& [key, value] : ej.at("attributes").items()) {
                entity.attributes.emplace_back(normalize_key(key),
                                               to_value(value, path + ".attributes." + key));
            }
        }
        if (ej.contains("relations") && ej.at("relations").is_object()) {
            for (const auto& [key, value] : ej.at("relations").items()) {
                entity.relations.emplace_back(normalize_key(key),
                                              to_value(value, path + ".relations." + key));
            }
        }
        entities.push_back(std::move(entity));
    }
    return entities;
}

// Case-insensitive canonicalization to the first-seen surface form, applied
// to entity names and to relation targets that name known entities.
class NameCanonicalizer {
public:
    std::string canonical(const std::string& name) {
        std::string key = lowercase_copy(name);
        auto it = first_seen_.find(key);
        if (it == first_seen_.end()) {
            first_seen_.emplace(key, name);
            return name;
        }
        return it->second;
    }

    void apply_to_targets(Entity& entity) const {
        for (auto& [key, value] : entity.relations) {
            if (auto* s = std::get_if<std::string>(&value)) {
                rewrite(*s);
            } else {
                for (auto& item : std::get<std::vector<std::string>>(value)) rewrite(item);
            }
        }
    }

private:
    void rewrite(std::string& target) const {
        auto it = first_seen_.find(lowercase_copy(target));
        if (it != first_seen_.end()) target = it->second;
    }

    std::map<std::string, std::string> first_seen_;
};

} // namespace

KuDocument extract_document(const Document& doc, const ExtractionConfig& config,
                            Gateway& gateway, const PromptLibrary& prompts,
                            const ExemplarLibrary& exemplars) {
    PreparedDocument prepared = prepare_document(doc);
    std::vector<Chunk> chunks = chunk_document(prepared, config.chunk_policy);

    KuDocument kd;
    ExtractionRecord record;
    record.extractor_model = config.extractor_model;
    record.seed = config.seed;
    record.prompt_version = prompts.version("ku-extract");

    // Header: generated once from metadata plus the opening chunk.
    kd.header.title = prepared.doc.title;
    kd.header.authors = prepared.doc.authors;
    {
        std::string metadata = "Title: " + prepared.doc.title + "\nDomain: " +
                               to_string(prepared.doc.domain);
        auto rendered = prompts.render(
            "ku-header", {{"metadata", metadata}, {"excerpt", chunks.front().text()}});
        GenerationRequest request;
        request.system_prompt = rendered.system;
        request.user_prompt = rendered.user;
        request.model_id = config.extractor_model;
        request.seed = config.seed;
        try {
            ordered_json parsed = parse_structured_response(gateway.generate(request));
            kd.header.genre = parsed.value("genre", "");
            kd.header.style_descriptor = parsed.value("style_descriptor", "");
        } catch (const GatewayError&) {
            record.notes.push_back("header generation failed; using empty genre/style");
        }
    }

    NameCanonicalizer canonicalizer;
    std::vector<KnowledgeUnit> window;

    for (const Chunk& chunk : chunks) {
        std::size_t take = std::min(
            window.size(), static_cast<std::size_t>(std::max(0, config.context_window_kus)));
        std::vector<KnowledgeUnit> prev(window.end() - static_cast<std::ptrdiff_t>(take),
                                        window.end());
        KnowledgeUnit ku;
        bool ok = false;
        std::string failure_reason;
        std::string raw_response;
        try {
            GenerationRequest request =
                build_extraction_prompt(chunk, prev, kd.header, prompts, exemplars,
                                        prepared.doc.domain, config, &record.notes);
            ordered_json parsed;
            for (int attempt = 0;; ++attempt) {
                raw_response = gateway.generate(request);
                try {
                    parsed = parse_structured_response(raw_response);
                    break;
                } catch (const UnparseableResponse&) {
                    if (attempt >= config.max_content_retries) throw;
                }
            }
            ku.ku_id = prepared.doc.doc_id + "#" + std::to_string(chunk.chunk_index);
            ku.doc_id = prepared.doc.doc_id;
            ku.chunk_index = chunk.chunk_index;
            ku.context_summary = parsed.value("context_summary", "");
            ku.entities = entities_from_model_json(parsed.contains("entities")
                                                       ? parsed.at("entities")
                                                       : ordered_json::array());
            for (Entity& entity : ku.entities) {
                entity.name = canonicalizer.canonical(entity.name);
            }
            for (Entity& entity : ku.entities) canonicalizer.apply_to_targets(entity);
            for (const Sentence& sentence : chunk.sentences) {
                ku.sentence_minhashes.push_back(
                    sentence_minhash(sentence, config.minhash_seed).value);
            }
            ku.extractor_model = config.extractor_model;
            ku.minhash_version = std::string(kMinhashVersion);
            ku.created_at = config.created_at;

            ValidationReport report =
                validate_ku(ku, chunk, config.guard_n, config.strict_leakage);
            if (!report.ok(false)) {
                std::string what;
                for (const Finding& f : report.findings) {
                    if (f.severity != Severity::error) continue;
                    if (!what.empty()) what += "; ";
                    what += f.path + ": " + f.message;
                }
                failure_reason = "validation: " + what;
            } else {
                if (report.leakage_count() > 0) {
                    record.notes.push_back("chunk " + std::to_string(chunk.chunk_index) + ": " +
                                           std::to_string(report.leakage_count()) +
                                           " leakage warning(s)");
                }
                ok = true;
            }
        } catch (const UnparseableResponse& e) {
            failure_reason = "unparseable response";
            raw_response = e.raw();
        } catch (const PromptTooLarge& e) {
            failure_reason = e.what();
        } catch (const GatewayError& e) {
            failure_reason = std::string("provider error: ") + e.what();
        }

        if (ok) {
            kd.units.push_back(ku);
            window.push_back(std::move(ku));
        } else {
            record.failures.push_back(
                {chunk.chunk_index, failure_reason, raw_response.substr(0, 500)});
        }
    }

    if (record.failures.size() * 2 >= chunks.size()) {
        throw ExtractionFailed("document " + prepared.doc.doc_id + ": " +
                               std::to_string(record.failures.size()) + " of " +
                               std::to_string(chunks.size()) + " chunks failed");
    }
    kd.extraction = std::move(record);
    return kd;
}

} // namespace alexandria
