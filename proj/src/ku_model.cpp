// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/ku_model.hpp"

#include <algorithm>
#include <cctype>

#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"

namespace alexandria {

using nlohmann::ordered_json;

std::string normalize_key(std::string_view key) {
    std::string out;
    out.reserve(key.size());
    bool pending_separator = false;
    for (char c : key) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            if (pending_separator && !out.empty()) out.push_back('_');
            pending_separator = false;
            out.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            pending_separator = true;
        }
    }
    return out;
}

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(),
                      [](const Finding& f) { return f.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const {
    return findings.size() - error_count();
}

std::size_t ValidationReport::leakage_count() const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(),
                      [](const Finding& f) { return f.category == "leakage"; }));
}

namespace {

void append_piece(std::string& out, std::string_view piece) {
    if (piece.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += piece;
}

void append_value(std::string& out, const ValueOrList& value) {
    if (const auto* s = std::get_if<std::string>(&value)) {
        append_piece(out, *s);
    } else {
        for (const auto& item : std::get<std::vector<std::string>>(value)) {
            append_piece(out, item);
        }
    }
}

} // namespace

std::string ku_guard_text(const KnowledgeUnit& ku) {
    std::string out;
    append_piece(out, ku.context_summary);
    for (const Entity& entity : ku.entities) {
        for (const auto& [key, value] : entity.attributes) append_value(out, value);
        for (const auto& [key, value] : entity.relations) append_value(out, value);
    }
    return out;
}

std::string ku_text(const KnowledgeUnit& ku) {
    std::string out;
    append_piece(out, ku.context_summary);
    for (const Entity& entity : ku.entities) {
        append_piece(out, entity.name);
        for (const auto& [key, value] : entity.attributes) append_value(out, value);
        for (const auto& [key, value] : entity.relations) append_value(out, value);
    }
    return out;
}

std::string ku_document_text(const KuDocument& kd) {
    std::string out;
    for (const KnowledgeUnit& ku : kd.units) append_piece(out, ku_text(ku));
    return out;
}

namespace {

void check_keys(const KeyedValues& values, const std::string& path, const char* what,
                ValidationReport& report) {
    for (const auto& [key, value] : values) {
        if (key.empty()) {
            report.findings.push_back({Severity::error, "schema", path,
                                       std::string(what) + " has an empty key"});
        } else if (normalize_key(key) != key) {
            report.findings.push_back({Severity::error, "schema", path + "." + key,
                                       std::string(what) + " key is not snake_case"});
        }
        if (const auto* s = std::get_if<std::string>(&value); s && s->empty()) {
            report.findings.push_back(
                {Severity::error, "schema", path + "." + key, "value is empty"});
        }
    }
}

void check_relation_targets(const KnowledgeUnit& ku, ValidationReport& report) {
    auto resolve = [&](const std::string& target, const std::string& path) {
        for (const Entity& entity : ku.entities) {
            if (entity.name == target) return;
        }
        for (const Entity& entity : ku.entities) {
            std::string a = normalize_key(entity.name);
            std::string b = normalize_key(target);
            if (a == b) {
                report.findings.push_back(
                    {Severity::warning, "schema", path,
                     "relation target '" + target + "' nearly matches entity '" + entity.name +
                         "' but differs in surface form"});
                return;
            }
        }
        // Targets naming no entity are literals; nothing to check.
    };
    for (std::size_t e = 0; e < ku.entities.size(); ++e) {
        const Entity& entity = ku.entities[e];
        for (const auto& [key, value] : entity.relations) {
            std::string path = "entities[" + std::to_string(e) + "].relations." + key;
            if (const auto* s = std::get_if<std::string>(&value)) {
                resolve(*s, path);
            } else {
                for (const auto& item : std::get<std::vector<std::string>>(value)) {
                    resolve(item, path);
                }
            }
        }
    }
}

} // namespace

ValidationReport validate_ku(const KnowledgeUnit& ku, const Chunk& source_chunk, int guard_n,
                             bool strict) {
    ValidationReport report;
    if (guard_n < 3) guard_n = 3;

    // (a) schema
    if (ku.ku_id.empty()) {
        report.findings.push_back({Severity::error, "schema", "ku_id", "ku_id is empty"});
    }
    if (ku.doc_id.empty()) {
        report.findings.push_back({Severity::error, "schema", "doc_id", "doc_id is empty"});
    }
    if (ku.entities.empty()) {
        report.findings.push_back(
            {Severity::error, "schema", "entities", "a knowledge unit needs at least one entity"});
    }
    for (std::size_t e = 0; e < ku.entities.size(); ++e) {
        const Entity& entity = ku.entities[e];
        std::string path = "entities[" + std::to_string(e) + "]";
        if (entity.name.empty()) {
            report.findings.push_back(
                {Severity::error, "schema", path + ".name", "entity name is empty"});
        }
        check_keys(entity.attributes, path + ".attributes", "attribute", report);
        check_keys(entity.relations, path + ".relations", "relation", report);
    }
    check_relation_targets(ku, report);
    if (!ku.context_summary.empty()) {
        auto sentences = split_sentences(ku.context_summary);
        if (sentences.size() > static_cast<std::size_t>(kMaxContextSummarySentences)) {
            report.findings.push_back(
                {Severity::error, "schema", "context_summary",
                 "context summary has " + std::to_string(sentences.size()) +
                     " sentences (limit " + std::to_string(kMaxContextSummarySentences) + ")"});
        }
    }

    // (b) leakage: shared guard_n-grams between source and KU string values
    ShingleSet source = shingle_set(source_chunk.text(), guard_n);
    ShingleSet guarded = shingle_set(ku_guard_text(ku), guard_n);
    std::vector<std::string> shared;
    for (const auto& item : guarded.items) {
        if (source.contains(item)) shared.push_back(item);
    }
    std::sort(shared.begin(), shared.end());
    for (const auto& item : shared) {
        report.findings.push_back({strict ? Severity::error : Severity::warning, "leakage",
                                   "ku", "shared " + std::to_string(guard_n) + "-gram: \"" +
                                             item + "\""});
    }

    // (c) provenance
    if (ku.sentence_minhashes.size() != source_chunk.sentences.size()) {
        report.findings.push_back(
            {Severity::error, "provenance", "sentence_minhashes",
             "unit has " + std::to_string(ku.sentence_minhashes.size()) +
                 " minhashes for a chunk with " + std::to_string(source_chunk.sentences.size()) +
                 " sentences"});
    }
    if (ku.minhash_version != kMinhashVersion) {
        report.findings.push_back({Severity::warning, "provenance", "minhash_version",
                                   "minhash version '" + ku.minhash_version +
                                       "' differs from current '" +
                                       std::string(kMinhashVersion) + "'"});
    }
    return report;
}

ValidationReport validate_ku_document(const KuDocument& kd) {
    ValidationReport report;
    for (std::size_t i = 0; i < kd.units.size(); ++i) {
        if (kd.units[i].chunk_index != i) {
            report.findings.push_back(
                {Severity::warning, "structure", "units[" + std::to_string(i) + "]",
                 "chunk_index " + std::to_string(kd.units[i].chunk_index) +
                     " is not contiguous from 0 (failed chunks leave gaps)"});
            break;
        }
    }
    for (std::size_t i = 1; i < kd.units.size(); ++i) {
        if (kd.units[i].chunk_index <= kd.units[i - 1].chunk_index) {
            report.findings.push_back({Severity::error, "structure",
                                       "units[" + std::to_string(i) + "]",
                                       "units are not ordered by chunk_index"});
        }
        if (kd.units[i].doc_id != kd.units[0].doc_id) {
            report.findings.push_back({Severity::error, "structure",
                                       "units[" + std::to_string(i) + "].doc_id",
                                       "units belong to different documents"});
        }
    }
    int style_words = count_words(kd.header.style_descriptor);
    if (style_words > kMaxStyleDescriptorWords) {
        report.findings.push_back(
            {Severity::error, "structure", "header.style_descriptor",
             "style descriptor has " + std::to_string(style_words) + " words (limit " +
                 std::to_string(kMaxStyleDescriptorWords) + ")"});
    }
    return report;
}

namespace {

ordered_json value_to_json(const ValueOrList& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    return std::get<std::vector<std::string>>(value);
}

ordered_json keyed_to_json(const KeyedValues& values) {
    ordered_json out = ordered_json::object();
    for (const auto& [key, value] : values) out[key] = value_to_json(value);
    return out;
}

const ordered_json& require(const ordered_json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        throw SchemaViolation(path.empty() ? key : path + "." + key, "missing required field");
    }
    return j.at(key);
}

std::string require_string(const ordered_json& j, const char* key, const std::string& path) {
    const ordered_json& v = require(j, key, path);
    if (!v.is_string()) {
        throw SchemaViolation(path.empty() ? key : path + "." + key, "expected a string");
    }
    return v.get<std::string>();
}

ValueOrList value_from_json(const ordered_json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::vector<std::string> items;
        for (const auto& item : v) {
            if (item.is_string()) {
                items.push_back(item.get<std::string>());
            } else if (item.is_number() || item.is_boolean()) {
                items.push_back(item.dump());
            } else {
                throw SchemaViolation(path, "list values must be strings");
            }
        }
        return items;
    }
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw SchemaViolation(path, "expected a string or a list of strings");
}

KeyedValues keyed_from_json(const ordered_json& j, const std::string& path) {
    KeyedValues out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw SchemaViolation(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        out.emplace_back(key, value_from_json(value, path + "." + key));
    }
    return out;
}

} // namespace

ordered_json entity_to_json(const Entity& entity) {
    ordered_json j;
    j["name"] = entity.name;
    j["attributes"] = keyed_to_json(entity.attributes);
    j["relations"] = keyed_to_json(entity.relations);
    return j;
}

ordered_json ku_to_json(const KnowledgeUnit& ku) {
    ordered_json j;
    j["ku_id"] = ku.ku_id;
    j["doc_id"] = ku.doc_id;
    j["chunk_index"] = ku.chunk_index;
    j["context_summary"] = ku.context_summary;
    j["sentence_minhashes"] = ku.sentence_minhashes;
    j["entities"] = ordered_json::array();
    for (const Entity& entity : ku.entities) j["entities"].push_back(entity_to_json(entity));
    j["extractor_model"] = ku.extractor_model;
    j["minhash_version"] = ku.minhash_version;
    if (!ku.created_at.empty()) j["created_at"] = ku.created_at;
    return j;
}

ordered_json ku_document_to_json(const KuDocument& kd) {
    ordered_json j;
    ordered_json header;
    header["title"] = kd.header.title;
    header["authors"] = kd.header.authors;
    header["genre"] = kd.header.genre;
    header["style_descriptor"] = kd.header.style_descriptor;
    j["header"] = std::move(header);
    j["units"] = ordered_json::array();
    for (const KnowledgeUnit& ku : kd.units) j["units"].push_back(ku_to_json(ku));
    if (kd.extraction) {
        ordered_json rec;
        rec["extractor_model"] = kd.extraction->extractor_model;
        rec["seed"] = kd.extraction->seed;
        rec["prompt_version"] = kd.extraction->prompt_version;
        rec["failures"] = ordered_json::array();
        for (const ChunkFailure& f : kd.extraction->failures) {
            ordered_json fj;
            fj["chunk_index"] = f.chunk_index;
            fj["reason"] = f.reason;
            fj["raw_response"] = f.raw_response;
            rec["failures"].push_back(std::move(fj));
        }
        rec["notes"] = kd.extraction->notes;
        j["extraction"] = std::move(rec);
    }
    if (!kd.store_flags.empty()) j["store_flags"] = kd.store_flags;
    return j;
}

Entity entity_from_json(const ordered_json& j, const std::string& path) {
    Entity entity;
    entity.name = require_string(j, "name", path);
    entity.attributes = keyed_from_json(require(j, "attributes", path), path + ".attributes");
    entity.relations = keyed_from_json(require(j, "relations", path), path + ".relations");
    return entity;
}

KnowledgeUnit ku_from_json(const ordered_json& j, const std::string& path) {
    KnowledgeUnit ku;
    ku.ku_id = require_string(j, "ku_id", path);
    ku.doc_id = require_string(j, "doc_id", path);
    const ordered_json& idx = require(j, "chunk_index", path);
    if (!idx.is_number_unsigned()) {
        throw SchemaViolation(path + ".chunk_index", "expected a non-negative integer");
    }
    ku.chunk_index = idx.get<std::size_t>();
    ku.context_summary = require_string(j, "context_summary", path);
    const ordered_json& hashes = require(j, "sentence_minhashes", path);
    if (!hashes.is_array()) {
        throw SchemaViolation(path + ".sentence_minhashes", "expected an array");
    }
    for (const auto& h : hashes) {
        if (!h.is_number_unsigned()) {
            throw SchemaViolation(path + ".sentence_minhashes",
                                  "expected unsigned 32-bit integers");
        }
        ku.sentence_minhashes.push_back(h.get<std::uint32_t>());
    }
    const ordered_json& entities = require(j, "entities", path);
    if (!entities.is_array()) throw SchemaViolation(path + ".entities", "expected an array");
    for (std::size_t e = 0; e < entities.size(); ++e) {
        ku.entities.push_back(
            entity_from_json(entities[e], path + ".entities[" + std::to_string(e) + "]"));
    }
    ku.extractor_model = require_string(j, "extractor_model", path);
    ku.minhash_version = require_string(j, "minhash_version", path);
    if (j.contains("created_at")) ku.created_at = j.at("created_at").get<std::string>();
    return ku;
}

KuDocument ku_document_from_json(const ordered_json& j) {
    KuDocument kd;
    const ordered_json& header = require(j, "header", "");
    kd.header.title = require_string(header, "title", "header");
    const ordered_json& authors = require(header, "authors", "header");
    if (!authors.is_array()) throw SchemaViolation("header.authors", "expected an array");
    for (const auto& a : authors) kd.header.authors.push_back(a.get<std::string>());
    kd.header.genre = require_string(header, "genre", "header");
    kd.header.style_descriptor = require_string(header, "style_descriptor", "header");

    const ordered_json& units = require(j, "units", "");
    if (!units.is_array()) throw SchemaViolation("units", "expected an array");
    for (std::size_t i = 0; i < units.size(); ++i) {
        kd.units.push_back(ku_from_json(units[i], "units[" + std::to_string(i) + "]"));
    }
    if (j.contains("extraction") && !j.at("extraction").is_null()) {
        const ordered_json& rec = j.at("extraction");
        ExtractionRecord record;
        record.extractor_model = require_string(rec, "extractor_model", "extraction");
        record.seed = require(rec, "seed", "extraction").get<std::uint64_t>();
        record.prompt_version = require_string(rec, "prompt_version", "extraction");
        if (rec.contains("failures")) {
            for (const auto& f : rec.at("failures")) {
                ChunkFailure failure;
                failure.chunk_index = f.at("chunk_index").get<std::size_t>();
                failure.reason = f.value("reason", "");
                failure.raw_response = f.value("raw_response", "");
                record.failures.push_back(std::move(failure));
            }
        }
        if (rec.contains("notes")) {
            for (const auto& note : rec.at("notes")) record.notes.push_back(note.get<std::string>());
        }
        kd.extraction = std::move(record);
    }
    if (j.contains("store_flags")) {
        for (const auto& flag : j.at("store_flags")) kd.store_flags.push_back(flag.get<std::string>());
    }
    return kd;
}

std::string serialize_ku_document(const KuDocument& kd) {
    return ku_document_to_json(kd).dump();
}

KuDocument parse_ku_document(std::string_view bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const ordered_json::exception& e) {
        throw SchemaViolation("", std::string("invalid JSON: ") + e.what());
    }
    return ku_document_from_json(j);
}

std::string render_ku_document(const KuDocument& kd) {
    std::string out;
    out += "Title: " + kd.header.title + "\n";
    out += "Authors: ";
    for (std::size_t i = 0; i < kd.header.authors.size(); ++i) {
        if (i > 0) out += "; ";
        out += kd.header.authors[i];
    }
    out += "\nGenre: " + kd.header.genre + "\n";
    out += "Style: " + kd.header.style_descriptor + "\n";
    for (std::size_t i = 0; i < kd.units.size(); ++i) {
        const KnowledgeUnit& ku = kd.units[i];
        out += "\nKnowledge Unit " + std::to_string(i + 1) + " of " +
               std::to_string(kd.units.size()) + "\n";
        out += "Context. " + ku.context_summary + "\n";
        out += "Source Sentence MinHash: [";
        for (std::size_t h = 0; h < ku.sentence_minhashes.size(); ++h) {
            if (h > 0) out += ", ";
            out += std::to_string(ku.sentence_minhashes[h]);
        }
        out += "]\n";
        for (const Entity& entity : ku.entities) {
            out += entity_to_json(entity).dump(2);
            out += "\n";
        }
    }
    return out;
}

} // namespace alexandria
