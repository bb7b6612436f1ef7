// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "alexandria/corpus.hpp"

namespace alexandria {

inline constexpr std::string_view kKuSchemaVersion = "ku-v1";
inline constexpr int kDefaultGuardN = 7;
inline constexpr int kMaxContextSummarySentences = 5;
inline constexpr int kMaxStyleDescriptorWords = 60;

// Attribute and relation values are a string or a list of strings.
using ValueOrList = std::variant<std::string, std::vector<std::string>>;
// Insertion-ordered key/value pairs; order is part of the canonical encoding.
using KeyedValues = std::vector<std::pair<std::string, ValueOrList>>;

// snake_case key normalization: lowercase ASCII, separator runs collapsed to
// a single underscore, leading/trailing underscores trimmed. Idempotent.
std::string normalize_key(std::string_view key);

struct Entity {
    std::string name;
    KeyedValues attributes;
    KeyedValues relations;

    bool operator==(const Entity&) const = default;
};

struct KnowledgeUnit {
    std::string ku_id;
    std::string doc_id;
    std::size_t chunk_index = 0;
    std::string context_summary;
    std::vector<std::uint32_t> sentence_minhashes;
    std::vector<Entity> entities;
    std::string extractor_model;
    std::string minhash_version;
    std::string created_at; // optional; empty in deterministic runs

    bool operator==(const KnowledgeUnit&) const = default;
};

struct DocumentHeader {
    std::string title;
    std::vector<std::string> authors;
    std::string genre;
    std::string style_descriptor;

    bool operator==(const DocumentHeader&) const = default;
};

struct ChunkFailure {
    std::size_t chunk_index = 0;
    std::string reason;
    std::string raw_response;

    bool operator==(const ChunkFailure&) const = default;
};

struct ExtractionRecord {
    std::string extractor_model;
    std::uint64_t seed = 0;
    std::string prompt_version;
    std::vector<ChunkFailure> failures;
    std::vector<std::string> notes;

    bool operator==(const ExtractionRecord&) const = default;
};

struct KuDocument {
    DocumentHeader header;
    std::vector<KnowledgeUnit> units;
    std::optional<ExtractionRecord> extraction;
    std::vector<std::string> store_flags;

    std::string doc_id() const { return units.empty() ? std::string() : units.front().doc_id; }

    bool operator==(const KuDocument&) const = default;
};

enum class Severity { warning, error };

struct Finding {
    Severity severity = Severity::warning;
    std::string category; // "schema", "leakage", "provenance", "structure"
    std::string path;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    std::size_t error_count() const;
    std::size_t warning_count() const;
    std::size_t leakage_count() const;
    bool ok(bool strict = false) const {
        return error_count() == 0 && (!strict || findings.empty());
    }
};

// Concatenation of the KU string values that the leakage guard inspects:
// context summary, attribute values, relation targets.
std::string ku_guard_text(const KnowledgeUnit& ku);

// Concatenation of every KU string value in canonical field order (context
// summary, then per entity: name, attribute values, relation targets). This
// is the KU-side text used for overlap scoring and embedding.
std::string ku_text(const KnowledgeUnit& ku);
std::string ku_document_text(const KuDocument& kd);

// Schema checks, leakage findings (shared guard_n-grams between the source
// chunk and the KU's string values), and provenance count checks. Leakage is
// warning-level by default, error-level in strict mode.
ValidationReport validate_ku(const KnowledgeUnit& ku, const Chunk& source_chunk,
                             int guard_n = kDefaultGuardN, bool strict = false);

// Structural checks on a whole document: unit ordering/contiguity, header
// style-descriptor length.
ValidationReport validate_ku_document(const KuDocument& kd);

// Canonical JSON encoding; round-trips exactly.
nlohmann::ordered_json entity_to_json(const Entity& entity);
nlohmann::ordered_json ku_to_json(const KnowledgeUnit& ku);
nlohmann::ordered_json ku_document_to_json(const KuDocument& kd);

Entity entity_from_json(const nlohmann::ordered_json& j, const std::string& path);
KnowledgeUnit ku_from_json(const nlohmann::ordered_json& j, const std::string& path);
KuDocument ku_document_from_json(const nlohmann::ordered_json& j);

// One KuDocument per line (JSONL-ready single line, UTF-8).
std::string serialize_ku_document(const KuDocument& kd);
KuDocument parse_ku_document(std::string_view bytes); // throws SchemaViolation

// Human-readable rendering: document header block followed by one
// "Knowledge Unit k of N" section per unit.
std::string render_ku_document(const KuDocument& kd);

} // namespace alexandria
