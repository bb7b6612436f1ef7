// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alexandria/corpus.hpp"
#include "alexandria/ku_model.hpp"
#include "alexandria/llm_gateway.hpp"

namespace alexandria {

struct ExtractionConfig {
    int context_window_kus = 10;
    ChunkPolicy chunk_policy{};
    int guard_n = kDefaultGuardN;
    bool strict_leakage = false;
    std::string extractor_model = "mock-small";
    std::uint64_t seed = 42;
    std::uint64_t minhash_seed = 0;
    std::size_t max_prompt_chars = 48000;
    int max_content_retries = 2;
    std::string created_at; // stamped into KUs when non-empty
};

// Versioned prompt templates loaded from a directory of *.txt files. Each
// file names its task and version and carries SYSTEM/USER sections with
// {placeholder} substitution.
class PromptLibrary {
public:
    explicit PromptLibrary(const std::filesystem::path& dir);

    struct Rendered {
        std::string system;
        std::string user;
        std::string version;
    };

    Rendered render(const std::string& task,
                    const std::vector<std::pair<std::string, std::string>>& vars) const;
    const std::string& version(const std::string& task) const;

private:
    struct Template {
        std::string task;
        std::string version;
        std::string system;
        std::string user;
    };
    std::map<std::string, Template> templates_;
};

// Few-shot exemplars, one per domain tag, bundled as data files.
class ExemplarLibrary {
public:
    explicit ExemplarLibrary(const std::filesystem::path& dir);

    std::string extraction_block(DomainTag domain) const;
    std::string reconstruction_block(DomainTag domain) const;

private:
    struct Exemplar {
        std::string chunk;
        nlohmann::ordered_json ku;
        std::string prose;
    };
    const Exemplar& pick(DomainTag domain) const;
    std::map<std::string, Exemplar> by_domain_;
};

// Assembles the extraction request for one chunk: exemplar, header, the most
// recent `context_window_kus` previous units (oldest dropped first when the
// prompt budget is exceeded, with a note appended), and the chunk itself.
GenerationRequest build_extraction_prompt(const Chunk& chunk,
                                          const std::vector<KnowledgeUnit>& prev_kus,
                                          const DocumentHeader& header,
                                          const PromptLibrary& prompts,
                                          const ExemplarLibrary& exemplars, DomainTag domain,
                                          const ExtractionConfig& config,
                                          std::vector<std::string>* notes = nullptr);

// Chunk-by-chunk extraction with the rolling context window. Sentence
// minhashes are always computed locally, never taken from the model. Failed
// chunks are recorded and skipped; more than half failing raises
// ExtractionFailed.
KuDocument extract_document(const Document& doc, const ExtractionConfig& config,
                            Gateway& gateway, const PromptLibrary& prompts,
                            const ExemplarLibrary& exemplars);

} // namespace alexandria
