// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alexandria/corpus.hpp"
#include "alexandria/kb_store.hpp"
#include "alexandria/llm_gateway.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

enum class ControlVariant { original, scrambled, unrelated_abstract, random_words, ku_text };

std::string to_string(ControlVariant variant);
std::string control_variant_label(ControlVariant variant); // human-readable row label

// dot(u,v) / sqrt(|u|^2 * |v|^2). The single square root keeps
// cosine(v, v) == 1.0 exact for integer-valued vectors.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

// Seeded uniform permutation of whitespace words; punctuation travels with
// its word. Throws TooShort for fewer than two words.
std::string scramble_words(std::string_view text, std::uint64_t seed);

// Frequency-weighted word list ("word weight" per line).
class Vocabulary {
public:
    static Vocabulary load(const std::filesystem::path& file);
    Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> weights);

    std::size_t size() const { return words_.size(); }
    const std::string& pick(Rng& rng) const;

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> cumulative_;
};

std::string random_words_text(int length_words, const Vocabulary& vocab, std::uint64_t seed);

// Seeded permutation with no fixed points; needs n >= 2.
std::vector<std::size_t> seeded_derangement(std::size_t n, std::uint64_t seed);

struct EmbeddingStudyRow {
    ControlVariant variant = ControlVariant::original;
    double mean_cosine = 0.0;
    double median_cosine = 0.0;
    std::size_t n = 0;
};

struct EmbeddingStudyConfig {
    std::string embed_model = "mock-bow";
    std::uint64_t seed = 42;
};

// Cosine similarity of each abstract against its control variants. Unrelated
// partners come from a seeded derangement within the same domain; domains
// with a single abstract contribute no unrelated pair.
std::vector<EmbeddingStudyRow> run_embedding_study(const std::vector<Document>& abstracts,
                                                   const KnowledgeBase& kb, Gateway& gateway,
                                                   const Vocabulary& vocab,
                                                   const EmbeddingStudyConfig& config);

std::string embedding_rows_to_csv(const std::vector<EmbeddingStudyRow>& rows);
std::string render_embedding_table(const std::vector<EmbeddingStudyRow>& rows);

} // namespace alexandria
