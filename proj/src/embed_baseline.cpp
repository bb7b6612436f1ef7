// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/embed_baseline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "alexandria/errors.hpp"

namespace alexandria {

std::string to_string(ControlVariant variant) {
    switch (variant) {
    case ControlVariant::original: return "original";
    case ControlVariant::scrambled: return "scrambled";
    case ControlVariant::unrelated_abstract: return "unrelated_abstract";
    case ControlVariant::random_words: return "random_words";
    case ControlVariant::ku_text: return "ku_text";
    }
    return "original";
}

std::string control_variant_label(ControlVariant variant) {
    switch (variant) {
    case ControlVariant::original: return "Original-Original (Upper Bound)";
    case ControlVariant::scrambled: return "Original-Scrambled Word Order";
    case ControlVariant::unrelated_abstract: return "Original-Unrelated Abstract";
    case ControlVariant::random_words: return "Original-Random Words (Lower Bound)";
    case ControlVariant::ku_text: return "Original-Knowledge Unit";
    }
    return "";
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) {
        throw DimensionMismatch("vectors have dimensions " + std::to_string(u.size()) + " and " +
                                std::to_string(v.size()));
    }
    double dot = 0.0;
    double norm_sq_u = 0.0;
    double norm_sq_v = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        norm_sq_u += u[i] * u[i];
        norm_sq_v += v[i] * v[i];
    }
    if (norm_sq_u == 0.0 || norm_sq_v == 0.0) {
        throw ZeroVector("cosine of an all-zero vector is undefined");
    }
    return dot / std::sqrt(norm_sq_u * norm_sq_v);
}

std::string scramble_words(std::string_view text, std::uint64_t seed) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        words.emplace_back(text.substr(start, i - start));
    }
    if (words.size() < 2) throw TooShort("need at least two words to scramble");
    Rng rng(seed);
    rng.shuffle(words);
    std::string out;
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) out.push_back(' ');
        out += words[w];
    }
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> weights)
    : words_(std::move(words)) {
    if (words_.empty() || words_.size() != weights.size()) {
        throw ConfigError("vocabulary needs matching non-empty word and weight lists");
    }
    cumulative_.reserve(weights.size());
    std::uint64_t total = 0;
    for (std::uint64_t w : weights) {
        total += std::max<std::uint64_t>(1, w);
        cumulative_.push_back(total);
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open vocabulary file: " + file.string());
    std::vector<std::string> words;
    std::vector<std::uint64_t> weights;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::istringstream parts(line);
        std::string word;
        std::uint64_t weight = 1;
        parts >> word >> weight;
        if (word.empty()) continue;
        words.push_back(std::move(word));
        weights.push_back(weight == 0 ? 1 : weight);
    }
    return Vocabulary(std::move(words), std::move(weights));
}

const std::string& Vocabulary::pick(Rng& rng) const {
    std::uint64_t target = rng.below(cumulative_.back());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return words_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::string random_words_text(int length_words, const Vocabulary& vocab, std::uint64_t seed) {
    Rng rng(seed);
    std::string out;
    for (int i = 0; i < length_words; ++i) {
        if (i > 0) out.push_back(' ');
        out += vocab.pick(rng);
    }
    return out;
}

std::vector<std::size_t> seeded_derangement(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw TooShort("a derangement needs at least two elements");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] == i) std::swap(perm[i], perm[(i + 1) % n]);
    }
    return perm;
}

std::vector<EmbeddingStudyRow> run_embedding_study(const std::vector<Document>& abstracts,
                                                   const KnowledgeBase& kb, Gateway& gateway,
                                                   const Vocabulary& vocab,
                                                   const EmbeddingStudyConfig& config) {
    if (abstracts.empty()) throw EmptyInput("no abstracts for the embedding study");
    {
        std::vector<std::string> missing;
        for (const Document& doc : abstracts) {
            if (!kb.contains(doc.doc_id)) missing.push_back(doc.doc_id);
        }
        if (!missing.empty()) throw MissingKus(std::move(missing));
    }

    std::vector<std::string> bodies;
    bodies.reserve(abstracts.size());
    for (const Document& doc : abstracts) bodies.push_back(normalize_text(doc.body));

    // Unrelated pairing: seeded derangement within each domain.
    std::map<std::string, std::vector<std::size_t>> by_domain;
    for (std::size_t i = 0; i < abstracts.size(); ++i) {
        by_domain[to_string(abstracts[i].domain)].push_back(i);
    }
    std::vector<std::ptrdiff_t> partner(abstracts.size(), -1);
    for (const auto& [domain, members] : by_domain) {
        if (members.size() < 2) continue;
        std::vector<std::size_t> perm =
            seeded_derangement(members.size(), seed_for(config.seed, "derange-" + domain));
        for (std::size_t k = 0; k < members.size(); ++k) {
            partner[members[k]] = static_cast<std::ptrdiff_t>(members[perm[k]]);
        }
    }

    std::map<ControlVariant, std::vector<double>> cosines;
    for (std::size_t i = 0; i < abstracts.size(); ++i) {
        std::vector<double> original = gateway.embed(bodies[i], config.embed_model);
        cosines[ControlVariant::original].push_back(cosine(original, original));

        std::string scrambled = scramble_words(bodies[i], seed_for(config.seed, "scramble", i));
        cosines[ControlVariant::scrambled].push_back(
            cosine(original, gateway.embed(scrambled, config.embed_model)));

        std::string random_text = random_words_text(
            count_words(bodies[i]), vocab, seed_for(config.seed, "random-words", i));
        cosines[ControlVariant::random_words].push_back(
            cosine(original, gateway.embed(random_text, config.embed_model)));

        std::string ku = ku_document_text(kb.get(abstracts[i].doc_id));
        if (!ku.empty()) {
            cosines[ControlVariant::ku_text].push_back(
                cosine(original, gateway.embed(ku, config.embed_model)));
        }

        if (partner[i] >= 0) {
            cosines[ControlVariant::unrelated_abstract].push_back(cosine(
                original,
                gateway.embed(bodies[static_cast<std::size_t>(partner[i])], config.embed_model)));
        }
    }

    const ControlVariant row_order[] = {ControlVariant::random_words,
                                        ControlVariant::unrelated_abstract,
                                        ControlVariant::ku_text, ControlVariant::scrambled,
                                        ControlVariant::original};
    std::vector<EmbeddingStudyRow> rows;
    for (ControlVariant variant : row_order) {
        auto it = cosines.find(variant);
        if (it == cosines.end() || it->second.empty()) continue;
        EmbeddingStudyRow row;
        row.variant = variant;
        row.n = it->second.size();
        double sum = 0.0;
        for (double c : it->second) sum += c;
        row.mean_cosine = sum / static_cast<double>(it->second.size());
        std::vector<double> sorted = it->second;
        std::sort(sorted.begin(), sorted.end());
        std::size_t mid = sorted.size() / 2;
        row.median_cosine = sorted.size() % 2 == 1
                                ? sorted[mid]
                                : 0.5 * (sorted[mid - 1] + sorted[mid]);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string format_double(double value, int decimals) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
    return buffer;
}

} // namespace

std::string embedding_rows_to_csv(const std::vector<EmbeddingStudyRow>& rows) {
    std::string out = "variant,n,mean_cosine,median_cosine\n";
    for (const EmbeddingStudyRow& row : rows) {
        out += to_string(row.variant) + "," + std::to_string(row.n) + "," +
               format_double(row.mean_cosine, 6) + "," + format_double(row.median_cosine, 6) +
               "\n";
    }
    return out;
}

std::string render_embedding_table(const std::vector<EmbeddingStudyRow>& rows) {
    std::ostringstream out;
    out << "Texts Compared | Mean Cosine Similarity\n";
    for (const EmbeddingStudyRow& row : rows) {
        out << control_variant_label(row.variant) << " | " << format_double(row.mean_cosine, 2)
            << "\n";
    }
    return out.str();
}

} // namespace alexandria
