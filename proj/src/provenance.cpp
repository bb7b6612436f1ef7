// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/provenance.hpp"

#include <cctype>
#include <limits>

#include "alexandria/errors.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (std::ispunct(uc)) continue;
        current.push_back(static_cast<char>(std::tolower(uc)));
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

ShingleSet shingle_set(std::string_view text, int n) {
    ShingleSet set;
    set.n = n;
    if (n < 1) return set;
    std::vector<std::string> tokens = normalize_tokens(text);
    if (tokens.size() < static_cast<std::size_t>(n)) return set;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string joined = tokens[i];
        for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
            joined.push_back(' ');
            joined += tokens[i + j];
        }
        set.items.insert(std::move(joined));
    }
    return set;
}

double jaccard(const ShingleSet& a, const ShingleSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    const ShingleSet& small = a.size() <= b.size() ? a : b;
    const ShingleSet& large = a.size() <= b.size() ? b : a;
    std::size_t intersection = 0;
    for (const auto& item : small.items) {
        if (large.items.count(item) > 0) ++intersection;
    }
    std::size_t uni = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(uni);
}

std::uint32_t hash32(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed ^ 0x9E3779B97F4A7C15ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0xFF51AFD7ED558CCDULL;
        h ^= h >> 33;
    }
    h *= 0xC4CEB9FE1A85EC53ULL;
    h ^= h >> 33;
    return static_cast<std::uint32_t>(h ^ (h >> 32));
}

std::uint32_t text_minhash(std::string_view text, std::uint64_t seed) {
    std::vector<std::string> tokens = normalize_tokens(text);
    if (tokens.empty()) {
        throw EmptySentence("sentence is empty after shingling normalization");
    }
    int n = tokens.size() < static_cast<std::size_t>(kSentenceShingleN) ? 1 : kSentenceShingleN;
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string joined = tokens[i];
        for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
            joined.push_back(' ');
            joined += tokens[i + j];
        }
        best = std::min(best, hash32(joined, seed));
    }
    return best;
}

SentenceHash sentence_minhash(const Sentence& sentence, std::uint64_t seed) {
    return SentenceHash{text_minhash(sentence.text, seed), sentence.index};
}

MinHashSignature minhash_signature(const ShingleSet& shingles, int k, std::uint64_t seed) {
    if (k < 1) throw Error("minhash signature requires k >= 1");
    if (shingles.empty()) {
        throw EmptyShingleSet("cannot sign an empty shingle set");
    }
    MinHashSignature sig;
    sig.k = k;
    sig.seed = seed;
    sig.values.reserve(static_cast<std::size_t>(k));
    Rng seeds(seed);
    for (int slot = 0; slot < k; ++slot) {
        std::uint64_t slot_seed = seeds.next();
        std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
        for (const auto& item : shingles.items) {
            best = std::min(best, hash32(item, slot_seed));
        }
        sig.values.push_back(best);
    }
    return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.k != b.k || a.values.size() != b.values.size()) {
        throw DimensionMismatch("signatures have different k");
    }
    if (a.seed != b.seed || a.version != b.version) {
        throw Error("signatures computed under different seeds or versions");
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(a.values.size());
}

} // namespace alexandria
