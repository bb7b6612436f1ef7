// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "alexandria/corpus.hpp"

namespace alexandria {

// Version tag recorded in every signature and KU file. Changing the hash or
// the shingling rule requires bumping this constant.
inline constexpr std::string_view kMinhashVersion = "mxs32-v1/3shingle";
inline constexpr int kSentenceShingleN = 3;

// Shingling normalization: ASCII lowercase, punctuation stripped, whitespace
// tokenized. Tokens that become empty are dropped.
std::vector<std::string> normalize_tokens(std::string_view text);

// A set of word n-grams; each item is the space-joined normalized token run.
struct ShingleSet {
    int n = 0;
    std::unordered_set<std::string> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    bool contains(const std::string& s) const { return items.count(s) > 0; }
};

ShingleSet shingle_set(std::string_view text, int n);

// |a∩b| / |a∪b|; 0.0 when both sets are empty.
double jaccard(const ShingleSet& a, const ShingleSet& b);

// Seeded 32-bit multiply-xor-shift hash over bytes.
std::uint32_t hash32(std::string_view data, std::uint64_t seed);

struct SentenceHash {
    std::uint32_t value = 0;
    std::size_t sentence_index = 0;

    bool operator==(const SentenceHash&) const = default;
};

// Minimum of hash32 over the text's word 3-shingles (1-shingles when the
// text has fewer than three words). Throws EmptySentence on empty input.
std::uint32_t text_minhash(std::string_view text, std::uint64_t seed);
SentenceHash sentence_minhash(const Sentence& sentence, std::uint64_t seed);

struct MinHashSignature {
    int k = 0;
    std::vector<std::uint32_t> values;
    std::uint64_t seed = 0;
    std::string version = std::string(kMinhashVersion);

    bool operator==(const MinHashSignature&) const = default;
};

// Standard k-permutation MinHash over a shingle set. Throws EmptyShingleSet.
MinHashSignature minhash_signature(const ShingleSet& shingles, int k, std::uint64_t seed);

// Fraction of matching signature slots; estimates Jaccard similarity.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

} // namespace alexandria
