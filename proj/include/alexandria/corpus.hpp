// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace alexandria {

enum class DomainTag { medical, cs, math, physics, other };

DomainTag domain_tag_from_string(std::string_view s);
std::string to_string(DomainTag tag);

struct Document {
    std::string doc_id;
    std::string title;
    std::vector<std::string> authors;
    std::string body;
    std::optional<std::string> source_uri;
    DomainTag domain = DomainTag::other;

    bool operator==(const Document&) const = default;
};

// A sentence of the normalized body. `begin`/`end` are byte offsets; spans
// tile the body (each span runs up to the start of the next sentence, so
// separator whitespace belongs to the preceding sentence's span). `text` is
// the span content without the trailing separator.
struct Sentence {
    std::string text;
    std::size_t index = 0;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Sentence&) const = default;
};

enum class ChunkMode { token_range, word_target };

struct ChunkPolicy {
    ChunkMode mode = ChunkMode::token_range;
    int min_tokens = 200;
    int max_tokens = 500;
    int target_words = 200;

    static ChunkPolicy token_range(int min_tokens, int max_tokens) {
        return {ChunkMode::token_range, min_tokens, max_tokens, 200};
    }
    static ChunkPolicy word_target(int target_words) {
        return {ChunkMode::word_target, 200, 500, target_words};
    }
};

// Chunk flags. A chunk built around a single sentence longer than the token
// maximum is `oversized_sentence`; a chunk that had to close below the token
// minimum because such a sentence followed is `forced_undersize`.
inline constexpr unsigned kChunkOversizedSentence = 1u << 0;
inline constexpr unsigned kChunkForcedUndersize = 1u << 1;

struct Chunk {
    std::size_t chunk_index = 0;
    std::vector<Sentence> sentences;
    int token_count = 0;
    int word_count = 0;
    unsigned flags = 0;

    // Sentence texts joined with single spaces.
    std::string text() const;

    bool operator==(const Chunk&) const = default;
};

class AbbreviationSet {
public:
    static const AbbreviationSet& builtin();
    static AbbreviationSet load(const std::filesystem::path& file);

    void add(std::string entry) { entries_.insert(std::move(entry)); }
    bool contains(std::string_view token) const {
        return entries_.count(std::string(token)) > 0;
    }
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_set<std::string> entries_;
};

// Whitespace canonicalization + NFC + control-character stripping. Paragraph
// breaks survive as single '\n' bytes; every other whitespace run collapses
// to one space. Throws EmptyDocument if nothing remains.
std::string normalize_text(const std::string& raw);

int count_words(std::string_view text);

// Token counting is pluggable; the default approximates tokens as
// ceil(words * 4 / 3).
using TokenCounter = std::function<int(std::string_view)>;
int approx_token_count(std::string_view text);

std::vector<Sentence> split_sentences(const std::string& body,
                                      const AbbreviationSet& abbreviations =
                                          AbbreviationSet::builtin());

// A Document whose body has been normalized and sentence-split; the
// chunker's precondition, enforced by construction.
struct PreparedDocument {
    Document doc;
    std::vector<Sentence> sentences;
};

PreparedDocument prepare_document(Document doc,
                                  const AbbreviationSet& abbreviations =
                                      AbbreviationSet::builtin());

std::vector<Chunk> chunk_document(const PreparedDocument& prepared, const ChunkPolicy& policy,
                                  const TokenCounter& counter = approx_token_count);

// Corpus loading. A directory corpus holds one UTF-8 file per document with
// an optional leading metadata block (Title:/Authors:/Domain: lines); a
// .jsonl corpus has one {doc_id,title,authors,body,domain} object per line.
Document parse_text_document(std::string doc_id, const std::string& content);
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& file);
std::vector<Document> load_corpus(const std::filesystem::path& path);

} // namespace alexandria
