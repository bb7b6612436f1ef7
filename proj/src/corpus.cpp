// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "alexandria/errors.hpp"
#include "alexandria/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace alexandria {

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return s;
}

// Replaces CRLF/CR line endings with LF. Pure byte pass, safe on UTF-8.
std::string canonicalize_newlines(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

// Maps every codepoint to '\n', ' ', nothing (controls), or itself.
std::string flatten_whitespace_classes(const std::string& composed) {
    std::string out;
    out.reserve(composed.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(composed.data());
    auto length = static_cast<int32_t>(composed.size());
    int32_t i = 0;
    while (i < length) {
        int32_t start = i;
        UChar32 cp = 0;
        U8_NEXT(bytes, i, length, cp);
        if (cp < 0) continue; // invalid sequence, drop
        if (cp == '\n') {
            out.push_back('\n');
            continue;
        }
        if (cp == '\t') {
            out.push_back(' ');
            continue;
        }
        int8_t type = u_charType(cp);
        if (type == U_PARAGRAPH_SEPARATOR) {
            out += "\n\n"; // U+2029 is an unconditional paragraph break
            continue;
        }
        if (type == U_SPACE_SEPARATOR || type == U_LINE_SEPARATOR) {
            out.push_back(' ');
            continue;
        }
        if (type == U_CONTROL_CHAR || type == U_FORMAT_CHAR) {
            continue;
        }
        out.append(composed, static_cast<std::size_t>(start),
                   static_cast<std::size_t>(i - start));
    }
    return out;
}

} // namespace

DomainTag domain_tag_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "medical" || lower == "medicine" || lower == "biology" || lower == "bio")
        return DomainTag::medical;
    if (lower == "cs" || lower == "computer science" || lower == "computer_science")
        return DomainTag::cs;
    if (lower == "math" || lower == "mathematics") return DomainTag::math;
    if (lower == "physics") return DomainTag::physics;
    return DomainTag::other;
}

std::string to_string(DomainTag tag) {
    switch (tag) {
    case DomainTag::medical: return "medical";
    case DomainTag::cs: return "cs";
    case DomainTag::math: return "math";
    case DomainTag::physics: return "physics";
    case DomainTag::other: return "other";
    }
    return "other";
}

std::string normalize_text(const std::string& raw) {
    std::string flat = flatten_whitespace_classes(nfc_normalize(canonicalize_newlines(raw)));

    std::string out;
    out.reserve(flat.size());
    std::size_t i = 0;
    const std::size_t n = flat.size();
    while (i < n && (flat[i] == ' ' || flat[i] == '\n')) ++i;
    while (i < n) {
        char c = flat[i];
        if (c != ' ' && c != '\n') {
            out.push_back(c);
            ++i;
            continue;
        }
        // Whitespace run: a blank line, or a newline followed by an indented
        // line, marks a paragraph break. Anything else is a soft wrap.
        std::size_t j = i;
        int newlines = 0;
        bool space_after_last_newline = false;
        while (j < n && (flat[j] == ' ' || flat[j] == '\n')) {
            if (flat[j] == '\n') {
                ++newlines;
                space_after_last_newline = false;
            } else if (newlines > 0) {
                space_after_last_newline = true;
            }
            ++j;
        }
        if (j >= n) break; // trailing whitespace dropped
        bool paragraph = newlines >= 2 || (newlines == 1 && space_after_last_newline);
        out.push_back(paragraph ? '\n' : ' ');
        i = j;
    }
    if (out.empty()) {
        throw EmptyDocument("document is empty after normalization");
    }
    return out;
}

int count_words(std::string_view text) {
    int words = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = (c == ' ' || c == '\n' || c == '\t');
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

int approx_token_count(std::string_view text) {
    int words = count_words(text);
    return (words * 4 + 2) / 3; // ceil(words * 4/3)
}

namespace {

// Closing punctuation that may sit between a terminator and the following
// whitespace, and opening punctuation that may precede the next capital.
const char* const kClosers[] = {"\"", "'", ")", "]", "”", "’", "»"};
const char* const kOpeners[] = {"\"", "'", "(", "[", "“", "‘", "«"};

std::size_t match_any(std::string_view body, std::size_t pos, const char* const (&set)[7]) {
    for (const char* s : set) {
        std::string_view sv(s);
        if (body.substr(pos, sv.size()) == sv) return sv.size();
    }
    return 0;
}

// "J." and "U.S." style dotted initials.
bool is_dotted_initials(std::string_view token) {
    if (token.size() < 2 || token.back() != '.') return false;
    std::size_t i = 0;
    while (i < token.size()) {
        if (!std::isalpha(static_cast<unsigned char>(token[i]))) return false;
        ++i;
        if (i >= token.size() || token[i] != '.') return false;
        ++i;
    }
    return true;
}

} // namespace

std::vector<Sentence> split_sentences(const std::string& body,
                                      const AbbreviationSet& abbreviations) {
    std::vector<Sentence> sentences;
    std::size_t start = 0;
    const std::size_t n = body.size();

    auto close = [&](std::size_t content_end, std::size_t next_start) {
        if (content_end > start) {
            Sentence s;
            s.text = body.substr(start, content_end - start);
            s.index = sentences.size();
            s.begin = start;
            s.end = next_start;
            sentences.push_back(std::move(s));
        }
        start = next_start;
    };

    std::size_t i = 0;
    while (i < n) {
        char c = body[i];
        if (c == '\n') {
            close(i, i + 1);
            ++i;
            continue;
        }
        if (c == '.' || c == '!' || c == '?') {
            std::size_t j = i + 1;
            while (j < n) {
                std::size_t m = match_any(body, j, kClosers);
                if (m == 0) break;
                j += m;
            }
            if (j < n && body[j] == ' ') {
                std::size_t k = j;
                while (k < n && body[k] == ' ') ++k;
                std::size_t cap = k;
                while (cap < n) {
                    std::size_t m = match_any(body, cap, kOpeners);
                    if (m == 0) break;
                    cap += m;
                }
                if (starts_with_uppercase(body, cap)) {
                    bool boundary = true;
                    if (c == '.') {
                        std::size_t t = i;
                        while (t > start && body[t - 1] != ' ' && body[t - 1] != '\n') --t;
                        std::string_view token(body.data() + t, i - t + 1);
                        if (abbreviations.contains(token) || is_dotted_initials(token)) {
                            boundary = false;
                        }
                    }
                    if (boundary) {
                        close(j, k);
                        i = k;
                        continue;
                    }
                }
            }
            i = j;
            continue;
        }
        ++i;
    }
    close(n, n);
    return sentences;
}

PreparedDocument prepare_document(Document doc, const AbbreviationSet& abbreviations) {
    doc.body = normalize_text(doc.body);
    PreparedDocument prepared;
    prepared.sentences = split_sentences(doc.body, abbreviations);
    prepared.doc = std::move(doc);
    return prepared;
}

std::string Chunk::text() const {
    std::string out;
    for (const Sentence& s : sentences) {
        if (!out.empty()) out.push_back(' ');
        out += s.text;
    }
    return out;
}

namespace {

std::size_t content_end(const Sentence& s) { return s.begin + s.text.size(); }

// Groups sentence indices into paragraphs: a sentence opens a new paragraph
// when the separator before it contains a newline.
std::vector<std::vector<std::size_t>> group_paragraphs(const PreparedDocument& prepared) {
    std::vector<std::vector<std::size_t>> paragraphs;
    const std::string& body = prepared.doc.body;
    for (std::size_t idx = 0; idx < prepared.sentences.size(); ++idx) {
        bool new_paragraph = paragraphs.empty();
        if (idx > 0) {
            const Sentence& prev = prepared.sentences[idx - 1];
            std::string_view sep(body.data() + content_end(prev), prev.end - content_end(prev));
            if (sep.find('\n') != std::string_view::npos) new_paragraph = true;
        }
        if (new_paragraph) paragraphs.emplace_back();
        paragraphs.back().push_back(idx);
    }
    return paragraphs;
}

class ChunkBuilder {
public:
    ChunkBuilder(const PreparedDocument& prepared, const TokenCounter& counter)
        : prepared_(prepared), counter_(counter) {}

    void append(std::size_t sentence_idx) {
        const Sentence& s = prepared_.sentences[sentence_idx];
        if (!text_.empty()) text_.push_back(' ');
        text_ += s.text;
        members_.push_back(sentence_idx);
    }

    int tokens() const { return text_.empty() ? 0 : counter_(text_); }
    int tokens_with(std::string_view extra) const {
        if (text_.empty()) return counter_(extra);
        std::string candidate = text_;
        candidate.push_back(' ');
        candidate += extra;
        return counter_(candidate);
    }
    int words() const { return count_words(text_); }
    bool empty() const { return members_.empty(); }

    void close(unsigned flags = 0) {
        if (members_.empty()) return;
        Chunk chunk;
        chunk.chunk_index = chunks_.size();
        for (std::size_t idx : members_) chunk.sentences.push_back(prepared_.sentences[idx]);
        chunk.token_count = counter_(text_);
        chunk.word_count = count_words(text_);
        chunk.flags = flags;
        chunks_.push_back(std::move(chunk));
        members_.clear();
        text_.clear();
    }

    void emit_single(std::size_t sentence_idx, unsigned flags) {
        close();
        append(sentence_idx);
        close(flags);
    }

    std::vector<Chunk> take() { return std::move(chunks_); }

private:
    const PreparedDocument& prepared_;
    const TokenCounter& counter_;
    std::vector<Chunk> chunks_;
    std::vector<std::size_t> members_;
    std::string text_;
};

std::vector<Chunk> chunk_token_range(const PreparedDocument& prepared, const ChunkPolicy& policy,
                                     const TokenCounter& counter) {
    ChunkBuilder builder(prepared, counter);
    for (const auto& paragraph : group_paragraphs(prepared)) {
        std::string para_text;
        for (std::size_t idx : paragraph) {
            if (!para_text.empty()) para_text.push_back(' ');
            para_text += prepared.sentences[idx].text;
        }
        if (builder.tokens_with(para_text) <= policy.max_tokens) {
            for (std::size_t idx : paragraph) builder.append(idx);
            if (builder.tokens() >= policy.min_tokens) builder.close();
            continue;
        }
        // Whole paragraph does not fit; fall back to sentence granularity.
        for (std::size_t idx : paragraph) {
            const Sentence& s = prepared.sentences[idx];
            int sentence_tokens = counter(s.text);
            if (sentence_tokens > policy.max_tokens) {
                if (!builder.empty()) {
                    builder.close(builder.tokens() >= policy.min_tokens
                                      ? 0u
                                      : kChunkForcedUndersize);
                }
                builder.emit_single(idx, kChunkOversizedSentence);
                continue;
            }
            if (builder.tokens_with(s.text) <= policy.max_tokens) {
                builder.append(idx);
                if (builder.tokens() >= policy.min_tokens) builder.close();
            } else {
                // Buffer is below min (it would have closed otherwise) but the
                // sentence cannot fit; close short rather than split it.
                builder.close(kChunkForcedUndersize);
                builder.append(idx);
                if (builder.tokens() >= policy.min_tokens) builder.close();
            }
        }
    }
    builder.close();
    return builder.take();
}

std::vector<Chunk> chunk_word_target(const PreparedDocument& prepared, const ChunkPolicy& policy,
                                     const TokenCounter& counter) {
    ChunkBuilder builder(prepared, counter);
    const int target = policy.target_words;
    for (std::size_t idx = 0; idx < prepared.sentences.size(); ++idx) {
        int sentence_words = count_words(prepared.sentences[idx].text);
        if (!builder.empty()) {
            int with = builder.words() + sentence_words;
            int without = builder.words();
            if (std::abs(with - target) > std::abs(without - target)) builder.close();
        }
        builder.append(idx);
    }
    builder.close();
    return builder.take();
}

} // namespace

std::vector<Chunk> chunk_document(const PreparedDocument& prepared, const ChunkPolicy& policy,
                                  const TokenCounter& counter) {
    if (prepared.sentences.empty()) {
        throw EmptyDocument("cannot chunk a document with no sentences");
    }
    if (policy.mode == ChunkMode::token_range) {
        return chunk_token_range(prepared, policy, counter);
    }
    return chunk_word_target(prepared, policy, counter);
}

const AbbreviationSet& AbbreviationSet::builtin() {
    static const AbbreviationSet set = [] {
        AbbreviationSet s;
        static const char* const kEntries[] = {
#include "abbreviations.inc"
        };
        for (const char* entry : kEntries) s.add(entry);
        return s;
    }();
    return set;
}

AbbreviationSet AbbreviationSet::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open abbreviation file: " + file.string());
    AbbreviationSet set;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view entry = trim(line);
        if (entry.empty() || entry.front() == '#') continue;
        set.add(std::string(entry));
    }
    return set;
}

Document parse_text_document(std::string doc_id, const std::string& content) {
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.title = doc.doc_id;

    std::istringstream in(content);
    std::string line;
    std::string body;
    bool in_header = true;
    while (std::getline(in, line)) {
        if (in_header) {
            std::string_view lv = trim(line);
            auto consume = [&](std::string_view prefix) -> std::optional<std::string> {
                if (lv.substr(0, prefix.size()) == prefix) {
                    return std::string(trim(lv.substr(prefix.size())));
                }
                return std::nullopt;
            };
            if (auto v = consume("Title:")) {
                doc.title = *v;
                continue;
            }
            if (auto v = consume("Authors:")) {
                doc.authors.clear();
                std::istringstream names(*v);
                std::string name;
                while (std::getline(names, name, ';')) {
                    std::string_view nv = trim(name);
                    if (!nv.empty()) doc.authors.emplace_back(nv);
                }
                continue;
            }
            if (auto v = consume("Domain:")) {
                doc.domain = domain_tag_from_string(*v);
                continue;
            }
            if (auto v = consume("Source:")) {
                doc.source_uri = *v;
                continue;
            }
            in_header = false;
            if (lv.empty()) continue; // separator between header and body
        }
        body += line;
        body.push_back('\n');
    }
    doc.body = body;
    return doc;
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    docs.reserve(files.size());
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw Error("cannot open corpus file: " + file.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        docs.push_back(parse_text_document(file.stem().string(), buffer.str()));
    }
    return docs;
}

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open corpus file: " + file.string());
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        Document doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        doc.title = j.value("title", doc.doc_id);
        if (j.contains("authors")) {
            for (const auto& a : j.at("authors")) doc.authors.push_back(a.get<std::string>());
        }
        doc.body = j.at("body").get<std::string>();
        doc.domain = domain_tag_from_string(j.value("domain", "other"));
        if (j.contains("source_uri")) doc.source_uri = j.at("source_uri").get<std::string>();
        docs.push_back(std::move(doc));
    }
    return docs;
}

namespace {

void check_unique_doc_ids(const std::vector<Document>& docs) {
    std::unordered_set<std::string> seen;
    for (const Document& doc : docs) {
        if (doc.doc_id.empty()) throw Error("corpus contains a document with an empty doc_id");
        if (!seen.insert(doc.doc_id).second) {
            throw Error("corpus contains a duplicate doc_id: " + doc.doc_id);
        }
    }
}

} // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::vector<Document> docs =
        std::filesystem::is_directory(path) ? load_corpus_dir(path) : load_corpus_jsonl(path);
    check_unique_doc_ids(docs);
    return docs;
}

} // namespace alexandria
