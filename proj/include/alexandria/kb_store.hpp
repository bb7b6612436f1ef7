// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "alexandria/ku_model.hpp"

namespace alexandria {

struct IngestResult {
    std::string doc_id;
    bool duplicate_suspect = false;
    std::vector<std::string> suspect_of;
    std::uint64_t offset = 0;
};

struct EntityHit {
    std::string doc_id;
    std::size_t chunk_index = 0;
    Entity entity;
};

// Append-only JSONL store of KuDocuments with sidecar indices. Layout:
// kb.jsonl (records), kb.idx (doc offsets + minhash sets), kb.ent (entity
// index), MANIFEST (schema + hash versions), LOCK (writer advisory lock).
// Sidecars are rebuildable from a full scan of kb.jsonl.
class KnowledgeBase {
public:
    static constexpr double kDuplicateOverlapThreshold = 0.9;

    static KnowledgeBase open(const std::filesystem::path& dir, bool writable = true);

    KnowledgeBase(KnowledgeBase&& other) noexcept;
    KnowledgeBase& operator=(KnowledgeBase&&) = delete;
    KnowledgeBase(const KnowledgeBase&) = delete;
    KnowledgeBase& operator=(const KnowledgeBase&) = delete;
    ~KnowledgeBase();

    // Appends a validated KuDocument. Exact doc_id collisions are rejected
    // with DuplicateDocId; a sentence-minhash overlap fraction >= 0.9 against
    // any stored document flags the record as a duplicate suspect but stores
    // it anyway.
    IngestResult put(const KuDocument& kd);

    KuDocument get(const std::string& doc_id) const;
    bool contains(const std::string& doc_id) const { return offsets_.count(doc_id) > 0; }

    // Case-insensitive entity lookup by normalized name.
    std::vector<EntityHit> query_entity(std::string_view name) const;

    std::vector<std::string> doc_ids() const; // ingest order
    std::size_t size() const { return order_.size(); }
    const std::filesystem::path& dir() const { return dir_; }

private:
    explicit KnowledgeBase(std::filesystem::path dir, bool writable);

    void load_or_rebuild();
    void rebuild_from_scan();
    void index_document(const KuDocument& kd, std::uint64_t offset);
    void write_sidecars() const;
    std::filesystem::path records_path() const { return dir_ / "kb.jsonl"; }

    std::filesystem::path dir_;
    bool writable_ = false;
    int lock_fd_ = -1;
    std::vector<std::string> order_;
    std::map<std::string, std::uint64_t> offsets_;
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> entity_index_;
    std::map<std::string, std::set<std::uint32_t>> minhash_sets_;
};

} // namespace alexandria
