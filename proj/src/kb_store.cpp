// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/kb_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"

namespace alexandria {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kStoreVersion = "kb-v1";

std::string read_line_at(const std::filesystem::path& file, std::uint64_t offset) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CorruptStore("cannot open " + file.string());
    in.seekg(static_cast<std::streamoff>(offset));
    std::string line;
    if (!std::getline(in, line)) {
        throw CorruptStore("offset " + std::to_string(offset) + " does not start a record");
    }
    return line;
}

} // namespace

KnowledgeBase::KnowledgeBase(std::filesystem::path dir, bool writable)
    : dir_(std::move(dir)), writable_(writable) {}

KnowledgeBase::KnowledgeBase(KnowledgeBase&& other) noexcept
    : dir_(std::move(other.dir_)),
      writable_(other.writable_),
      lock_fd_(other.lock_fd_),
      order_(std::move(other.order_)),
      offsets_(std::move(other.offsets_)),
      entity_index_(std::move(other.entity_index_)),
      minhash_sets_(std::move(other.minhash_sets_)) {
    other.lock_fd_ = -1;
}

KnowledgeBase::~KnowledgeBase() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

KnowledgeBase KnowledgeBase::open(const std::filesystem::path& dir, bool writable) {
    KnowledgeBase kb(dir, writable);
    if (writable) {
        std::filesystem::create_directories(dir);
        std::filesystem::path lock_path = dir / "LOCK";
        kb.lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (kb.lock_fd_ < 0) throw CorruptStore("cannot create lock file in " + dir.string());
        if (::flock(kb.lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(kb.lock_fd_);
            kb.lock_fd_ = -1;
            throw CorruptStore("store " + dir.string() + " is locked by another writer");
        }
    } else if (!std::filesystem::is_directory(dir)) {
        throw NotFound("knowledge base not found: " + dir.string());
    }

    std::filesystem::path manifest_path = dir / "MANIFEST";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        json manifest;
        try {
            in >> manifest;
        } catch (const json::exception& e) {
            throw CorruptStore(std::string("MANIFEST is not valid JSON: ") + e.what());
        }
        if (manifest.value("schema_version", "") != std::string(kKuSchemaVersion) ||
            manifest.value("minhash_version", "") != std::string(kMinhashVersion)) {
            throw CorruptStore("MANIFEST schema or hash version mismatch in " + dir.string());
        }
    } else if (writable) {
        ordered_json manifest;
        manifest["store_version"] = kStoreVersion;
        manifest["schema_version"] = std::string(kKuSchemaVersion);
        manifest["minhash_version"] = std::string(kMinhashVersion);
        std::ofstream out(manifest_path);
        out << manifest.dump(2) << '\n';
    }

    if (!std::filesystem::exists(kb.records_path())) {
        if (!writable) throw NotFound("knowledge base has no records: " + dir.string());
        std::ofstream touch(kb.records_path(), std::ios::app);
    }

    kb.load_or_rebuild();
    return kb;
}

void KnowledgeBase::load_or_rebuild() {
    std::filesystem::path idx_path = dir_ / "kb.idx";
    std::filesystem::path ent_path = dir_ / "kb.ent";
    if (std::filesystem::exists(idx_path) && std::filesystem::exists(ent_path)) {
        try {
            json idx;
            {
                std::ifstream in(idx_path);
                in >> idx;
            }
            for (const auto& entry : idx.at("order")) order_.push_back(entry.get<std::string>());
            for (const auto& [doc_id, offset] : idx.at("offsets").items()) {
                offsets_[doc_id] = offset.get<std::uint64_t>();
            }
            for (const auto& [doc_id, hashes] : idx.at("minhashes").items()) {
                auto& set = minhash_sets_[doc_id];
                for (const auto& h : hashes) set.insert(h.get<std::uint32_t>());
            }
            json ent;
            {
                std::ifstream in(ent_path);
                in >> ent;
            }
            for (const auto& [name, hits] : ent.items()) {
                auto& list = entity_index_[name];
                for (const auto& hit : hits) {
                    list.emplace_back(hit.at(0).get<std::string>(),
                                      hit.at(1).get<std::size_t>());
                }
            }
            if (order_.size() == offsets_.size()) return;
        } catch (const json::exception&) {
            // fall through to a rebuild
        }
        order_.clear();
        offsets_.clear();
        entity_index_.clear();
        minhash_sets_.clear();
    }
    rebuild_from_scan();
    if (writable_ && !order_.empty()) write_sidecars();
}

void KnowledgeBase::rebuild_from_scan() {
    std::ifstream in(records_path(), std::ios::binary);
    if (!in) throw CorruptStore("cannot open " + records_path().string());
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        std::uint64_t record_offset = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        KuDocument kd;
        try {
            kd = parse_ku_document(line);
        } catch (const SchemaViolation& e) {
            throw CorruptStore("record at offset " + std::to_string(record_offset) +
                               " is unreadable: " + e.what());
        }
        index_document(kd, record_offset);
    }
}

void KnowledgeBase::index_document(const KuDocument& kd, std::uint64_t offset) {
    std::string doc_id = kd.doc_id();
    order_.push_back(doc_id);
    offsets_[doc_id] = offset;
    auto& hashes = minhash_sets_[doc_id];
    for (const KnowledgeUnit& ku : kd.units) {
        for (std::uint32_t h : ku.sentence_minhashes) hashes.insert(h);
        for (const Entity& entity : ku.entities) {
            entity_index_[normalize_key(entity.name)].emplace_back(doc_id, ku.chunk_index);
        }
    }
}

void KnowledgeBase::write_sidecars() const {
    ordered_json idx;
    idx["order"] = order_;
    idx["offsets"] = ordered_json::object();
    for (const auto& [doc_id, offset] : offsets_) idx["offsets"][doc_id] = offset;
    idx["minhashes"] = ordered_json::object();
    for (const auto& [doc_id, hashes] : minhash_sets_) {
        idx["minhashes"][doc_id] = std::vector<std::uint32_t>(hashes.begin(), hashes.end());
    }
    {
        std::ofstream out(dir_ / "kb.idx", std::ios::trunc);
        out << idx.dump() << '\n';
    }
    ordered_json ent = ordered_json::object();
    for (const auto& [name, hits] : entity_index_) {
        ordered_json list = ordered_json::array();
        for (const auto& [doc_id, chunk_index] : hits) {
            list.push_back(ordered_json::array({doc_id, chunk_index}));
        }
        ent[name] = std::move(list);
    }
    {
        std::ofstream out(dir_ / "kb.ent", std::ios::trunc);
        out << ent.dump() << '\n';
    }
}

IngestResult KnowledgeBase::put(const KuDocument& kd) {
    if (!writable_) throw Error("knowledge base opened read-only");
    std::string doc_id = kd.doc_id();
    if (doc_id.empty()) throw Error("cannot store a KuDocument with no units");
    if (offsets_.count(doc_id) > 0) {
        throw DuplicateDocId("doc_id already stored: " + doc_id);
    }

    IngestResult result;
    result.doc_id = doc_id;

    std::set<std::uint32_t> incoming;
    for (const KnowledgeUnit& ku : kd.units) {
        for (std::uint32_t h : ku.sentence_minhashes) incoming.insert(h);
    }
    if (!incoming.empty()) {
        for (const auto& [other_id, other_hashes] : minhash_sets_) {
            std::size_t shared = 0;
            for (std::uint32_t h : incoming) {
                if (other_hashes.count(h) > 0) ++shared;
            }
            double overlap = static_cast<double>(shared) / static_cast<double>(incoming.size());
            if (overlap >= kDuplicateOverlapThreshold) {
                result.duplicate_suspect = true;
                result.suspect_of.push_back(other_id);
            }
        }
    }

    KuDocument to_store = kd;
    for (const std::string& other : result.suspect_of) {
        to_store.store_flags.push_back("duplicate_suspect:" + other);
    }

    result.offset = std::filesystem::file_size(records_path());
    {
        std::ofstream out(records_path(), std::ios::app | std::ios::binary);
        if (!out) throw CorruptStore("cannot append to " + records_path().string());
        out << serialize_ku_document(to_store) << '\n';
        if (!out) throw CorruptStore("write to " + records_path().string() + " failed");
    }
    index_document(to_store, result.offset);
    write_sidecars();
    return result;
}

KuDocument KnowledgeBase::get(const std::string& doc_id) const {
    auto it = offsets_.find(doc_id);
    if (it == offsets_.end()) throw NotFound("no document with doc_id: " + doc_id);
    return parse_ku_document(read_line_at(records_path(), it->second));
}

std::vector<EntityHit> KnowledgeBase::query_entity(std::string_view name) const {
    std::vector<EntityHit> hits;
    auto it = entity_index_.find(normalize_key(name));
    if (it == entity_index_.end()) return hits;
    for (const auto& [doc_id, chunk_index] : it->second) {
        KuDocument kd = get(doc_id);
        for (const KnowledgeUnit& ku : kd.units) {
            if (ku.chunk_index != chunk_index) continue;
            for (const Entity& entity : ku.entities) {
                if (normalize_key(entity.name) == normalize_key(name)) {
                    hits.push_back({doc_id, chunk_index, entity});
                }
            }
        }
    }
    return hits;
}

std::vector<std::string> KnowledgeBase::doc_ids() const { return order_; }

} // namespace alexandria
