// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "alexandria/errors.hpp"
#include "alexandria/kb_store.hpp"
#include "alexandria/rng.hpp"
#include "support/generators.hpp"
#include "support/paths.hpp"

using namespace alexandria;

namespace {

KuDocument fixture_document() {
    std::ifstream in(testsupport::fixtures_dir() / "table1_ku.json");
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_ku_document(buffer.str());
}

} // namespace

TEST_CASE("put then get round-trips") {
    testsupport::TempDir tmp("kb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    Rng rng(1);
    KuDocument kd = testsupport::random_ku_document(rng);
    IngestResult result = kb.put(kd);
    CHECK(result.doc_id == kd.doc_id());
    CHECK(!result.duplicate_suspect);
    CHECK(kb.get(kd.doc_id()) == kd);
    CHECK(kb.doc_ids() == std::vector<std::string>{kd.doc_id()});
}

TEST_CASE("exact doc_id collisions are rejected") {
    testsupport::TempDir tmp("kbdup");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    Rng rng(2);
    KuDocument kd = testsupport::random_ku_document(rng);
    kb.put(kd);
    CHECK_THROWS_AS(kb.put(kd), DuplicateDocId);
}

TEST_CASE("identical minhash lists under a new doc_id raise a duplicate suspicion") {
    testsupport::TempDir tmp("kbsus");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    Rng rng(3);
    KuDocument original = testsupport::random_ku_document(rng);
    kb.put(original);

    KuDocument copy = original;
    std::string new_id = original.doc_id() + "-mirror";
    for (KnowledgeUnit& ku : copy.units) {
        ku.doc_id = new_id;
        ku.ku_id = new_id + "#" + std::to_string(ku.chunk_index);
    }
    IngestResult result = kb.put(copy);
    CHECK(result.duplicate_suspect);
    REQUIRE(result.suspect_of.size() == 1);
    CHECK(result.suspect_of[0] == original.doc_id());
    KuDocument stored = kb.get(new_id);
    REQUIRE(stored.store_flags.size() == 1);
    CHECK(stored.store_flags[0] == "duplicate_suspect:" + original.doc_id());

    // An unrelated document with disjoint hashes carries no flag.
    KuDocument other = testsupport::random_ku_document(rng);
    IngestResult clean = kb.put(other);
    CHECK(!clean.duplicate_suspect);
}

TEST_CASE("entity queries match case-insensitively") {
    testsupport::TempDir tmp("kbent");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    kb.put(fixture_document());
    auto hits = kb.query_entity("earth-moon system");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == "d01_physics_darkmatter");
    CHECK(hits[0].chunk_index == 0);
    CHECK(hits[0].entity.name == "Earth-Moon System");

    CHECK(kb.query_entity("EARTH MOON SYSTEM").size() == 1);
    CHECK(kb.query_entity("completely unknown").empty());
}

TEST_CASE("missing documents raise NotFound") {
    testsupport::TempDir tmp("kbmiss");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    CHECK_THROWS_AS(kb.get("nope"), NotFound);
}

TEST_CASE("indices rebuild from a scan to the same state") {
    testsupport::TempDir tmp("kbrebuild");
    std::vector<std::string> ids;
    Rng rng(4);
    {
        KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
        for (int i = 0; i < 5; ++i) {
            KuDocument kd = testsupport::random_ku_document(rng);
            kb.put(kd);
            ids.push_back(kd.doc_id());
        }
    }
    std::filesystem::remove(tmp.path() / "kb" / "kb.idx");
    std::filesystem::remove(tmp.path() / "kb" / "kb.ent");
    KnowledgeBase rebuilt = KnowledgeBase::open(tmp.path() / "kb", true);
    CHECK(rebuilt.doc_ids() == ids);
    for (const std::string& id : ids) {
        KuDocument kd = rebuilt.get(id);
        CHECK(kd.doc_id() == id);
        for (const KnowledgeUnit& ku : kd.units) {
            for (const Entity& entity : ku.entities) {
                bool found = false;
                for (const EntityHit& hit : rebuilt.query_entity(entity.name)) {
                    if (hit.doc_id == id && hit.chunk_index == ku.chunk_index &&
                        hit.entity == entity) {
                        found = true;
                    }
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("the store file is append-only across ingests") {
    testsupport::TempDir tmp("kbappend");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    Rng rng(5);
    KuDocument first = testsupport::random_ku_document(rng);
    kb.put(first);
    std::string before;
    {
        std::ifstream in(tmp.path() / "kb" / "kb.jsonl", std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        before = buffer.str();
    }
    kb.put(testsupport::random_ku_document(rng));
    std::string after;
    {
        std::ifstream in(tmp.path() / "kb" / "kb.jsonl", std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        after = buffer.str();
    }
    CHECK(after.substr(0, before.size()) == before);
}

TEST_CASE("a second writer is locked out while a writer is open") {
    testsupport::TempDir tmp("kblock");
    KnowledgeBase writer = KnowledgeBase::open(tmp.path() / "kb", true);
    CHECK_THROWS_AS(KnowledgeBase::open(tmp.path() / "kb", true), CorruptStore);
    KnowledgeBase reader = KnowledgeBase::open(tmp.path() / "kb", false);
    CHECK(reader.doc_ids().empty());
}

TEST_CASE("read-only stores refuse writes and mismatched manifests are rejected") {
    testsupport::TempDir tmp("kbro");
    {
        KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
        Rng rng(6);
        kb.put(testsupport::random_ku_document(rng));
    }
    KnowledgeBase reader = KnowledgeBase::open(tmp.path() / "kb", false);
    Rng rng(7);
    KuDocument kd = testsupport::random_ku_document(rng);
    CHECK_THROWS_AS(reader.put(kd), Error);

    {
        std::ofstream manifest(tmp.path() / "kb" / "MANIFEST", std::ios::trunc);
        manifest << R"({"schema_version":"ku-v999","minhash_version":"other"})" << "\n";
    }
    CHECK_THROWS_AS(KnowledgeBase::open(tmp.path() / "kb", false), CorruptStore);
}

TEST_CASE("corrupt records are reported on scan") {
    testsupport::TempDir tmp("kbcorrupt");
    {
        KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
        Rng rng(8);
        kb.put(testsupport::random_ku_document(rng));
    }
    {
        std::ofstream out(tmp.path() / "kb" / "kb.jsonl", std::ios::app);
        out << "{ not valid json at all\n";
    }
    std::filesystem::remove(tmp.path() / "kb" / "kb.idx");
    std::filesystem::remove(tmp.path() / "kb" / "kb.ent");
    CHECK_THROWS_AS(KnowledgeBase::open(tmp.path() / "kb", false), CorruptStore);
}
