// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "alexandria/embed_baseline.hpp"
#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"
#include "support/paths.hpp"

using namespace alexandria;

TEST_CASE("cosine identities") {
    std::vector<double> v{3.0, 4.0, 0.0};
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-9));
    std::vector<double> e1{1.0, 0.0};
    std::vector<double> e2{0.0, 1.0};
    CHECK(cosine(e1, e2) == doctest::Approx(0.0).epsilon(1e-9));
    std::vector<double> neg{-3.0, -4.0, 0.0};
    CHECK(cosine(v, neg) == doctest::Approx(-1.0).epsilon(1e-9));

    std::vector<double> ints{2.0, 1.0, 0.0, 5.0};
    CHECK(cosine(ints, ints) == 1.0); // exact for integer-valued vectors

    CHECK_THROWS_AS(cosine(e1, v), DimensionMismatch);
    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(cosine(zero, e1), ZeroVector);
}

TEST_CASE("cosine is scale invariant") {
    std::vector<double> u{1.0, 2.0, 3.0};
    std::vector<double> v{0.5, -1.0, 2.0};
    std::vector<double> scaled = u;
    for (double& x : scaled) x *= 7.25;
    CHECK(cosine(scaled, v) == doctest::Approx(cosine(u, v)).epsilon(1e-12));
}

TEST_CASE("scramble_words permutes the word multiset deterministically") {
    std::string text = "alpha beta, gamma delta epsilon zeta eta theta iota kappa "
                       "lambda mu nu xi omicron pi rho sigma tau upsilon";
    std::string scrambled = scramble_words(text, 17);
    CHECK(scrambled == scramble_words(text, 17));
    CHECK(scrambled != text); // 20 words; seed 17 verified non-identity

    auto count_words_map = [](const std::string& s) {
        std::map<std::string, int> counts;
        std::istringstream in(s);
        std::string w;
        while (in >> w) counts[w] += 1;
        return counts;
    };
    CHECK(count_words_map(scrambled) == count_words_map(text));
    CHECK(scrambled.find("beta,") != std::string::npos); // punctuation travels with the word

    CHECK_THROWS_AS(scramble_words("single", 1), TooShort);
    CHECK_THROWS_AS(scramble_words("", 1), TooShort);
}

TEST_CASE("random_words_text draws from the vocabulary deterministically") {
    Vocabulary vocab = Vocabulary::load(testsupport::vocab_file());
    CHECK(vocab.size() > 400);
    std::string text = random_words_text(50, vocab, 9);
    CHECK(count_words(text) == 50);
    CHECK(text == random_words_text(50, vocab, 9));
    CHECK(text != random_words_text(50, vocab, 10));
    CHECK(random_words_text(0, vocab, 9).empty());
}

TEST_CASE("seeded derangements have no fixed points") {
    for (std::size_t n : {2u, 3u, 5u, 17u, 40u}) {
        for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
            auto perm = seeded_derangement(n, seed);
            REQUIRE(perm.size() == n);
            std::vector<bool> seen(n, false);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(perm[i] != i);
                CHECK(!seen[perm[i]]);
                seen[perm[i]] = true;
            }
        }
    }
    CHECK_THROWS_AS(seeded_derangement(1, 5), TooShort);
}

namespace {

std::pair<std::vector<Document>, KuDocument> study_fixture(int docs, const std::string& prefix) {
    std::vector<Document> corpus;
    KuDocument sample;
    for (int d = 0; d < docs; ++d) {
        std::string doc_id = prefix + std::to_string(d);
        std::string body = "The " + prefix + " system " + std::to_string(d) +
                           " reported stable values across nine hundred trials. "
                           "Measurements included voltage, current, and phase noise in run " +
                           std::to_string(d) + ". A control group calibrated the instrument.";
        corpus.push_back({doc_id, doc_id, {}, body, std::nullopt, DomainTag::physics});
    }
    return {corpus, sample};
}

KuDocument ku_for(const Document& doc) {
    KuDocument kd;
    kd.header.title = doc.title;
    kd.header.genre = "g";
    kd.header.style_descriptor = "s";
    KnowledgeUnit ku;
    ku.ku_id = doc.doc_id + "#0";
    ku.doc_id = doc.doc_id;
    ku.chunk_index = 0;
    ku.context_summary = "Stable values across many trials for " + doc.doc_id + ".";
    ku.sentence_minhashes = {1, 2, 3};
    Entity entity;
    entity.name = "Instrument " + doc.doc_id;
    entity.attributes.emplace_back("trials", std::string("900"));
    ku.entities.push_back(entity);
    ku.extractor_model = "fixture";
    ku.minhash_version = std::string(kMinhashVersion);
    kd.units.push_back(ku);
    return kd;
}

} // namespace

TEST_CASE("embedding study: bag-of-words embedder cannot see word order") {
    auto [corpus, unused] = study_fixture(6, "probe");
    testsupport::TempDir tmp("embedkb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    for (const Document& doc : corpus) kb.put(ku_for(doc));

    Gateway gateway(std::make_shared<MockProvider>(), ProviderConfig{});
    Vocabulary vocab = Vocabulary::load(testsupport::vocab_file());
    EmbeddingStudyConfig config;
    config.seed = 42;
    auto rows = run_embedding_study(corpus, kb, gateway, vocab, config);

    std::map<ControlVariant, EmbeddingStudyRow> by_variant;
    for (const auto& row : rows) by_variant[row.variant] = row;

    REQUIRE(by_variant.count(ControlVariant::original) == 1);
    REQUIRE(by_variant.count(ControlVariant::scrambled) == 1);
    REQUIRE(by_variant.count(ControlVariant::random_words) == 1);
    REQUIRE(by_variant.count(ControlVariant::unrelated_abstract) == 1);
    REQUIRE(by_variant.count(ControlVariant::ku_text) == 1);

    CHECK(by_variant[ControlVariant::original].mean_cosine == 1.0);
    CHECK(by_variant[ControlVariant::scrambled].mean_cosine == 1.0); // order-insensitive
    CHECK(by_variant[ControlVariant::random_words].mean_cosine < 0.6);
    CHECK(by_variant[ControlVariant::unrelated_abstract].mean_cosine < 1.0);
    CHECK(by_variant[ControlVariant::ku_text].mean_cosine > 0.0);
    for (const auto& [variant, row] : by_variant) {
        CHECK(row.n == corpus.size());
    }

    // Row order mirrors the published control table: lower bound first.
    CHECK(rows.front().variant == ControlVariant::random_words);
    CHECK(rows.back().variant == ControlVariant::original);

    std::string csv = embedding_rows_to_csv(rows);
    CHECK(csv.find("variant,n,mean_cosine,median_cosine") == 0);
    std::string table = render_embedding_table(rows);
    CHECK(table.find("Original-Scrambled Word Order | 1.00") != std::string::npos);
    CHECK(table.find("Original-Original (Upper Bound) | 1.00") != std::string::npos);
}

TEST_CASE("embedding study demands KUs for every abstract") {
    auto [corpus, unused] = study_fixture(3, "gap");
    testsupport::TempDir tmp("gapkb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    kb.put(ku_for(corpus[0])); // only one of three
    Gateway gateway(std::make_shared<MockProvider>(), ProviderConfig{});
    Vocabulary vocab = Vocabulary::load(testsupport::vocab_file());
    EmbeddingStudyConfig config;
    CHECK_THROWS_AS(run_embedding_study(corpus, kb, gateway, vocab, config), MissingKus);
}

TEST_CASE("single-domain-member corpora skip the unrelated variant") {
    auto [corpus, unused] = study_fixture(1, "solo");
    testsupport::TempDir tmp("solokb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    kb.put(ku_for(corpus[0]));
    Gateway gateway(std::make_shared<MockProvider>(), ProviderConfig{});
    Vocabulary vocab = Vocabulary::load(testsupport::vocab_file());
    EmbeddingStudyConfig config;
    auto rows = run_embedding_study(corpus, kb, gateway, vocab, config);
    for (const auto& row : rows) CHECK(row.variant != ControlVariant::unrelated_abstract);
}
