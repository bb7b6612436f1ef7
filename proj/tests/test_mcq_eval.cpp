// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "alexandria/errors.hpp"
#include "alexandria/mcq_eval.hpp"
#include "support/fact_coverage.hpp"
#include "support/paths.hpp"

using namespace alexandria;

namespace {

PromptLibrary& prompts() {
    static PromptLibrary lib(testsupport::prompts_dir());
    return lib;
}

Gateway mock_gateway() { return Gateway(std::make_shared<MockProvider>(), ProviderConfig{}); }

std::string fixture_body(const std::string& doc_id) {
    for (const Document& doc : load_corpus(testsupport::fixtures_dir() / "corpus")) {
        if (doc.doc_id == doc_id) return normalize_text(doc.body);
    }
    REQUIRE(false);
    return {};
}

// Applies a positive affine transform to the wrapped provider's scores.
class AffinescoreProvider : public Provider {
public:
    AffinescoreProvider(std::shared_ptr<Provider> inner, double scale, double shift)
        : inner_(std::move(inner)), scale_(scale), shift_(shift) {}
    std::string name() const override { return "affine"; }
    std::string generate(const GenerationRequest& r) override { return inner_->generate(r); }
    std::vector<double> embed(const std::string& t, const std::string& m) override {
        return inner_->embed(t, m);
    }
    bool supports_option_scoring() const override { return true; }
    std::vector<double> score_options(const std::string& stem,
                                      const std::vector<std::string>& options) override {
        auto scores = inner_->score_options(stem, options);
        for (double& s : scores) s = scale_ * s + shift_;
        return scores;
    }

private:
    std::shared_ptr<Provider> inner_;
    double scale_;
    double shift_;
};

// Completion-only provider for the letter-mode fallback path.
class LetterOnlyProvider : public Provider {
public:
    explicit LetterOnlyProvider(std::deque<std::string> replies) : replies_(std::move(replies)) {}
    std::string name() const override { return "letters"; }
    std::string generate(const GenerationRequest&) override {
        if (replies_.empty()) return "A";
        std::string out = replies_.front();
        replies_.pop_front();
        return out;
    }
    std::vector<double> embed(const std::string&, const std::string&) override { return {}; }

private:
    std::deque<std::string> replies_;
};

Mcq make_fact_mcq(const std::string& doc_id, const std::string& fact, int correct_slot) {
    Mcq mcq;
    mcq.question = testsupport::fact_question(fact);
    for (int i = 0; i < 4; ++i) {
        mcq.options[static_cast<std::size_t>(i)] =
            i == correct_slot ? fact : fact + "-alt" + std::to_string(i);
    }
    mcq.correct_index = correct_slot;
    mcq.doc_id = doc_id;
    mcq.question_set_id = "fixture";
    return mcq;
}

} // namespace

TEST_CASE("generate_mcqs returns validated, shuffled questions") {
    Gateway gateway = mock_gateway();
    McqGenOptions options;
    options.shuffle_seed = 99;
    std::vector<Mcq> mcqs =
        generate_mcqs(fixture_body("d02_physics_lattice"), 3, gateway, prompts(), "d02",
                      options);
    REQUIRE(mcqs.size() == 3);
    for (const Mcq& mcq : mcqs) {
        CHECK(!mcq.question.empty());
        CHECK(mcq.correct_index >= 0);
        CHECK(mcq.correct_index <= 3);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(!mcq.options[i].empty());
            for (std::size_t j = i + 1; j < 4; ++j) CHECK(mcq.options[i] != mcq.options[j]);
        }
        CHECK(mcq.doc_id == "d02");
        CHECK(mcq.question_set_id == "set0");
    }
}

TEST_CASE("the dark-matter fixture yields a question keyed to its distance value") {
    Gateway gateway = mock_gateway();
    McqGenOptions options;
    std::vector<Mcq> mcqs = generate_mcqs(fixture_body("d01_physics_darkmatter"), 3, gateway,
                                          prompts(), "d01", options);
    bool keyed = false;
    for (const Mcq& mcq : mcqs) {
        for (const auto& option : mcq.options) {
            if (option.find("259000") != std::string::npos) keyed = true;
        }
    }
    CHECK(keyed);
}

TEST_CASE("malformed generator items trigger regeneration then drop") {
    MockOptions options;
    // First response: one malformed item (3 options). Second: three good ones.
    options.scripted = {
        R"([{"question": "Q1?", "options": ["a", "b", "c"], "correct_index": 0}])",
        R"([{"question": "Q1?", "options": ["a", "b", "c", "d"], "correct_index": 0},
            {"question": "Q2?", "options": ["a", "b", "c", "d"], "correct_index": 1}])",
    };
    Gateway gateway(std::make_shared<MockProvider>(options), ProviderConfig{});
    McqGenOptions gen;
    std::vector<std::string> notes;
    std::vector<Mcq> mcqs = generate_mcqs("Source text.", 2, gateway, prompts(), "d", gen,
                                          &notes);
    REQUIRE(mcqs.size() == 2);
    CHECK(!notes.empty());
    CHECK(notes.front().find("malformed") != std::string::npos);
}

TEST_CASE("too few surviving questions is an error") {
    MockOptions options;
    options.scripted = {"[]", "[]", "[]"};
    Gateway gateway(std::make_shared<MockProvider>(options), ProviderConfig{});
    McqGenOptions gen;
    CHECK_THROWS_AS(generate_mcqs("Source.", 2, gateway, prompts(), "d", gen),
                    TooFewQuestions);
}

TEST_CASE("cloze ties break to the lowest index and survive affine transforms") {
    class ConstantProvider : public Provider {
    public:
        std::string name() const override { return "const"; }
        std::string generate(const GenerationRequest&) override { return ""; }
        std::vector<double> embed(const std::string&, const std::string&) override { return {}; }
        bool supports_option_scoring() const override { return true; }
        std::vector<double> score_options(const std::string&,
                                          const std::vector<std::string>& options) override {
            return std::vector<double>(options.size(), 0.5);
        }
    };
    Gateway tie_gateway(std::make_shared<ConstantProvider>(), ProviderConfig{});
    Mcq mcq = make_fact_mcq("d", "some fact", 2);
    AnswerOutcome tie = answer_mcq(mcq, EvalCondition::no_context, "", tie_gateway, prompts());
    CHECK(tie.mode == "cloze");
    CHECK(tie.chosen == 0); // tie -> lowest index

    auto base = std::make_shared<testsupport::FactCoverageProvider>(7);
    Gateway plain(base, ProviderConfig{});
    Gateway affine(std::make_shared<AffinescoreProvider>(base, 3.5, 11.0), ProviderConfig{});
    Mcq keyed = make_fact_mcq("d", "the moon is far", 1);
    std::string context = "we know the moon is far away";
    AnswerOutcome a = answer_mcq(keyed, EvalCondition::original_text, context, plain, prompts());
    AnswerOutcome b = answer_mcq(keyed, EvalCondition::original_text, context, affine, prompts());
    CHECK(a.chosen == b.chosen);
    CHECK(a.chosen == 1);
}

TEST_CASE("letter fallback parses strictly and reprompts once") {
    std::deque<std::string> replies{"The answer is B.", "B"};
    Gateway gateway(std::make_shared<LetterOnlyProvider>(replies), ProviderConfig{});
    Mcq mcq = make_fact_mcq("d", "fact", 0);
    AnswerOutcome outcome = answer_mcq(mcq, EvalCondition::no_context, "", gateway, prompts());
    CHECK(outcome.mode == "letter");
    CHECK(outcome.chosen == 1);

    std::deque<std::string> hopeless{"I refuse.", "Still refusing."};
    Gateway gateway2(std::make_shared<LetterOnlyProvider>(hopeless), ProviderConfig{});
    AnswerOutcome unanswered = answer_mcq(mcq, EvalCondition::no_context, "", gateway2,
                                          prompts());
    CHECK(!unanswered.chosen.has_value());
}

TEST_CASE("context preconditions are enforced") {
    Gateway gateway = mock_gateway();
    Mcq mcq = make_fact_mcq("d", "fact", 0);
    CHECK_THROWS_AS(answer_mcq(mcq, EvalCondition::no_context, "ctx", gateway, prompts()),
                    ConfigError);
    CHECK_THROWS_AS(answer_mcq(mcq, EvalCondition::original_text, "", gateway, prompts()),
                    ConfigError);
}

TEST_CASE("run_eval reproduces the constructed fact-coverage ordering exactly") {
    // 10 documents x 8 facts; the KU text covers facts 0..6 of each document
    // plus fact 7 of even documents -> coverage = (7*10 + 5) / 80 = 0.9375.
    std::vector<Document> corpus;
    std::vector<Mcq> questions;
    testsupport::TempDir tmp("factkb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    const int docs = 10;
    const int facts = 8;
    std::size_t covered = 0;
    for (int d = 0; d < docs; ++d) {
        std::string doc_id = "doc" + std::to_string(d);
        std::string body;
        KuDocument kd;
        kd.header.title = doc_id;
        kd.header.genre = "g";
        kd.header.style_descriptor = "s";
        KnowledgeUnit ku;
        ku.ku_id = doc_id + "#0";
        ku.doc_id = doc_id;
        ku.chunk_index = 0;
        ku.sentence_minhashes = {static_cast<std::uint32_t>(d + 1)};
        Entity entity;
        entity.name = "Entity " + std::to_string(d);
        std::string summary;
        for (int f = 0; f < facts; ++f) {
            std::string fact = "factword" + std::to_string(d) + "x" + std::to_string(f);
            body += "The record lists " + fact + " here. ";
            bool cover = f < 7 || d % 2 == 0;
            if (cover) {
                summary += fact + ". ";
                ++covered;
            }
            questions.push_back(make_fact_mcq(doc_id, fact, (d + f) % 4));
        }
        // The cap on summary sentences does not apply here; this KU is stored
        // directly, not validated.
        ku.context_summary = summary;
        ku.entities.push_back(entity);
        ku.extractor_model = "fixture";
        ku.minhash_version = std::string(kMinhashVersion);
        kd.units.push_back(ku);
        kb.put(kd);
        Document doc{doc_id, doc_id, {}, body, std::nullopt,
                     d % 2 == 0 ? DomainTag::physics : DomainTag::medical};
        corpus.push_back(doc);
    }
    double coverage = static_cast<double>(covered) / (docs * facts);

    Gateway gateway(std::make_shared<testsupport::FactCoverageProvider>(1234),
                    ProviderConfig{});
    EvalConfig config;
    config.model_ids = {"scorer"};
    config.seed = 5;
    config.audit_isolation = true;
    EvalReport report = run_eval(corpus, kb, gateway, prompts(), config, &questions);

    CHECK(report.isolation_violations.empty());

    auto accuracy_of = [&](EvalCondition condition) {
        std::size_t n = 0;
        std::size_t correct = 0;
        for (const EvalCell& cell : report.cells) {
            if (cell.condition != condition) continue;
            n += cell.n_questions;
            correct += cell.n_correct;
        }
        REQUIRE(n == static_cast<std::size_t>(docs * facts));
        return static_cast<double>(correct) / static_cast<double>(n);
    };
    CHECK(accuracy_of(EvalCondition::original_text) == 1.0);
    CHECK(accuracy_of(EvalCondition::knowledge_units) == coverage);
    double chance = accuracy_of(EvalCondition::no_context);
    CHECK(chance > 0.05);
    CHECK(chance < 0.50);
    CHECK(accuracy_of(EvalCondition::no_context) <
          accuracy_of(EvalCondition::knowledge_units));
    CHECK(accuracy_of(EvalCondition::knowledge_units) <=
          accuracy_of(EvalCondition::original_text));
}

TEST_CASE("bound inversions are annotated, not errors") {
    // Facts present only in the KU text: KU accuracy beats the original-text
    // condition, which the report must flag on the KU cell.
    testsupport::TempDir tmp("boundkb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    std::vector<Document> corpus;
    std::vector<Mcq> questions;
    for (int d = 0; d < 3; ++d) {
        std::string doc_id = "inv" + std::to_string(d);
        std::string fact = "hiddenfact" + std::to_string(d);
        corpus.push_back({doc_id, doc_id, {}, "The body never mentions it.", std::nullopt,
                          DomainTag::math});
        KuDocument kd;
        kd.header.title = doc_id;
        kd.header.genre = "g";
        kd.header.style_descriptor = "s";
        KnowledgeUnit ku;
        ku.ku_id = doc_id + "#0";
        ku.doc_id = doc_id;
        ku.chunk_index = 0;
        ku.context_summary = "Mentions " + fact + ".";
        ku.sentence_minhashes = {1};
        Entity entity;
        entity.name = "Entity";
        ku.entities.push_back(entity);
        ku.extractor_model = "fixture";
        ku.minhash_version = std::string(kMinhashVersion);
        kd.units.push_back(ku);
        kb.put(kd);
        questions.push_back(make_fact_mcq(doc_id, fact, 0));
    }
    Gateway gateway(std::make_shared<testsupport::FactCoverageProvider>(5), ProviderConfig{});
    EvalConfig config;
    config.model_ids = {"scorer"};
    EvalReport report = run_eval(corpus, kb, gateway, prompts(), config, &questions);
    bool annotated = false;
    for (const EvalCell& cell : report.cells) {
        if (cell.condition == EvalCondition::knowledge_units) {
            for (const std::string& a : cell.annotations) {
                if (a == "ku_accuracy_above_original_text") annotated = true;
            }
        }
    }
    CHECK(annotated);
}

TEST_CASE("accuracy is exact rational arithmetic") {
    EvalCell cell;
    cell.n_questions = 10;
    cell.n_correct = 7;
    CHECK(cell.accuracy() == 0.7);
    CHECK(cell.standard_error() == doctest::Approx(std::sqrt(0.7 * 0.3 / 10)).epsilon(1e-12));
}

TEST_CASE("set stddev needs at least two sets") {
    EvalCell cell;
    CHECK(cell.set_stddev() == 0.0);
    cell.per_set_accuracy = {0.8, 0.9, 1.0};
    CHECK(cell.set_stddev() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("run_eval demands KUs when the condition asks for them") {
    testsupport::TempDir tmp("emptykb");
    KnowledgeBase kb = KnowledgeBase::open(tmp.path() / "kb", true);
    std::vector<Document> corpus{{"lonely", "T", {}, "Some body text here.", std::nullopt,
                                  DomainTag::cs}};
    Gateway gateway = mock_gateway();
    EvalConfig config;
    try {
        run_eval(corpus, kb, gateway, prompts(), config);
        CHECK(false);
    } catch (const MissingKus& e) {
        CHECK(e.doc_ids() == std::vector<std::string>{"lonely"});
    }
}

TEST_CASE("eval csv and table render the expected shapes") {
    EvalReport report;
    EvalCell lower{"m1", EvalCondition::no_context, DomainTag::medical, 100, 30, {}, {}};
    EvalCell upper{"m1", EvalCondition::original_text, DomainTag::medical, 100, 95, {}, {}};
    EvalCell ku{"m1", EvalCondition::knowledge_units, DomainTag::medical, 100, 88, {}, {}};
    report.cells = {lower, upper, ku};
    std::string csv = report.to_csv();
    CHECK(csv.find("model,condition,domain") == 0);
    CHECK(csv.find("m1,no_context,medical,100,30,0.300000") != std::string::npos);
    std::string table = report.render_table();
    CHECK(table.find("medical [L-U]") != std::string::npos);
    CHECK(table.find("30.00-95.00") != std::string::npos);
    CHECK(table.find("88.00") != std::string::npos);
}

TEST_CASE("mcq fixtures round-trip through jsonl") {
    testsupport::TempDir tmp("mcqjsonl");
    std::vector<Mcq> mcqs{make_fact_mcq("d1", "fact one", 0), make_fact_mcq("d2", "fact two", 3)};
    save_mcqs_jsonl(tmp / "q.jsonl", mcqs);
    std::vector<Mcq> loaded = load_mcqs_jsonl(tmp / "q.jsonl");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == mcqs[0]);
    CHECK(loaded[1] == mcqs[1]);
}
