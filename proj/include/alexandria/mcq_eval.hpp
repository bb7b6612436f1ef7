// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alexandria/corpus.hpp"
#include "alexandria/extraction.hpp"
#include "alexandria/kb_store.hpp"
#include "alexandria/llm_gateway.hpp"

namespace alexandria {

struct Mcq {
    std::string question;
    std::array<std::string, 4> options;
    int correct_index = 0;
    std::string doc_id;
    std::string generator_model;
    std::string question_set_id;

    bool operator==(const Mcq&) const = default;
};

enum class EvalCondition { no_context, original_text, knowledge_units };

std::string to_string(EvalCondition condition);
EvalCondition eval_condition_from_string(std::string_view s);

struct McqGenOptions {
    std::string generator_model = "mock-gen";
    std::string question_set_id = "set0";
    std::uint64_t shuffle_seed = 0; // recorded; option order is shuffled per question
    int max_regens = 2;
};

// Prompts the generator for `count` validated MCQs (4 pairwise-distinct
// options, valid correct index). Malformed items are regenerated up to
// max_regens times, then dropped with a note; fewer than `count` survivors
// raises TooFewQuestions.
std::vector<Mcq> generate_mcqs(const std::string& source, int count, Gateway& gateway,
                               const PromptLibrary& prompts, const std::string& doc_id,
                               const McqGenOptions& options,
                               std::vector<std::string>* notes = nullptr);

struct AnswerOutcome {
    std::optional<int> chosen; // nullopt: unanswered (counts as incorrect)
    std::string mode;          // "cloze" or "letter"
    std::string prompt;        // assembled prompt, for isolation audits
};

// Cloze scoring when the provider exposes per-option scores (argmax,
// deterministic tie-break to the lowest index); otherwise a constrained
// letter answer with strict parsing and one reprompt.
AnswerOutcome answer_mcq(const Mcq& mcq, EvalCondition condition,
                         const std::string& context_text, Gateway& gateway,
                         const PromptLibrary& prompts,
                         const std::string& answer_model_id = "mock-small");

struct EvalConfig {
    std::vector<std::string> model_ids{"mock-small"};
    std::vector<EvalCondition> conditions{EvalCondition::no_context,
                                          EvalCondition::original_text,
                                          EvalCondition::knowledge_units};
    int mcqs_per_doc = 3;
    int question_sets = 3;
    std::uint64_t seed = 42;
    std::string generator_model = "mock-gen";
    bool audit_isolation = false;
};

struct EvalCell {
    std::string model_id;
    EvalCondition condition = EvalCondition::no_context;
    DomainTag domain = DomainTag::other;
    std::size_t n_questions = 0;
    std::size_t n_correct = 0;
    std::vector<double> per_set_accuracy;
    std::vector<std::string> annotations;

    double accuracy() const {
        return n_questions == 0 ? 0.0
                                : static_cast<double>(n_correct) /
                                      static_cast<double>(n_questions);
    }
    double standard_error() const;
    double set_stddev() const; // sample stddev across question sets; 0 if < 2 sets
};

struct QuestionOutcome {
    std::string doc_id;
    std::string model_id;
    std::string question_set_id;
    EvalCondition condition = EvalCondition::no_context;
    int chosen = -1; // -1: unanswered
    int correct_index = 0;
    bool correct = false;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::vector<QuestionOutcome> outcomes;
    std::vector<std::string> isolation_violations;
    std::vector<std::string> notes;
    std::map<std::string, std::string> metadata;

    std::string to_csv() const;
    std::string render_table() const; // model rows, [lower-upper] + KU per domain
};

// Full cross-product evaluation: question sets x documents x models x
// conditions. Requires KUs in `kb` for every document when the
// knowledge-units condition is requested (MissingKus otherwise). Bound
// inversions (KU above original text or below no-context) are annotated,
// never errors. When `fixture_questions` is given they are used as a single
// question set instead of generating; `generated_out` receives every
// question used.
EvalReport run_eval(const std::vector<Document>& corpus, const KnowledgeBase& kb,
                    Gateway& gateway, const PromptLibrary& prompts, const EvalConfig& config,
                    const std::vector<Mcq>* fixture_questions = nullptr,
                    std::vector<Mcq>* generated_out = nullptr);

// MCQ fixture JSONL: {question, options[4], correct_index, doc_id} per line.
std::vector<Mcq> load_mcqs_jsonl(const std::filesystem::path& file);
void save_mcqs_jsonl(const std::filesystem::path& file, const std::vector<Mcq>& mcqs);

} // namespace alexandria
