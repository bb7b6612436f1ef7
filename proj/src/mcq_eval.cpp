// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/mcq_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "alexandria/errors.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

using nlohmann::ordered_json;

std::string to_string(EvalCondition condition) {
    switch (condition) {
    case EvalCondition::no_context: return "no_context";
    case EvalCondition::original_text: return "original_text";
    case EvalCondition::knowledge_units: return "knowledge_units";
    }
    return "no_context";
}

EvalCondition eval_condition_from_string(std::string_view s) {
    if (s == "no_context" || s == "lower") return EvalCondition::no_context;
    if (s == "original_text" || s == "upper") return EvalCondition::original_text;
    if (s == "knowledge_units" || s == "ku") return EvalCondition::knowledge_units;
    throw ConfigError("unknown eval condition: " + std::string(s));
}

namespace {

std::string format_double(double value, int decimals = 6) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
    return buffer;
}

std::optional<Mcq> mcq_from_item(const ordered_json& item, std::string* reason) {
    auto fail = [&](const char* why) {
        if (reason != nullptr) *reason = why;
        return std::nullopt;
    };
    if (!item.is_object()) return fail("item is not an object");
    if (!item.contains("question") || !item.at("question").is_string() ||
        item.at("question").get<std::string>().empty()) {
        return fail("missing question");
    }
    if (!item.contains("options") || !item.at("options").is_array() ||
        item.at("options").size() != 4) {
        return fail("options must be exactly 4");
    }
    Mcq mcq;
    mcq.question = item.at("question").get<std::string>();
    for (std::size_t i = 0; i < 4; ++i) {
        const ordered_json& opt = item.at("options")[i];
        if (!opt.is_string() || opt.get<std::string>().empty()) {
            return fail("options must be non-empty strings");
        }
        mcq.options[i] = opt.get<std::string>();
    }
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            if (mcq.options[i] == mcq.options[j]) return fail("options must be pairwise distinct");
        }
    }
    if (!item.contains("correct_index") || !item.at("correct_index").is_number_integer()) {
        return fail("missing correct_index");
    }
    int correct = item.at("correct_index").get<int>();
    if (correct < 0 || correct > 3) return fail("correct_index out of range");
    mcq.correct_index = correct;
    return mcq;
}

} // namespace

std::vector<Mcq> generate_mcqs(const std::string& source, int count, Gateway& gateway,
                               const PromptLibrary& prompts, const std::string& doc_id,
                               const McqGenOptions& options, std::vector<std::string>* notes) {
    if (count < 1) throw ConfigError("mcq count must be >= 1");
    std::vector<Mcq> valid;
    for (int attempt = 0; attempt <= options.max_regens && static_cast<int>(valid.size()) < count;
         ++attempt) {
        auto rendered = prompts.render(
            "mcq-generate", {{"count", std::to_string(count)}, {"source", source}});
        GenerationRequest request;
        request.system_prompt = rendered.system;
        request.user_prompt = rendered.user;
        if (attempt > 0) request.user_prompt += "\nATTEMPT: " + std::to_string(attempt);
        request.model_id = options.generator_model;
        request.temperature = 0.0;
        request.max_output_tokens = 2048;

        ordered_json items;
        try {
            items = parse_structured_response(gateway.generate(request));
        } catch (const UnparseableResponse&) {
            if (notes != nullptr) {
                notes->push_back(doc_id + "/" + options.question_set_id + ": attempt " +
                                 std::to_string(attempt) + " was unparseable");
            }
            continue;
        }
        if (!items.is_array()) continue;
        for (const auto& item : items) {
            if (static_cast<int>(valid.size()) >= count) break;
            std::string reason;
            auto mcq = mcq_from_item(item, &reason);
            if (!mcq) {
                if (notes != nullptr) {
                    notes->push_back(doc_id + "/" + options.question_set_id +
                                     ": dropped malformed item (" + reason + ")");
                }
                continue;
            }
            bool dup = std::any_of(valid.begin(), valid.end(), [&](const Mcq& existing) {
                return existing.question == mcq->question;
            });
            if (!dup) valid.push_back(std::move(*mcq));
        }
    }
    if (static_cast<int>(valid.size()) < count) {
        throw TooFewQuestions("wanted " + std::to_string(count) + " questions for " + doc_id +
                              ", only " + std::to_string(valid.size()) + " survived validation");
    }
    valid.resize(static_cast<std::size_t>(count));

    // Shuffle option order per question with a recorded seed.
    for (std::size_t q = 0; q < valid.size(); ++q) {
        Rng rng(seed_for(options.shuffle_seed, "mcq-option-shuffle", q));
        std::vector<int> perm{0, 1, 2, 3};
        rng.shuffle(perm);
        std::array<std::string, 4> shuffled;
        int new_correct = 0;
        for (int slot = 0; slot < 4; ++slot) {
            shuffled[slot] = valid[q].options[static_cast<std::size_t>(perm[slot])];
            if (perm[slot] == valid[q].correct_index) new_correct = slot;
        }
        valid[q].options = std::move(shuffled);
        valid[q].correct_index = new_correct;
        valid[q].doc_id = doc_id;
        valid[q].generator_model = options.generator_model;
        valid[q].question_set_id = options.question_set_id;
    }
    return valid;
}

namespace {

std::string options_block(const Mcq& mcq) {
    std::string out;
    for (int i = 0; i < 4; ++i) {
        out += static_cast<char>('A' + i);
        out += ") ";
        out += mcq.options[static_cast<std::size_t>(i)];
        if (i < 3) out.push_back('\n');
    }
    return out;
}

std::optional<int> parse_letter(const std::string& reply) {
    std::string_view v(reply);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    if (v.size() != 1) return std::nullopt;
    char c = v.front();
    if (c < 'A' || c > 'D') return std::nullopt;
    return c - 'A';
}

} // namespace

AnswerOutcome answer_mcq(const Mcq& mcq, EvalCondition condition,
                         const std::string& context_text, Gateway& gateway,
                         const PromptLibrary& prompts, const std::string& answer_model_id) {
    if ((condition == EvalCondition::no_context) != context_text.empty()) {
        throw ConfigError("context_text must be empty exactly for the no-context condition");
    }
    auto rendered = prompts.render("mcq-answer", {{"context", context_text},
                                                  {"question", mcq.question},
                                                  {"options", options_block(mcq)}});
    AnswerOutcome outcome;
    if (gateway.supports_option_scoring()) {
        // Cloze: options are scored as continuations of the stem, which ends
        // before the option list.
        std::string stem = rendered.user;
        std::size_t cut = stem.find("\n=== OPTIONS ===");
        if (cut != std::string::npos) stem.resize(cut);
        stem += "\n=== ANSWER ===";
        std::vector<std::string> option_list(mcq.options.begin(), mcq.options.end());
        std::vector<double> scores = gateway.score_options(stem, option_list);
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i] > scores[best]) best = i; // ties keep the lowest index
        }
        outcome.chosen = static_cast<int>(best);
        outcome.mode = "cloze";
        outcome.prompt = stem;
        return outcome;
    }

    outcome.mode = "letter";
    outcome.prompt = rendered.user;
    GenerationRequest request;
    request.system_prompt = rendered.system;
    request.user_prompt = rendered.user;
    request.model_id = answer_model_id;
    request.max_output_tokens = 8;
    std::optional<int> chosen = parse_letter(gateway.generate(request));
    if (!chosen) {
        request.user_prompt += "\nReply with exactly one letter: A, B, C, or D.";
        chosen = parse_letter(gateway.generate(request));
    }
    outcome.chosen = chosen;
    return outcome;
}

double EvalCell::standard_error() const {
    if (n_questions == 0) return 0.0;
    double p = accuracy();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_questions));
}

double EvalCell::set_stddev() const {
    if (per_set_accuracy.size() < 2) return 0.0;
    double mean = 0.0;
    for (double a : per_set_accuracy) mean += a;
    mean /= static_cast<double>(per_set_accuracy.size());
    double ss = 0.0;
    for (double a : per_set_accuracy) ss += (a - mean) * (a - mean);
    return std::sqrt(ss / static_cast<double>(per_set_accuracy.size() - 1));
}

EvalReport run_eval(const std::vector<Document>& corpus, const KnowledgeBase& kb,
                    Gateway& gateway, const PromptLibrary& prompts, const EvalConfig& config,
                    const std::vector<Mcq>* fixture_questions, std::vector<Mcq>* generated_out) {
    EvalReport report;

    bool wants_ku = std::find(config.conditions.begin(), config.conditions.end(),
                              EvalCondition::knowledge_units) != config.conditions.end();
    if (wants_ku) {
        std::vector<std::string> missing;
        for (const Document& doc : corpus) {
            if (!kb.contains(doc.doc_id)) missing.push_back(doc.doc_id);
        }
        if (!missing.empty()) throw MissingKus(std::move(missing));
    }

    std::vector<std::string> bodies;
    std::vector<std::string> ku_texts;
    bodies.reserve(corpus.size());
    ku_texts.reserve(corpus.size());
    for (const Document& doc : corpus) {
        bodies.push_back(normalize_text(doc.body));
        ku_texts.push_back(wants_ku ? ku_document_text(kb.get(doc.doc_id)) : std::string());
    }

    // Generate every question set up front; sets are shared across models and
    // conditions so accuracies are comparable.
    struct SetQuestions {
        std::vector<Mcq> mcqs;
        std::size_t doc_index = 0;
    };
    std::vector<std::vector<SetQuestions>> sets;
    if (fixture_questions != nullptr) {
        sets.resize(1);
        for (std::size_t d = 0; d < corpus.size(); ++d) {
            SetQuestions sq;
            sq.doc_index = d;
            for (const Mcq& mcq : *fixture_questions) {
                if (mcq.doc_id == corpus[d].doc_id) {
                    Mcq named = mcq;
                    if (named.question_set_id.empty()) named.question_set_id = "fixture";
                    sq.mcqs.push_back(std::move(named));
                }
            }
            if (!sq.mcqs.empty()) sets[0].push_back(std::move(sq));
        }
    } else {
        sets.resize(static_cast<std::size_t>(std::max(1, config.question_sets)));
        for (std::size_t r = 0; r < sets.size(); ++r) {
            for (std::size_t d = 0; d < corpus.size(); ++d) {
                McqGenOptions gen;
                gen.generator_model = config.generator_model;
                gen.question_set_id = "set" + std::to_string(r);
                gen.shuffle_seed = seed_for(config.seed, "mcq-shuffle", r * 1000003 + d);
                SetQuestions sq;
                sq.doc_index = d;
                sq.mcqs = generate_mcqs(bodies[d], config.mcqs_per_doc, gateway, prompts,
                                        corpus[d].doc_id, gen, &report.notes);
                sets[r].push_back(std::move(sq));
            }
        }
    }
    if (generated_out != nullptr) {
        for (const auto& set : sets) {
            for (const SetQuestions& sq : set) {
                generated_out->insert(generated_out->end(), sq.mcqs.begin(), sq.mcqs.end());
            }
        }
    }

    struct CellKey {
        std::string model;
        EvalCondition condition;
        DomainTag domain;
        bool operator<(const CellKey& other) const {
            return std::tie(model, condition, domain) <
                   std::tie(other.model, other.condition, other.domain);
        }
    };
    struct SetCounts {
        std::size_t n = 0;
        std::size_t correct = 0;
    };
    std::map<CellKey, EvalCell> cells;
    std::map<CellKey, std::vector<SetCounts>> per_set;

    for (const std::string& model : config.model_ids) {
        for (EvalCondition condition : config.conditions) {
            for (std::size_t r = 0; r < sets.size(); ++r) {
                for (const SetQuestions& sq : sets[r]) {
                    const Document& doc = corpus[sq.doc_index];
                    std::string context;
                    if (condition == EvalCondition::original_text) {
                        context = bodies[sq.doc_index];
                    } else if (condition == EvalCondition::knowledge_units) {
                        context = ku_texts[sq.doc_index];
                    }
                    for (const Mcq& mcq : sq.mcqs) {
                        AnswerOutcome answer =
                            answer_mcq(mcq, condition, context, gateway, prompts, model);

                        if (config.audit_isolation &&
                            condition == EvalCondition::no_context) {
                            if (answer.prompt.find(bodies[sq.doc_index]) != std::string::npos ||
                                (!ku_texts[sq.doc_index].empty() &&
                                 answer.prompt.find(ku_texts[sq.doc_index]) !=
                                     std::string::npos) ||
                                !prompt_section(answer.prompt, "CONTEXT").empty()) {
                                report.isolation_violations.push_back(
                                    model + "/" + doc.doc_id + "/" + mcq.question_set_id);
                            }
                        }

                        QuestionOutcome outcome;
                        outcome.doc_id = doc.doc_id;
                        outcome.model_id = model;
                        outcome.question_set_id = mcq.question_set_id;
                        outcome.condition = condition;
                        outcome.chosen = answer.chosen.value_or(-1);
                        outcome.correct_index = mcq.correct_index;
                        outcome.correct =
                            answer.chosen.has_value() && *answer.chosen == mcq.correct_index;
                        report.outcomes.push_back(outcome);

                        CellKey key{model, condition, doc.domain};
                        EvalCell& cell = cells[key];
                        cell.model_id = model;
                        cell.condition = condition;
                        cell.domain = doc.domain;
                        cell.n_questions += 1;
                        if (outcome.correct) cell.n_correct += 1;
                        auto& counts = per_set[key];
                        if (counts.size() < sets.size()) counts.resize(sets.size());
                        counts[r].n += 1;
                        if (outcome.correct) counts[r].correct += 1;
                    }
                }
            }
        }
    }

    for (auto& [key, cell] : cells) {
        const auto& counts = per_set[key];
        if (counts.size() >= 2) {
            for (const SetCounts& sc : counts) {
                cell.per_set_accuracy.push_back(
                    sc.n == 0 ? 0.0
                              : static_cast<double>(sc.correct) / static_cast<double>(sc.n));
            }
        }
    }

    // Bound checks: annotate KU cells that invert against their bounds.
    for (auto& entry : cells) {
        const CellKey& key = entry.first;
        EvalCell& cell = entry.second;
        if (key.condition != EvalCondition::knowledge_units) continue;
        auto find_acc = [&](EvalCondition c) -> std::optional<double> {
            auto it = cells.find(CellKey{key.model, c, key.domain});
            if (it == cells.end()) return std::nullopt;
            return it->second.accuracy();
        };
        if (auto upper = find_acc(EvalCondition::original_text);
            upper && cell.accuracy() > *upper) {
            cell.annotations.push_back("ku_accuracy_above_original_text");
        }
        if (auto lower = find_acc(EvalCondition::no_context); lower && cell.accuracy() < *lower) {
            cell.annotations.push_back("ku_accuracy_below_no_context");
        }
    }

    for (auto& [key, cell] : cells) report.cells.push_back(cell);

    report.metadata["seed"] = std::to_string(config.seed);
    report.metadata["mcqs_per_doc"] = std::to_string(config.mcqs_per_doc);
    report.metadata["question_sets"] = std::to_string(config.question_sets);
    report.metadata["generator_model"] = config.generator_model;
    report.metadata["answer_mode"] = gateway.supports_option_scoring() ? "cloze" : "letter";
    report.metadata["prompt_version_generate"] = prompts.version("mcq-generate");
    report.metadata["prompt_version_answer"] = prompts.version("mcq-answer");
    return report;
}

std::string EvalReport::to_csv() const {
    std::string out =
        "model,condition,domain,n_questions,n_correct,accuracy,stderr,set_stddev,annotations\n";
    for (const EvalCell& cell : cells) {
        out += cell.model_id + "," + to_string(cell.condition) + "," + to_string(cell.domain) +
               "," + std::to_string(cell.n_questions) + "," + std::to_string(cell.n_correct) +
               "," + format_double(cell.accuracy()) + "," + format_double(cell.standard_error()) +
               "," + format_double(cell.set_stddev()) + ",";
        for (std::size_t i = 0; i < cell.annotations.size(); ++i) {
            if (i > 0) out += "|";
            out += cell.annotations[i];
        }
        out += "\n";
    }
    return out;
}

std::string EvalReport::render_table() const {
    const DomainTag domain_order[] = {DomainTag::medical, DomainTag::cs, DomainTag::math,
                                      DomainTag::physics, DomainTag::other};
    std::vector<DomainTag> domains;
    std::vector<std::string> models;
    for (const EvalCell& cell : cells) {
        if (std::find(models.begin(), models.end(), cell.model_id) == models.end()) {
            models.push_back(cell.model_id);
        }
    }
    std::sort(models.begin(), models.end());
    for (DomainTag d : domain_order) {
        bool present = std::any_of(cells.begin(), cells.end(),
                                   [&](const EvalCell& c) { return c.domain == d; });
        if (present) domains.push_back(d);
    }

    auto acc_of = [&](const std::string& model, EvalCondition condition,
                      DomainTag domain) -> std::optional<double> {
        for (const EvalCell& cell : cells) {
            if (cell.model_id == model && cell.condition == condition && cell.domain == domain) {
                return cell.accuracy();
            }
        }
        return std::nullopt;
    };
    auto pct = [](double v) { return format_double(v * 100.0, 2); };

    std::ostringstream out;
    out << std::left << std::setw(20) << "Model";
    for (DomainTag d : domains) {
        out << std::setw(18) << (to_string(d) + " [L-U]") << std::setw(14)
            << (to_string(d) + " KU");
    }
    out << "\n";
    for (const std::string& model : models) {
        out << std::left << std::setw(20) << model;
        for (DomainTag d : domains) {
            auto lower = acc_of(model, EvalCondition::no_context, d);
            auto upper = acc_of(model, EvalCondition::original_text, d);
            auto ku = acc_of(model, EvalCondition::knowledge_units, d);
            std::string bounds = (lower ? pct(*lower) : std::string("-")) + "-" +
                                 (upper ? pct(*upper) : std::string("-"));
            out << std::setw(18) << bounds << std::setw(14) << (ku ? pct(*ku) : std::string("-"));
        }
        out << "\n";
    }
    return out.str();
}

std::vector<Mcq> load_mcqs_jsonl(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open MCQ file: " + file.string());
    std::vector<Mcq> mcqs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::exception& e) {
            throw Error("MCQ line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string reason;
        auto mcq = mcq_from_item(j, &reason);
        if (!mcq) {
            throw Error("MCQ line " + std::to_string(line_no) + ": " + reason);
        }
        mcq->doc_id = j.value("doc_id", "");
        mcq->generator_model = j.value("generator_model", "");
        mcq->question_set_id = j.value("question_set_id", "");
        mcqs.push_back(std::move(*mcq));
    }
    return mcqs;
}

void save_mcqs_jsonl(const std::filesystem::path& file, const std::vector<Mcq>& mcqs) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw Error("cannot write MCQ file: " + file.string());
    for (const Mcq& mcq : mcqs) {
        ordered_json j;
        j["question"] = mcq.question;
        j["options"] = mcq.options;
        j["correct_index"] = mcq.correct_index;
        j["doc_id"] = mcq.doc_id;
        j["generator_model"] = mcq.generator_model;
        j["question_set_id"] = mcq.question_set_id;
        out << j.dump() << '\n';
    }
}

} // namespace alexandria
