// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "alexandria/corpus.hpp"
#include "alexandria/embed_baseline.hpp"
#include "alexandria/errors.hpp"
#include "alexandria/extraction.hpp"
#include "alexandria/kb_store.hpp"
#include "alexandria/mcq_eval.hpp"
#include "alexandria/overlap.hpp"
#include "alexandria/provenance.hpp"
#include "alexandria/rng.hpp"

namespace alexandria {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string>& provider_construction_log() {
    static std::vector<std::string> log;
    return log;
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config, const std::string& name) {
    provider_construction_log().push_back(config.kind);
    if (config.kind == "mock") {
        MockOptions options;
        options.seed = config.mock_seed;
        options.embed_dim = config.mock_embed_dim;
        return std::make_shared<MockProvider>(std::move(options));
    }
    return std::make_shared<HttpProvider>(config, name);
}

namespace {

struct CommonArgs {
    std::string corpus;
    std::string kb;
    std::string out = "out";
    std::string provider = "mock";
    std::string provider_config;
    std::string model = "mock-small";
    std::uint64_t seed = 42;
    std::string prompts_dir = "prompts";
    std::string exemplars_dir = "data/exemplars";
    bool audit = false;
    int jobs = 1;
    int max_concurrent = 4;
};

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

void write_run_json(const fs::path& out_dir, const std::string& command,
                    const ordered_json& resolved) {
    ordered_json run;
    run["command"] = command;
    run["config"] = resolved;
    run["schema_version"] = std::string(kKuSchemaVersion);
    run["minhash_version"] = std::string(kMinhashVersion);
    write_file(out_dir / "run.json", run.dump(2) + "\n");
}

struct GatewaySetup {
    std::shared_ptr<Provider> provider;
    std::shared_ptr<AuditLog> audit;
    std::unique_ptr<Gateway> gateway;
    ProviderConfig config;
};

GatewaySetup make_gateway(const CommonArgs& args, const std::string& provider_name) {
    GatewaySetup setup;
    ProviderConfig& cfg = setup.config;
    if (provider_name == "mock" || provider_name == "mock-bow") {
        cfg.kind = "mock";
        cfg.mock_seed = seed_for(args.seed, "mock-provider");
        cfg.max_concurrent_requests = args.max_concurrent;
        cfg.retry.base_backoff_ms = 1;
    } else {
        if (args.provider_config.empty()) {
            throw ConfigError("provider '" + provider_name + "' needs --provider-config");
        }
        std::ifstream in(args.provider_config);
        if (!in) throw ConfigError("cannot open provider config: " + args.provider_config);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("provider config is not valid JSON: ") + e.what());
        }
        if (!doc.contains("providers") || !doc.at("providers").contains(provider_name)) {
            throw ConfigError("provider config has no entry for '" + provider_name + "'");
        }
        const json& p = doc.at("providers").at(provider_name);
        cfg.kind = "openai-chat";
        cfg.endpoint_uri = p.at("endpoint").get<std::string>();
        std::string upper = provider_name;
        for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        cfg.api_key_env_var_name = p.value("api_key_env", "ALEXANDRIA_" + upper + "_API_KEY");
        cfg.timeout_ms = p.value("timeout_ms", 30000);
        cfg.max_concurrent_requests = p.value("max_concurrent", args.max_concurrent);
        cfg.retry.max_retries = p.value("max_retries", 2);
        cfg.retry.base_backoff_ms = p.value("base_backoff_ms", 200);
    }
    setup.provider = make_provider(cfg, provider_name);
    if (args.audit) {
        setup.audit = std::make_shared<AuditLog>(fs::path(args.out) / "audit.jsonl");
    }
    setup.gateway = std::make_unique<Gateway>(setup.provider, cfg, setup.audit);
    return setup;
}

ordered_json common_config_json(const CommonArgs& args) {
    ordered_json j;
    j["corpus"] = args.corpus;
    j["kb"] = args.kb;
    j["out"] = args.out;
    j["provider"] = args.provider;
    j["provider_config"] = args.provider_config;
    j["model"] = args.model;
    j["seed"] = args.seed;
    j["prompts"] = args.prompts_dir;
    j["exemplars"] = args.exemplars_dir;
    j["audit"] = args.audit;
    j["jobs"] = args.jobs;
    j["max_concurrent"] = args.max_concurrent;
    return j;
}

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--corpus", args.corpus, "corpus directory of .txt files or a .jsonl file");
    cmd->add_option("--kb", args.kb, "knowledge-base directory");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--provider", args.provider, "provider name ('mock' is offline)");
    cmd->add_option("--provider-config", args.provider_config, "provider config JSON");
    cmd->add_option("--model", args.model, "model id passed to the provider");
    cmd->add_option("--seed", args.seed, "root seed; all randomness derives from it");
    cmd->add_option("--prompts", args.prompts_dir, "prompt template directory");
    cmd->add_option("--exemplars", args.exemplars_dir, "few-shot exemplar directory");
    cmd->add_flag("--audit", args.audit, "write a redacted request/response audit log");
    cmd->add_option("--jobs", args.jobs, "document-level parallelism");
    cmd->add_option("--max-concurrent", args.max_concurrent, "provider admission limit");
}

ChunkPolicy chunk_policy_from(const std::string& mode, int min_tokens, int max_tokens,
                              int target_words) {
    if (mode == "token_range") return ChunkPolicy::token_range(min_tokens, max_tokens);
    if (mode == "word_target") return ChunkPolicy::word_target(target_words);
    throw ConfigError("unknown chunk mode: " + mode);
}

std::vector<Document> load_corpus_checked(const std::string& path) {
    if (path.empty()) throw ConfigError("--corpus is required");
    if (!fs::exists(path)) throw ConfigError("corpus path does not exist: " + path);
    std::vector<Document> docs = load_corpus(path);
    if (docs.empty()) throw ConfigError("corpus is empty: " + path);
    return docs;
}

// ----------------------------------------------------------------- extract

struct ExtractArgs {
    CommonArgs common;
    std::string chunk_mode = "token_range";
    int min_tokens = 200;
    int max_tokens = 500;
    int target_words = 200;
    int window = 10;
    int guard_n = kDefaultGuardN;
    bool strict = false;
    std::uint64_t minhash_seed = 0;
    std::string created_at;
};

int cmd_extract(const ExtractArgs& args, std::ostream& out) {
    if (args.common.kb.empty()) throw ConfigError("--kb is required");
    std::vector<Document> docs = load_corpus_checked(args.common.corpus);
    PromptLibrary prompts(args.common.prompts_dir);
    ExemplarLibrary exemplars(args.common.exemplars_dir);
    GatewaySetup setup = make_gateway(args.common, args.common.provider);

    ExtractionConfig config;
    config.context_window_kus = args.window;
    config.chunk_policy = chunk_policy_from(args.chunk_mode, args.min_tokens, args.max_tokens,
                                            args.target_words);
    config.guard_n = args.guard_n;
    config.strict_leakage = args.strict;
    config.extractor_model = args.common.model;
    config.seed = seed_for(args.common.seed, "extraction");
    config.minhash_seed = args.minhash_seed;
    config.created_at = args.created_at;

    std::vector<KuDocument> results(docs.size());
    std::vector<std::string> doc_errors(docs.size());
    auto work = [&](std::size_t i) {
        try {
            results[i] = extract_document(docs[i], config, *setup.gateway, prompts, exemplars);
        } catch (const Error& e) {
            doc_errors[i] = e.what();
        }
    };
    if (args.common.jobs > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        int n_workers = std::min<int>(args.common.jobs, static_cast<int>(docs.size()));
        for (int t = 0; t < n_workers; ++t) {
            workers.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= docs.size()) return;
                    work(i);
                }
            });
        }
        for (std::thread& t : workers) t.join();
    } else {
        for (std::size_t i = 0; i < docs.size(); ++i) work(i);
    }

    KnowledgeBase kb = KnowledgeBase::open(args.common.kb, true);
    ordered_json summary = ordered_json::array();
    std::size_t stored = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        ordered_json entry;
        entry["doc_id"] = docs[i].doc_id;
        if (!doc_errors[i].empty()) {
            entry["failed"] = true;
            entry["reason"] = doc_errors[i];
        } else {
            IngestResult ingest = kb.put(results[i]);
            ++stored;
            entry["units"] = results[i].units.size();
            entry["failed_chunks"] = results[i].extraction ? results[i].extraction->failures.size()
                                                           : 0;
            entry["notes"] = results[i].extraction ? results[i].extraction->notes
                                                   : std::vector<std::string>{};
            entry["duplicate_suspect"] = ingest.duplicate_suspect;
        }
        summary.push_back(std::move(entry));
    }

    fs::path out_dir(args.common.out);
    write_file(out_dir / "extract_summary.json", summary.dump(2) + "\n");
    ordered_json resolved = common_config_json(args.common);
    resolved["chunk_mode"] = args.chunk_mode;
    resolved["min_tokens"] = args.min_tokens;
    resolved["max_tokens"] = args.max_tokens;
    resolved["target_words"] = args.target_words;
    resolved["window"] = args.window;
    resolved["guard_n"] = args.guard_n;
    resolved["strict"] = args.strict;
    resolved["minhash_seed"] = args.minhash_seed;
    resolved["prompt_version"] = prompts.version("ku-extract");
    write_run_json(out_dir, "extract", resolved);

    out << "extracted " << stored << " of " << docs.size() << " documents into "
        << args.common.kb << "\n";
    if (stored == 0) throw Error("extraction failed for every document");
    return 0;
}

// ----------------------------------------------------------------- eval-mcq

struct EvalArgs {
    CommonArgs common;
    std::string models = "mock-small";
    std::string conditions = "no_context,original_text,knowledge_units";
    int mcqs_per_doc = 3;
    int question_sets = 3;
    std::string questions_file;
    std::string generator_model = "mock-gen";
};

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_eval_mcq(const EvalArgs& args, std::ostream& out) {
    EvalConfig config;
    config.model_ids = split_csv_list(args.models);
    config.conditions.clear();
    for (const std::string& c : split_csv_list(args.conditions)) {
        config.conditions.push_back(eval_condition_from_string(c));
    }
    if (config.model_ids.empty() || config.conditions.empty()) {
        throw ConfigError("--models and --conditions must be non-empty");
    }
    bool wants_ku = std::find(config.conditions.begin(), config.conditions.end(),
                              EvalCondition::knowledge_units) != config.conditions.end();
    if (wants_ku && args.common.kb.empty()) {
        throw ConfigError("the knowledge_units condition needs --kb");
    }
    std::vector<Document> docs = load_corpus_checked(args.common.corpus);
    config.mcqs_per_doc = args.mcqs_per_doc;
    config.question_sets = args.question_sets;
    config.seed = seed_for(args.common.seed, "mcq");
    config.generator_model = args.generator_model;
    config.audit_isolation = args.common.audit;

    PromptLibrary prompts(args.common.prompts_dir);
    std::optional<KnowledgeBase> kb;
    if (!args.common.kb.empty()) {
        kb.emplace(KnowledgeBase::open(args.common.kb, false));
    } else {
        // No KU condition requested; evaluate against an empty throwaway store.
        fs::path tmp = fs::path(args.common.out) / "kb-empty";
        kb.emplace(KnowledgeBase::open(tmp, true));
    }
    GatewaySetup setup = make_gateway(args.common, args.common.provider);

    std::vector<Mcq> fixture;
    const std::vector<Mcq>* fixture_ptr = nullptr;
    if (!args.questions_file.empty()) {
        fixture = load_mcqs_jsonl(args.questions_file);
        fixture_ptr = &fixture;
    }
    std::vector<Mcq> used_questions;
    EvalReport report =
        run_eval(docs, *kb, *setup.gateway, prompts, config, fixture_ptr, &used_questions);

    fs::path out_dir(args.common.out);
    write_file(out_dir / "eval.csv", report.to_csv());
    write_file(out_dir / "eval_table.txt", report.render_table());
    save_mcqs_jsonl(out_dir / "questions.jsonl", used_questions);
    {
        std::string outcomes;
        for (const QuestionOutcome& o : report.outcomes) {
            ordered_json j;
            j["doc_id"] = o.doc_id;
            j["model"] = o.model_id;
            j["set"] = o.question_set_id;
            j["condition"] = to_string(o.condition);
            j["chosen"] = o.chosen;
            j["correct_index"] = o.correct_index;
            j["correct"] = o.correct;
            outcomes += j.dump() + "\n";
        }
        write_file(out_dir / "outcomes.jsonl", outcomes);
    }
    if (!report.isolation_violations.empty()) {
        std::string lines;
        for (const std::string& v : report.isolation_violations) lines += v + "\n";
        write_file(out_dir / "isolation_violations.txt", lines);
    }
    ordered_json resolved = common_config_json(args.common);
    resolved["models"] = args.models;
    resolved["conditions"] = args.conditions;
    resolved["mcqs_per_doc"] = args.mcqs_per_doc;
    resolved["question_sets"] = args.question_sets;
    resolved["questions_file"] = args.questions_file;
    resolved["generator_model"] = args.generator_model;
    for (const auto& [key, value] : report.metadata) resolved["meta_" + key] = value;
    write_run_json(out_dir, "eval-mcq", resolved);

    out << report.render_table();
    return 0;
}

// ----------------------------------------------------------------- overlap

struct OverlapArgs {
    CommonArgs common;
    std::string ns = "5,7,11";
    double top_fraction = 0.05;
    std::string reconstructions_file;
};

int cmd_overlap(const OverlapArgs& args, std::ostream& out) {
    if (args.common.kb.empty()) throw ConfigError("--kb is required");
    std::vector<Document> docs = load_corpus_checked(args.common.corpus);
    KnowledgeBase kb = KnowledgeBase::open(args.common.kb, false);

    std::vector<int> ns;
    for (const std::string& n : split_csv_list(args.ns)) {
        try {
            ns.push_back(std::stoi(n));
        } catch (const std::exception&) {
            throw ConfigError("--ns entries must be integers, got '" + n + "'");
        }
        if (ns.back() < 1) throw ConfigError("--ns entries must be >= 1");
    }
    if (ns.empty()) throw ConfigError("--ns must list at least one n");

    std::vector<std::string> missing;
    for (const Document& doc : docs) {
        if (!kb.contains(doc.doc_id)) missing.push_back(doc.doc_id);
    }
    if (!missing.empty()) throw MissingKus(std::move(missing));

    std::vector<OverlapPair> pairs;
    for (const Document& doc : docs) {
        OverlapPair pair;
        pair.pair_id = doc.doc_id;
        pair.kind = PairKind::source_vs_ku;
        pair.left_text = normalize_text(doc.body);
        pair.right_text = ku_document_text(kb.get(doc.doc_id));
        pairs.push_back(std::move(pair));
    }
    if (!args.reconstructions_file.empty()) {
        std::ifstream in(args.reconstructions_file);
        if (!in) throw ConfigError("cannot open " + args.reconstructions_file);
        std::map<std::string, std::string> recon;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            recon[j.at("doc_id").get<std::string>()] = j.at("text").get<std::string>();
        }
        for (const Document& doc : docs) {
            auto it = recon.find(doc.doc_id);
            if (it == recon.end()) continue;
            OverlapPair pair;
            pair.pair_id = doc.doc_id + "#recon";
            pair.kind = PairKind::source_vs_reconstruction;
            pair.left_text = normalize_text(doc.body);
            pair.right_text = it->second;
            pairs.push_back(std::move(pair));
        }
    }

    OverlapReport report = build_overlap_report(pairs, ns, args.top_fraction);
    fs::path out_dir(args.common.out);
    write_file(out_dir / "overlap.csv", report.to_csv());
    write_file(out_dir / "overlap_table.txt", report.render_table());
    ordered_json resolved = common_config_json(args.common);
    resolved["ns"] = args.ns;
    resolved["top_fraction"] = args.top_fraction;
    resolved["reconstructions"] = args.reconstructions_file;
    for (const auto& [key, value] : report.metadata) resolved["meta_" + key] = value;
    write_run_json(out_dir, "overlap", resolved);

    out << report.render_table();
    return 0;
}

// ------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    CommonArgs common;
};

int cmd_reconstruct(const ReconstructArgs& args, std::ostream& out) {
    if (args.common.kb.empty()) throw ConfigError("--kb is required");
    KnowledgeBase kb = KnowledgeBase::open(args.common.kb, false);
    PromptLibrary prompts(args.common.prompts_dir);
    ExemplarLibrary exemplars(args.common.exemplars_dir);
    GatewaySetup setup = make_gateway(args.common, args.common.provider);

    std::map<std::string, DomainTag> domains;
    if (!args.common.corpus.empty()) {
        for (const Document& doc : load_corpus_checked(args.common.corpus)) {
            domains[doc.doc_id] = doc.domain;
        }
    }

    std::string lines;
    for (const std::string& doc_id : kb.doc_ids()) {
        KuDocument kd = kb.get(doc_id);
        DomainTag domain = DomainTag::other;
        if (auto it = domains.find(doc_id); it != domains.end()) domain = it->second;
        std::string text = reconstruct_text(kd, exemplars, domain, *setup.gateway, prompts,
                                            args.common.model);
        ordered_json j;
        j["doc_id"] = doc_id;
        j["text"] = text;
        lines += j.dump() + "\n";
    }
    fs::path out_dir(args.common.out);
    write_file(out_dir / "reconstructions.jsonl", lines);
    ordered_json resolved = common_config_json(args.common);
    resolved["prompt_version"] = prompts.version("ku-reconstruct");
    write_run_json(out_dir, "reconstruct", resolved);
    out << "reconstructed " << kb.doc_ids().size() << " documents\n";
    return 0;
}

// ---------------------------------------------------------- embed-baseline

struct EmbedArgs {
    CommonArgs common;
    std::string embedder = "mock-bow";
    std::string vocab = "data/vocab_en.txt";
};

int cmd_embed_baseline(const EmbedArgs& args, std::ostream& out) {
    if (args.common.kb.empty()) throw ConfigError("--kb is required");
    std::vector<Document> docs = load_corpus_checked(args.common.corpus);
    KnowledgeBase kb = KnowledgeBase::open(args.common.kb, false);
    Vocabulary vocab = Vocabulary::load(args.vocab);
    CommonArgs gw_args = args.common;
    gw_args.provider = args.embedder;
    GatewaySetup setup = make_gateway(gw_args, args.embedder);

    EmbeddingStudyConfig config;
    config.embed_model = args.embedder;
    config.seed = seed_for(args.common.seed, "embed-baseline");
    std::vector<EmbeddingStudyRow> rows =
        run_embedding_study(docs, kb, *setup.gateway, vocab, config);

    fs::path out_dir(args.common.out);
    write_file(out_dir / "embed.csv", embedding_rows_to_csv(rows));
    write_file(out_dir / "embed_table.txt", render_embedding_table(rows));
    ordered_json resolved = common_config_json(args.common);
    resolved["embedder"] = args.embedder;
    resolved["vocab"] = args.vocab;
    write_run_json(out_dir, "embed-baseline", resolved);

    out << render_embedding_table(rows);
    return 0;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
    std::string in_dir;
    std::string out_dir;
    double top_fraction = 0.05;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::istringstream parts(line);
        std::string col;
        while (std::getline(parts, col, ',')) cols.push_back(col);
        if (line.back() == ',') cols.emplace_back();
        rows.push_back(std::move(cols));
    }
    return rows;
}

int cmd_report(const ReportArgs& args, std::ostream& out) {
    if (args.in_dir.empty()) throw ConfigError("--in is required");
    fs::path in_dir(args.in_dir);
    fs::path out_dir(args.out_dir.empty() ? args.in_dir : args.out_dir);
    bool rendered_any = false;

    if (fs::exists(in_dir / "eval.csv")) {
        auto rows = read_csv(in_dir / "eval.csv");
        EvalReport report;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& cols = rows[r];
            if (cols.size() < 8) throw Error("eval.csv row " + std::to_string(r) + " is short");
            EvalCell cell;
            cell.model_id = cols[0];
            cell.condition = eval_condition_from_string(cols[1]);
            cell.domain = domain_tag_from_string(cols[2]);
            cell.n_questions = std::stoull(cols[3]);
            cell.n_correct = std::stoull(cols[4]);
            report.cells.push_back(std::move(cell));
        }
        std::string table = report.render_table();
        write_file(out_dir / "eval_table.txt", table);
        out << table << "\n";
        rendered_any = true;
    }
    if (fs::exists(in_dir / "overlap.csv")) {
        auto rows = read_csv(in_dir / "overlap.csv");
        if (rows.empty()) throw Error("overlap.csv is empty");
        std::vector<int> ns;
        for (std::size_t c = 2; c + 1 < rows[0].size(); ++c) {
            ns.push_back(std::stoi(rows[0][c].substr(1)));
        }
        std::vector<PairScores> pair_rows;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& cols = rows[r];
            if (cols[0].rfind("summary_", 0) == 0) continue;
            PairScores row;
            row.pair_id = cols[0];
            row.kind = cols[1] == "source_vs_ku" ? PairKind::source_vs_ku
                                                 : PairKind::source_vs_reconstruction;
            for (std::size_t c = 0; c < ns.size(); ++c) {
                row.jaccard_by_n[ns[c]] = std::stod(cols[2 + c]);
            }
            row.plagiarism = std::stod(cols[2 + ns.size()]);
            pair_rows.push_back(std::move(row));
        }
        // Rebuild summaries from the pair rows.
        std::vector<OverlapPair> dummy;
        OverlapReport report;
        report.rows = pair_rows;
        report.ns = ns;
        std::map<PairKind, std::vector<PairScores>> by_kind;
        for (const PairScores& row : pair_rows) by_kind[row.kind].push_back(row);
        for (const auto& [kind, kind_rows] : by_kind) {
            OverlapSummary summary;
            summary.fraction = args.top_fraction;
            for (int n : ns) {
                double sum = 0.0;
                for (const PairScores& row : kind_rows) sum += row.jaccard_by_n.at(n);
                summary.mean_jaccard[n] = sum / static_cast<double>(kind_rows.size());
                auto top = top_fraction(kind_rows, args.top_fraction,
                                        [n](const PairScores& x) { return x.jaccard_by_n.at(n); });
                double ts = 0.0;
                for (const PairScores* row : top) ts += row->jaccard_by_n.at(n);
                summary.top_mean_jaccard[n] = ts / static_cast<double>(top.size());
            }
            double plag = 0.0;
            for (const PairScores& row : kind_rows) plag += row.plagiarism;
            summary.mean_plagiarism = plag / static_cast<double>(kind_rows.size());
            auto top = top_fraction(kind_rows, args.top_fraction,
                                    [](const PairScores& x) { return x.plagiarism; });
            double tp = 0.0;
            for (const PairScores* row : top) tp += row->plagiarism;
            summary.top_mean_plagiarism = tp / static_cast<double>(top.size());
            report.summaries[kind] = summary;
        }
        std::string table = report.render_table();
        write_file(out_dir / "overlap_table.txt", table);
        out << table << "\n";
        rendered_any = true;
    }
    if (fs::exists(in_dir / "embed.csv")) {
        auto rows = read_csv(in_dir / "embed.csv");
        std::vector<EmbeddingStudyRow> erows;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& cols = rows[r];
            EmbeddingStudyRow row;
            std::string variant = cols[0];
            if (variant == "original") row.variant = ControlVariant::original;
            else if (variant == "scrambled") row.variant = ControlVariant::scrambled;
            else if (variant == "unrelated_abstract") row.variant = ControlVariant::unrelated_abstract;
            else if (variant == "random_words") row.variant = ControlVariant::random_words;
            else if (variant == "ku_text") row.variant = ControlVariant::ku_text;
            else throw Error("unknown variant in embed.csv: " + variant);
            row.n = std::stoull(cols[1]);
            row.mean_cosine = std::stod(cols[2]);
            row.median_cosine = std::stod(cols[3]);
            erows.push_back(row);
        }
        std::string table = render_embedding_table(erows);
        write_file(out_dir / "embed_table.txt", table);
        out << table << "\n";
        rendered_any = true;
    }
    if (!rendered_any) throw ConfigError("no eval.csv/overlap.csv/embed.csv under " + args.in_dir);
    return 0;
}

// ----------------------------------------------------------------- validate

struct ValidateArgs {
    CommonArgs common;
    int guard_n = kDefaultGuardN;
    bool strict = false;
    std::string chunk_mode = "token_range";
    int min_tokens = 200;
    int max_tokens = 500;
    int target_words = 200;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out) {
    if (args.common.corpus.empty() && args.common.kb.empty()) {
        throw ConfigError("validate needs --corpus and/or --kb");
    }
    std::size_t findings_total = 0;
    std::map<std::string, Document> corpus_docs;
    if (!args.common.corpus.empty()) {
        for (Document& doc : load_corpus_checked(args.common.corpus)) {
            try {
                PreparedDocument prepared = prepare_document(doc);
                if (doc.doc_id.empty()) {
                    out << doc.doc_id << ": schema: doc_id is empty\n";
                    ++findings_total;
                }
                corpus_docs[doc.doc_id] = std::move(doc);
                (void)prepared;
            } catch (const EmptyDocument& e) {
                out << doc.doc_id << ": empty: " << e.what() << "\n";
                ++findings_total;
            }
        }
    }
    if (!args.common.kb.empty()) {
        KnowledgeBase kb = KnowledgeBase::open(args.common.kb, false);
        ChunkPolicy policy = chunk_policy_from(args.chunk_mode, args.min_tokens, args.max_tokens,
                                               args.target_words);
        for (const std::string& doc_id : kb.doc_ids()) {
            KuDocument kd = kb.get(doc_id);
            ValidationReport structural = validate_ku_document(kd);
            for (const Finding& f : structural.findings) {
                out << doc_id << ": " << f.category << ": " << f.path << ": " << f.message
                    << "\n";
                ++findings_total;
            }
            auto it = corpus_docs.find(doc_id);
            if (it == corpus_docs.end()) continue;
            PreparedDocument prepared = prepare_document(it->second);
            std::vector<Chunk> chunks = chunk_document(prepared, policy);
            for (const KnowledgeUnit& ku : kd.units) {
                if (ku.chunk_index >= chunks.size()) {
                    out << doc_id << ": provenance: unit " << ku.ku_id
                        << " refers to a chunk beyond the source (" << ku.chunk_index << ")\n";
                    ++findings_total;
                    continue;
                }
                ValidationReport report =
                    validate_ku(ku, chunks[ku.chunk_index], args.guard_n, args.strict);
                for (const Finding& f : report.findings) {
                    out << doc_id << "#" << ku.chunk_index << ": " << f.category << ": "
                        << f.path << ": " << f.message << "\n";
                    ++findings_total;
                }
            }
        }
    }
    out << "findings: " << findings_total << "\n";
    if (findings_total > 0 && args.strict) return 2;
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"knowledge-unit extraction and evaluation toolkit"};
    app.require_subcommand(1);

    ExtractArgs extract_args;
    CLI::App* extract = app.add_subcommand("extract", "convert documents into knowledge units");
    add_common_options(extract, extract_args.common);
    extract->add_option("--chunk-mode", extract_args.chunk_mode, "token_range or word_target");
    extract->add_option("--min-tokens", extract_args.min_tokens, "token-range lower bound");
    extract->add_option("--max-tokens", extract_args.max_tokens, "token-range upper bound");
    extract->add_option("--target-words", extract_args.target_words, "word-target chunk size");
    extract->add_option("--window", extract_args.window, "previous units carried in the prompt");
    extract->add_option("--guard-n", extract_args.guard_n, "leakage-guard n-gram size");
    extract->add_flag("--strict", extract_args.strict, "treat leakage findings as errors");
    extract->add_option("--minhash-seed", extract_args.minhash_seed, "sentence minhash seed");
    extract->add_option("--created-at", extract_args.created_at,
                        "timestamp stamped into units (empty keeps runs byte-stable)");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval-mcq", "three-condition MCQ evaluation");
    add_common_options(eval, eval_args.common);
    eval->add_option("--models", eval_args.models, "comma-separated model ids");
    eval->add_option("--conditions", eval_args.conditions,
                     "comma-separated subset of no_context,original_text,knowledge_units");
    eval->add_option("--mcqs-per-doc", eval_args.mcqs_per_doc, "questions per document");
    eval->add_option("--sets", eval_args.question_sets, "regenerated question sets");
    eval->add_option("--questions", eval_args.questions_file, "MCQ fixture JSONL (skips generation)");
    eval->add_option("--generator-model", eval_args.generator_model, "MCQ generator model id");

    OverlapArgs overlap_args;
    CLI::App* overlap = app.add_subcommand("overlap", "n-gram and plagiarism overlap scoring");
    add_common_options(overlap, overlap_args.common);
    overlap->add_option("--ns", overlap_args.ns, "comma-separated n-gram sizes");
    overlap->add_option("--top-fraction", overlap_args.top_fraction, "top similar fraction");
    overlap->add_option("--reconstructions", overlap_args.reconstructions_file,
                        "reconstructions JSONL to score as well");

    ReconstructArgs recon_args;
    CLI::App* recon = app.add_subcommand("reconstruct", "regenerate prose from stored units");
    add_common_options(recon, recon_args.common);

    EmbedArgs embed_args;
    CLI::App* embed = app.add_subcommand("embed-baseline", "embedding-control cosine study");
    add_common_options(embed, embed_args.common);
    embed->add_option("--embedder", embed_args.embedder, "mock-bow or a configured provider");
    embed->add_option("--vocab", embed_args.vocab, "weighted vocabulary file");

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "render tables from emitted CSVs");
    report->add_option("--in", report_args.in_dir, "directory holding the CSVs");
    report->add_option("--out", report_args.out_dir, "directory for rendered tables");
    report->add_option("--top-fraction", report_args.top_fraction, "top similar fraction");

    ValidateArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "validate corpus files and stored units");
    add_common_options(validate, validate_args.common);
    validate->add_option("--guard-n", validate_args.guard_n, "leakage-guard n-gram size");
    validate->add_flag("--strict", validate_args.strict, "exit 2 on any finding");
    validate->add_option("--chunk-mode", validate_args.chunk_mode, "token_range or word_target");
    validate->add_option("--min-tokens", validate_args.min_tokens, "token-range lower bound");
    validate->add_option("--max-tokens", validate_args.max_tokens, "token-range upper bound");
    validate->add_option("--target-words", validate_args.target_words, "word-target chunk size");

    std::vector<std::string> argv_copy = args;
    std::reverse(argv_copy.begin(), argv_copy.end());
    try {
        app.parse(argv_copy);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (extract->parsed()) return cmd_extract(extract_args, out);
        if (eval->parsed()) return cmd_eval_mcq(eval_args, out);
        if (overlap->parsed()) return cmd_overlap(overlap_args, out);
        if (recon->parsed()) return cmd_reconstruct(recon_args, out);
        if (embed->parsed()) return cmd_embed_baseline(embed_args, out);
        if (report->parsed()) return cmd_report(report_args, out);
        if (validate->parsed()) return cmd_validate(validate_args, out);
        err << "error: no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace alexandria
