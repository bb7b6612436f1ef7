// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "alexandria/errors.hpp"
#include "alexandria/provenance.hpp"

namespace alexandria {

std::string to_string(PairKind kind) {
    return kind == PairKind::source_vs_ku ? "source_vs_ku" : "source_vs_reconstruction";
}

std::map<int, double> pair_overlap(const OverlapPair& pair, const std::vector<int>& ns) {
    if (ns.empty()) throw EmptyInput("pair_overlap needs at least one n");
    std::map<int, double> out;
    for (int n : ns) {
        out[n] = jaccard(shingle_set(pair.left_text, n), shingle_set(pair.right_text, n));
    }
    return out;
}

double plagiarism_score(std::string_view left, std::string_view right) {
    constexpr int kGram = 3;
    auto fingerprints = [](std::string_view text) {
        std::map<std::string, int> counts;
        std::vector<std::string> tokens = normalize_tokens(text);
        if (tokens.size() < kGram) return std::make_pair(counts, std::size_t{0});
        std::size_t total = tokens.size() - kGram + 1;
        for (std::size_t i = 0; i + kGram <= tokens.size(); ++i) {
            counts[tokens[i] + " " + tokens[i + 1] + " " + tokens[i + 2]] += 1;
        }
        return std::make_pair(counts, total);
    };
    auto [left_counts, left_total] = fingerprints(left);
    auto [right_counts, right_total] = fingerprints(right);
    if (left_total == 0 || right_total == 0) return 0.0;

    std::size_t matches = 0;
    for (const auto& [gram, count] : left_counts) {
        auto it = right_counts.find(gram);
        if (it != right_counts.end()) {
            matches += static_cast<std::size_t>(std::min(count, it->second));
        }
    }
    std::size_t shorter = std::min(left_total, right_total);
    return 100.0 * static_cast<double>(matches) / static_cast<double>(shorter);
}

std::vector<const PairScores*> top_fraction(
    const std::vector<PairScores>& rows, double fraction,
    const std::function<double(const PairScores&)>& metric) {
    if (rows.empty()) throw EmptyInput("top_fraction over an empty row set");
    if (fraction <= 0.0 || fraction > 1.0) {
        throw ConfigError("fraction must be in (0, 1]");
    }
    std::vector<const PairScores*> sorted;
    sorted.reserve(rows.size());
    for (const PairScores& row : rows) sorted.push_back(&row);
    std::sort(sorted.begin(), sorted.end(), [&](const PairScores* a, const PairScores* b) {
        double ma = metric(*a);
        double mb = metric(*b);
        if (ma != mb) return ma > mb;
        return a->pair_id < b->pair_id;
    });
    auto take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(rows.size())));
    take = std::min(take, sorted.size());
    sorted.resize(take);
    return sorted;
}

PairScores score_pair(const OverlapPair& pair, const std::vector<int>& ns) {
    PairScores scores;
    scores.pair_id = pair.pair_id;
    scores.kind = pair.kind;
    scores.jaccard_by_n = pair_overlap(pair, ns);
    scores.plagiarism = plagiarism_score(pair.left_text, pair.right_text);
    return scores;
}

OverlapReport build_overlap_report(const std::vector<OverlapPair>& pairs,
                                   const std::vector<int>& ns, double top_fraction_value) {
    if (pairs.empty()) throw EmptyInput("no overlap pairs");
    OverlapReport report;
    report.ns = ns;
    for (const OverlapPair& pair : pairs) report.rows.push_back(score_pair(pair, ns));

    std::map<PairKind, std::vector<PairScores>> by_kind;
    for (const PairScores& row : report.rows) by_kind[row.kind].push_back(row);

    for (const auto& [kind, rows] : by_kind) {
        OverlapSummary summary;
        summary.fraction = top_fraction_value;
        for (int n : ns) {
            double sum = 0.0;
            for (const PairScores& row : rows) sum += row.jaccard_by_n.at(n);
            summary.mean_jaccard[n] = sum / static_cast<double>(rows.size());
            auto top = top_fraction(rows, top_fraction_value,
                                    [n](const PairScores& r) { return r.jaccard_by_n.at(n); });
            double top_sum = 0.0;
            for (const PairScores* row : top) top_sum += row->jaccard_by_n.at(n);
            summary.top_mean_jaccard[n] = top_sum / static_cast<double>(top.size());
        }
        double plag_sum = 0.0;
        for (const PairScores& row : rows) plag_sum += row.plagiarism;
        summary.mean_plagiarism = plag_sum / static_cast<double>(rows.size());
        auto top = top_fraction(rows, top_fraction_value,
                                [](const PairScores& r) { return r.plagiarism; });
        double top_plag = 0.0;
        for (const PairScores* row : top) top_plag += row->plagiarism;
        summary.top_mean_plagiarism = top_plag / static_cast<double>(top.size());
        report.summaries[kind] = summary;
    }
    report.metadata["ku_text_rule"] =
        "all KU string values concatenated in canonical field order";
    report.metadata["negligible_plagiarism_threshold"] = "20";
    return report;
}

namespace {

std::string format_double(double value, int decimals) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
    return buffer;
}

} // namespace

std::string OverlapReport::to_csv() const {
    std::string out = "pair_id,kind";
    for (int n : ns) out += ",j" + std::to_string(n);
    out += ",plag\n";
    for (const PairScores& row : rows) {
        out += row.pair_id + "," + to_string(row.kind);
        for (int n : ns) out += "," + format_double(row.jaccard_by_n.at(n), 6);
        out += "," + format_double(row.plagiarism, 4) + "\n";
    }
    for (const auto& [kind, summary] : summaries) {
        out += "summary_overall," + to_string(kind);
        for (int n : ns) out += "," + format_double(summary.mean_jaccard.at(n), 6);
        out += "," + format_double(summary.mean_plagiarism, 4) + "\n";
        out += "summary_top" + format_double(summary.fraction * 100.0, 0) + "pct," +
               to_string(kind);
        for (int n : ns) out += "," + format_double(summary.top_mean_jaccard.at(n), 6);
        out += "," + format_double(summary.top_mean_plagiarism, 4) + "\n";
    }
    return out;
}

std::string OverlapReport::render_table() const {
    std::ostringstream out;
    out << "Data";
    for (int n : ns) out << "  " << n << "-gram";
    out << "  Plagiarism\n";
    for (const auto& [kind, summary] : summaries) {
        out << to_string(kind) << " overall";
        for (int n : ns) out << "  " << format_double(summary.mean_jaccard.at(n), 3);
        out << "  " << format_double(summary.mean_plagiarism, 1) << "\n";
        out << to_string(kind) << " top" << format_double(summary.fraction * 100.0, 0) << "%";
        for (int n : ns) out << "  " << format_double(summary.top_mean_jaccard.at(n), 3);
        out << "  " << format_double(summary.top_mean_plagiarism, 1) << "\n";
    }
    return out.str();
}

std::string reconstruct_text(const KuDocument& kd, const ExemplarLibrary& exemplars,
                             DomainTag domain, Gateway& gateway, const PromptLibrary& prompts,
                             const std::string& model_id) {
    if (kd.units.empty()) throw EmptyInput("cannot reconstruct from a document with no units");
    nlohmann::ordered_json units = nlohmann::ordered_json::array();
    for (const KnowledgeUnit& ku : kd.units) units.push_back(ku_to_json(ku));
    auto rendered =
        prompts.render("ku-reconstruct", {{"exemplar", exemplars.reconstruction_block(domain)},
                                          {"units", units.dump(2)}});
    GenerationRequest request;
    request.system_prompt = rendered.system;
    request.user_prompt = rendered.user;
    request.model_id = model_id;
    request.temperature = 0.0;
    request.max_output_tokens = 2048;
    return gateway.generate(request);
}

} // namespace alexandria
