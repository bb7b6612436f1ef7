// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "alexandria/extraction.hpp"
#include "alexandria/ku_model.hpp"
#include "alexandria/llm_gateway.hpp"

namespace alexandria {

enum class PairKind { source_vs_ku, source_vs_reconstruction };

std::string to_string(PairKind kind);

struct OverlapPair {
    std::string pair_id;
    PairKind kind = PairKind::source_vs_ku;
    std::string left_text;
    std::string right_text;
};

struct PairScores {
    std::string pair_id;
    PairKind kind = PairKind::source_vs_ku;
    std::map<int, double> jaccard_by_n;
    double plagiarism = 0.0;
};

// Word n-gram Jaccard of the pair's two texts, per requested n.
std::map<int, double> pair_overlap(const OverlapPair& pair, const std::vector<int>& ns);

// Fingerprint-matching score in [0, 100]: normalized token 3-gram multisets,
// matches counted against the shorter text's fingerprints. Inspired by
// open-source plagiarism detectors, not bit-compatible with any of them.
double plagiarism_score(std::string_view left, std::string_view right);

// The ceil(fraction * N) rows with the highest metric; ties at the cut are
// broken by ascending pair_id. Throws EmptyInput.
std::vector<const PairScores*> top_fraction(const std::vector<PairScores>& rows, double fraction,
                                            const std::function<double(const PairScores&)>& metric);

struct OverlapSummary {
    std::map<int, double> mean_jaccard;
    std::map<int, double> top_mean_jaccard;
    double mean_plagiarism = 0.0;
    double top_mean_plagiarism = 0.0;
    double fraction = 0.05;
};

struct OverlapReport {
    std::vector<PairScores> rows;
    std::map<PairKind, OverlapSummary> summaries; // one block per pair kind present
    std::vector<int> ns;
    std::map<std::string, std::string> metadata;

    std::string to_csv() const;       // pair_id, kind, j<n>..., plag + summary block
    std::string render_table() const; // overall and top-fraction means per kind
};

PairScores score_pair(const OverlapPair& pair, const std::vector<int>& ns);
OverlapReport build_overlap_report(const std::vector<OverlapPair>& pairs,
                                   const std::vector<int>& ns, double top_fraction_value = 0.05);

// Regenerates prose from a document's knowledge units; the source text is
// never part of the prompt (the caller audits by string containment).
std::string reconstruct_text(const KuDocument& kd, const ExemplarLibrary& exemplars,
                             DomainTag domain, Gateway& gateway, const PromptLibrary& prompts,
                             const std::string& model_id);

} // namespace alexandria
