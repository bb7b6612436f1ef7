// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Provider double for eval-harness construction checks: it answers an MCQ
// correctly exactly when the question's keyed fact occurs in the prompt's
// context section, answers deterministically wrong when context is present
// but the fact is missing, and answers pseudo-randomly with no context.

#include <string>
#include <vector>

#include "alexandria/llm_gateway.hpp"
#include "alexandria/provenance.hpp"

namespace testsupport {

inline std::string fact_question(const std::string& fact) {
    return "Recall the keyed fact [fact:" + fact + "]";
}

class FactCoverageProvider : public alexandria::Provider {
public:
    explicit FactCoverageProvider(std::uint64_t seed) : seed_(seed) {}

    std::string name() const override { return "fact-coverage"; }

    std::string generate(const alexandria::GenerationRequest&) override {
        throw alexandria::GatewayError("fact-coverage provider only scores options");
    }

    std::vector<double> embed(const std::string&, const std::string&) override {
        throw alexandria::GatewayError("fact-coverage provider does not embed");
    }

    bool supports_option_scoring() const override { return true; }

    std::vector<double> score_options(const std::string& stem,
                                      const std::vector<std::string>& options) override {
        std::string context = alexandria::prompt_section(stem, "CONTEXT");
        std::string question = alexandria::prompt_section(stem, "QUESTION");
        std::string fact;
        std::size_t open = question.find("[fact:");
        std::size_t close = question.rfind(']');
        if (open != std::string::npos && close != std::string::npos && close > open + 6) {
            fact = question.substr(open + 6, close - open - 6);
        }
        std::vector<double> scores(options.size(), 0.0);
        if (!context.empty() && !fact.empty() && context.find(fact) != std::string::npos) {
            for (std::size_t i = 0; i < options.size(); ++i) {
                scores[i] = options[i] == fact ? 1.0 : 0.0;
            }
            return scores;
        }
        if (!context.empty()) {
            // Deterministically wrong: promote the first non-fact option.
            for (std::size_t i = 0; i < options.size(); ++i) {
                if (options[i] != fact) {
                    scores[i] = 1.0;
                    break;
                }
            }
            return scores;
        }
        for (std::size_t i = 0; i < options.size(); ++i) {
            scores[i] = static_cast<double>(
                            alexandria::hash32(question + "\x1f" + options[i], seed_)) /
                        4294967296.0;
        }
        return scores;
    }

private:
    std::uint64_t seed_;
};

} // namespace testsupport
