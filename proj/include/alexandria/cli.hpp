// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "alexandria/llm_gateway.hpp"

namespace alexandria {

// Entry point shared by the binary and the in-process CLI tests.
// Exit codes: 0 success, 1 fatal error, 2 validation-only findings in strict
// mode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Provider construction goes through this factory; the kinds constructed are
// recorded so tests can assert that mock runs never build a network provider.
std::shared_ptr<Provider> make_provider(const ProviderConfig& config, const std::string& name);
std::vector<std::string>& provider_construction_log();

} // namespace alexandria
