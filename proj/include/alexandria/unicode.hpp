// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace alexandria {

// Canonical composition (NFC) of a UTF-8 string. Invalid byte sequences are
// replaced with U+FFFD rather than rejected.
std::string nfc_normalize(std::string_view utf8);

// True if the codepoint starting at byte `pos` is an uppercase letter.
bool starts_with_uppercase(std::string_view utf8, std::size_t pos);

} // namespace alexandria
