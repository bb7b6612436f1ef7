// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "alexandria/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace alexandria {

std::string nfc_normalize(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || nfc == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    icu::UnicodeString input = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString normalized = nfc->normalize(input, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU NFC normalization failed");
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

bool starts_with_uppercase(std::string_view utf8, std::size_t pos) {
    if (pos >= utf8.size()) {
        return false;
    }
    UChar32 cp = 0;
    auto i = static_cast<int32_t>(pos);
    auto length = static_cast<int32_t>(utf8.size());
    U8_NEXT(reinterpret_cast<const uint8_t*>(utf8.data()), i, length, cp);
    if (cp < 0) {
        return false;
    }
    return u_isupper(cp) || u_istitle(cp);
}

} // namespace alexandria
