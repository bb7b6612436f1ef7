// Copyright 2026 The Alexandria Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace alexandria {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// corpus
class EmptyDocument : public Error {
public:
    using Error::Error;
};

// provenance
class EmptySentence : public Error {
public:
    using Error::Error;
};
class EmptyShingleSet : public Error {
public:
    using Error::Error;
};

// ku_model
class SchemaViolation : public Error {
public:
    SchemaViolation(std::string field_path, const std::string& message)
        : Error(field_path + ": " + message), field_path_(std::move(field_path)) {}
    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

// llm_gateway
class GatewayError : public Error {
public:
    using Error::Error;
};
class AuthError : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class RateLimited : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class Timeout : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class ProviderMalformedResponse : public GatewayError {
public:
    using GatewayError::GatewayError;
};
class UnparseableResponse : public GatewayError {
public:
    explicit UnparseableResponse(std::string raw)
        : GatewayError("response could not be parsed as structured output"),
          raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

// extraction
class PromptTooLarge : public Error {
public:
    using Error::Error;
};
class ExtractionFailed : public Error {
public:
    using Error::Error;
};

// mcq_eval
class TooFewQuestions : public Error {
public:
    using Error::Error;
};
class Unanswered : public Error {
public:
    using Error::Error;
};
class MissingKus : public Error {
public:
    explicit MissingKus(std::vector<std::string> doc_ids)
        : Error("knowledge base is missing KUs for " + std::to_string(doc_ids.size()) +
                " document(s)"),
          doc_ids_(std::move(doc_ids)) {}
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }

private:
    std::vector<std::string> doc_ids_;
};

// overlap / embed
class EmptyInput : public Error {
public:
    using Error::Error;
};
class DimensionMismatch : public Error {
public:
    using Error::Error;
};
class ZeroVector : public Error {
public:
    using Error::Error;
};
class TooShort : public Error {
public:
    using Error::Error;
};

// kb_store
class CorruptStore : public Error {
public:
    using Error::Error;
};
class DuplicateDocId : public Error {
public:
    using Error::Error;
};
class NotFound : public Error {
public:
    using Error::Error;
};

// cli
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace alexandria
