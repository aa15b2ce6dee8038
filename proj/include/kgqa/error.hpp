// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgqa {

/// Root of every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something that violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// Network-level failure; safe to retry.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, int attempts = 1)
        : Error(what), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

/// The peer answered with a non-2xx status. The body is kept so it can be shown to the model.
class HttpStatusError : public Error {
public:
    HttpStatusError(int status, std::string body)
        : Error("HTTP " + std::to_string(status) + ": " + body), status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

/// A backend payload did not have the expected shape.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A tool call named an unknown tool or carried arguments that fail the tool's schema.
class ToolProtocolError : public ProtocolError {
public:
    ToolProtocolError(const std::string& what, std::string raw_payload)
        : ProtocolError(what), raw_(std::move(raw_payload)) {}

    const std::string& raw_payload() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ScriptUnderrunError : public Error {
public:
    using Error::Error;
};

class ScriptMismatchError : public Error {
public:
    ScriptMismatchError(std::size_t call_index, const std::string& what)
        : Error("script mismatch at call " + std::to_string(call_index) + ": " + what), index_(call_index) {}

    /// One-based index of the offending call.
    std::size_t call_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Thrown when a single-consumer resource is entered concurrently.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class TemplateError : public Error {
public:
    explicit TemplateError(std::string placeholder)
        : Error("missing binding for placeholder " + placeholder), placeholder_(std::move(placeholder)) {}

    const std::string& placeholder() const noexcept { return placeholder_; }

private:
    std::string placeholder_;
};

class PlanParseError : public Error {
public:
    explicit PlanParseError(std::string raw)
        : Error("could not extract any plan step"), raw_(std::move(raw)) {}

    const std::string& raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

/// Dataset parse or validation failure. `index` is the zero-based question index, or -1 for file-level problems.
class DatasetError : public Error {
public:
    DatasetError(long index, const std::string& what)
        : Error(index >= 0 ? "question " + std::to_string(index) + ": " + what : what), index_(index) {}

    long index() const noexcept { return index_; }

private:
    long index_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace kgqa
