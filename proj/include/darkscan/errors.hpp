#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace darkscan {

// Base for all engine errors. The CLI maps anything derived from this
// to exit code 2 unless a command defines a more specific code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Lookup of an element / state / task id that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Structurally broken snapshot (parent cycles and the like).
class MalformedSnapshotError : public Error {
public:
    using Error::Error;
};

// Input document could not be parsed. Carries every violation found,
// not just the first one.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, std::vector<std::string> violations = {})
        : Error(msg), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

// Missing or inconsistent configuration (undeclared task pair, unknown
// threshold override, bad generator spec).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Command-line misuse.
class UsageError : public Error {
public:
    using Error::Error;
};

// A class is too small for the requested fold count, or k < 2.
class StratificationError : public Error {
public:
    using Error::Error;
};

// No response events for a host; latency detection must be skipped.
class NoBaselineError : public Error {
public:
    using Error::Error;
};

// Classifier backend failed; carries the classifier descriptor so the
// report can say which backend was unavailable.
class ClassifierError : public Error {
public:
    ClassifierError(const std::string& msg, std::string name, std::string version)
        : Error(msg), name_(std::move(name)), version_(std::move(version)) {}

    const std::string& classifier_name() const { return name_; }
    const std::string& classifier_version() const { return version_; }

private:
    std::string name_;
    std::string version_;
};

// WebDriver capture errors. The three kinds the protocol distinguishes
// stay distinct so callers can report them separately.
class CaptureError : public Error {
public:
    using Error::Error;
};

class ConnectionError : public CaptureError {
public:
    using CaptureError::CaptureError;
};

class CapabilityError : public CaptureError {
public:
    CapabilityError(const std::string& msg, std::string response_body)
        : CaptureError(msg), body_(std::move(response_body)) {}

    const std::string& response_body() const { return body_; }

private:
    std::string body_;
};

class ProtocolError : public CaptureError {
public:
    ProtocolError(const std::string& msg, std::string payload)
        : CaptureError(msg), payload_(std::move(payload)) {}

    const std::string& payload() const { return payload_; }

private:
    std::string payload_;
};

}  // namespace darkscan
