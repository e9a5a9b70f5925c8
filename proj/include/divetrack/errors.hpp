#pragma once
// Error taxonomy shared by every module. Contract violations and degenerate
// inputs are caller-side problems; the rest describe data, configuration, or
// runtime failures and carry enough context to report them.

#include <stdexcept>
#include <string>

namespace divetrack {

// A documented precondition was broken by the caller.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Structurally valid input that is degenerate for the operation
// (empty mask, all-zero vector, zero-frame session).
class DegenerateInput : public std::invalid_argument {
public:
    explicit DegenerateInput(const std::string& what) : std::invalid_argument(what) {}
};

// Persisted data failed a structural check while being decoded.
class CorruptData : public std::runtime_error {
public:
    explicit CorruptData(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure, distinct from validation of the content itself.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration value rejected; carries the offending field path, e.g. "memory.delta".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what), field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

// Non-finite value where a finite one is required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Optimization diverged; carries the step at which it happened.
class TrainingError : public std::runtime_error {
public:
    TrainingError(int step, const std::string& what)
        : std::runtime_error("training step " + std::to_string(step) + ": " + what), step_(step) {}

    int step() const noexcept { return step_; }

private:
    int step_;
};

} // namespace divetrack
