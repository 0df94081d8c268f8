#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oncosynth {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data that cannot be used as given (malformed, inconsistent, or
/// violating a type invariant). The CLI maps this family to exit code 4.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : DataError(message + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SchemaError : public DataError {
public:
    SchemaError(const std::string& message, std::string element)
        : DataError(message), element_(std::move(element)) {}

    const std::string& element() const noexcept { return element_; }

private:
    std::string element_;
};

class ReferentialError : public DataError {
public:
    explicit ReferentialError(std::string patient_id)
        : DataError("report references unknown patient '" + patient_id + "'"),
          patient_id_(std::move(patient_id)) {}

    const std::string& patient_id() const noexcept { return patient_id_; }

private:
    std::string patient_id_;
};

class ValidationError : public DataError {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : DataError(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "validation failed";
        for (const auto& issue : issues) {
            out += "; ";
            out += issue;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

class AuditError : public DataError {
public:
    using DataError::DataError;
};

class EmissionError : public DataError {
public:
    using DataError::DataError;
};

class EvaluationError : public DataError {
public:
    using DataError::DataError;
};

/// Bad configuration or command-line input (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace oncosynth
