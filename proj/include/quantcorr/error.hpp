#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace quantcorr {

// Base class for every error raised by the library. The message can be
// prefixed with context (e.g. which step of the analysis failed) while the
// exception travels up the stack; catch by reference, prepend, rethrow.
class Error : public std::exception {
public:
    explicit Error(std::string message) : message_(std::move(message)) {}

    const char* what() const noexcept override { return message_.c_str(); }

    void prepend_context(const std::string& context) { message_ = context + ": " + message_; }

private:
    std::string message_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class SingularDesign : public Error {
public:
    SingularDesign(std::string message, std::vector<std::string> columns)
        : Error(std::move(message)), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::vector<std::string> columns_;
};

class NonConvergence : public Error {
public:
    NonConvergence(std::string message, std::vector<double> last_iterate)
        : Error(std::move(message)), last_iterate_(std::move(last_iterate)) {}

    const std::vector<double>& last_iterate() const { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

class EmptyCategory : public Error {
public:
    using Error::Error;
};

class IngestError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace quantcorr
