#pragma once

#include <stdexcept>
#include <string>

namespace trad {

// Base of every error the library raises. Callers that only care about
// "something failed" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Backend failures (LLM or embedding provider).
class BackendError : public Error {
public:
    enum class Kind { Transport, Auth, RateLimited, MalformedResponse, UnrecognizedPrompt };

    BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Model output could not be turned into a thought or an action.
class OutputParseError : public Error {
public:
    enum class Kind { NoParse, InvalidAction, EmptyThought };

    OutputParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace trad
