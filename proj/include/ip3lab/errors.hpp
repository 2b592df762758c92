#ifndef IP3LAB_ERRORS_HPP
#define IP3LAB_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ip3lab {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Tone or measurement frequency at or beyond Nyquist.
class AliasingError : public InvalidArgument {
public:
    explicit AliasingError(const std::string& msg) : InvalidArgument(msg) {}
};

class InsufficientSamples : public InvalidArgument {
public:
    InsufficientSamples(std::size_t required, std::size_t available)
        : InvalidArgument("insufficient samples: need " + std::to_string(required) +
                          ", have " + std::to_string(available)),
          required_(required) {}
    std::size_t required() const { return required_; }

private:
    std::size_t required_;
};

/// The device shows no measurable third-order products, e.g. a linear DUT.
class NotMeasurable : public Error {
public:
    explicit NotMeasurable(const std::string& msg) : Error(msg) {}
};

/// Malformed input text; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace ip3lab

#endif  // IP3LAB_ERRORS_HPP
