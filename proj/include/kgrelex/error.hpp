#ifndef KGRELEX_ERROR_HPP
#define KGRELEX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace kgrelex {

// Exit-code families used by the command-line tool.
enum class ErrorKind { Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
  ErrorKind kind_;
};

// Unknown entity/relation id or name, or a write to a frozen vocabulary.
class VocabularyError : public Error {
public:
  explicit VocabularyError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Malformed input record.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

// Empty training set, divergence, non-finite parameters.
class TrainingError : public Error {
public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace kgrelex

#endif  // KGRELEX_ERROR_HPP
