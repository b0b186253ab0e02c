#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dvauth {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A problem directory does not follow the expected layout.
class StructuralError : public Error {
 public:
  StructuralError(std::string problem_id, const std::string& what)
      : Error(what), problem_id_(std::move(problem_id)) {}
  const std::string& problem_id() const noexcept { return problem_id_; }

 private:
  std::string problem_id_;
};

// Truth file and problem tree disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  DecodeError(std::string file, const std::string& what)
      : Error(what), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

// Malformed binary or JSON payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// External token sidecar does not match the document being scored.
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// No deviation vectors to average.
class EmptyEvidenceError : public Error {
 public:
  using Error::Error;
};

class UndefinedSimilarityError : public Error {
 public:
  enum class Side { first, second, both };
  UndefinedSimilarityError(Side side, const std::string& what)
      : Error(what), side_(side) {}
  Side side() const noexcept { return side_; }

 private:
  Side side_;
};

// ROC-AUC requested on single-class labels.
class UndefinedAucError : public Error {
 public:
  using Error::Error;
};

}  // namespace dvauth
