#ifndef MAQ_ERRORS_H_
#define MAQ_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maq {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record in a line-delimited input file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A document violates a data-model invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string &doc_id, const std::string &what)
      : Error("document '" + doc_id + "': " + what), doc_id_(doc_id) {}
  const std::string &doc_id() const { return doc_id_; }

 private:
  std::string doc_id_;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

class UnknownRelation : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class SizeExceeded : public Error {
 public:
  using Error::Error;
};

// Array dimensions disagree (distribution vs. label, matrix shape, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

class UniverseMismatch : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string &what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace maq

#endif  // MAQ_ERRORS_H_
