#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qiraa {

/// Base for every data error raised by the toolkit. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& why)
      : Error("malformed line " + std::to_string(line_no) + ": " + why), line_no(line_no) {}
  std::size_t line_no;
};

class CyclicTree : public Error {
 public:
  explicit CyclicTree(std::string id)
      : Error("cyclic dependency tree in sentence '" + id + "'"), sent_id(std::move(id)) {}
  std::string sent_id;
};

class UnknownLabel : public Error {
 public:
  UnknownLabel(std::string id, const std::string& label)
      : Error("unknown CEFR label '" + label + "' in sentence '" + id + "'"), sent_id(std::move(id)) {}
  std::string sent_id;
};

class TooFewInstances : public Error {
 public:
  TooFewInstances(int cls, std::size_t count, std::size_t k)
      : Error("class " + std::to_string(cls) + " has " + std::to_string(count) +
              " instances, fewer than k=" + std::to_string(k)),
        class_id(cls) {}
  int class_id;
};

class EmptyLemma : public Error {
 public:
  explicit EmptyLemma(const std::string& source) : Error("empty lemma in list '" + source + "'") {}
};

class DimMismatch : public Error {
 public:
  explicit DimMismatch(const std::string& where) : Error("dimension mismatch at " + where) {}
};

class BadHeader : public Error {
 public:
  explicit BadHeader(const std::string& why) : Error("bad header: " + why) {}
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id) : Error("duplicate sentence id '" + id + "'") {}
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class InvalidHyperparam : public Error {
 public:
  using Error::Error;
};

class FeatureMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownSentence : public Error {
 public:
  explicit UnknownSentence(std::string id)
      : Error("unknown sentence '" + id + "'"), sent_id(std::move(id)) {}
  std::string sent_id;
};

class MissingNewLabel : public Error {
 public:
  explicit MissingNewLabel(const std::string& id)
      : Error("Modify decision for '" + id + "' has no new_label") {}
};

class InvalidDecision : public Error {
 public:
  using Error::Error;
};

class DuplicateDecision : public Error {
 public:
  explicit DuplicateDecision(std::string id)
      : Error("sentence '" + id + "' already has a decision"), sent_id(std::move(id)) {}
  std::string sent_id;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qiraa
