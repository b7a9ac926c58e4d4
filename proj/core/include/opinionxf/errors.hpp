#pragma once

#include <stdexcept>
#include <string>

namespace opinionxf {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A line of an input file could not be parsed at all.
class ParseError : public Error {
 public:
  using Error::Error;
};

// The input parsed but violates a structural invariant (ragged question
// counts, unknown topic, missing field, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// An answer string is absent from the vocabulary.
class OovError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Invalid configuration values or invalid flag combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A data file is syntactically valid but malformed for its format
// (dimension mismatch, duplicate key, bad header, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or other numeric failures inside an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A spectrum handed to ifft is not conjugate-symmetric.
class SpectrumError : public NumericError {
 public:
  using NumericError::NumericError;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Pooling a deck whose slide vectors cancel to a zero mean.
class DegenerateDeckError : public Error {
 public:
  using Error::Error;
};

// A record names no deck and no deck's keywords match its topic.
class UnassignedRecordError : public Error {
 public:
  using Error::Error;
};

// Systems handed to compare() were not evaluated on the same split.
class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace opinionxf
