#pragma once

#include <stdexcept>
#include <string>

namespace cof {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Every key column of a softmax row was excluded.
class DegenerateRow : public Error {
 public:
  using Error::Error;
};

// Network failure, timeout, non-2xx status or an unparsable reply.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The remote backend refused a feature it does not implement (e.g. masks).
class CapabilityMissing : public Error {
 public:
  using Error::Error;
};

}  // namespace cof
