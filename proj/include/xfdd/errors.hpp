#pragma once

#include <stdexcept>
#include <string>

namespace xfdd {

// Base of every error the library throws. The CLI maps subclasses onto exit
// codes (config 2, data 3, divergence 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class LabelError : public DataError {
 public:
  using DataError::DataError;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class AttributionError : public Error {
 public:
  using Error::Error;
};

}  // namespace xfdd
