#pragma once

#include <stdexcept>
#include <string>

namespace babblekit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value lies outside the bounds of its dimension.
class RangeError : public Error {
 public:
  RangeError(std::string dimension, const std::string& what)
      : Error(what), dimension_(std::move(dimension)) {}
  const std::string& dimension() const noexcept { return dimension_; }

 private:
  std::string dimension_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace babblekit
