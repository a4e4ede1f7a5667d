#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace multitrack {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Aggregate load at a destination reached the capacity guard.
class CapacityViolation : public Error {
 public:
  CapacityViolation(std::size_t tracker, double load, double capacity);
  std::size_t tracker() const { return tracker_; }
  double load() const { return load_; }
  double capacity() const { return capacity_; }

 private:
  std::size_t tracker_;
  double load_;
  double capacity_;
};

class NoSuchEdge : public Error {
 public:
  NoSuchEdge(std::size_t from, std::size_t to);
};

class StepCollapse : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class MaxIterations : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class InnerNotConverged : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Carries every violation found during validation, not only the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace multitrack
