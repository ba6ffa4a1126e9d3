#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace advml {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedSize : public Error {
 public:
  using Error::Error;
};

// An iterative solver stopped before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals, int iterations)
      : Error(what), residuals_(std::move(residuals)), iterations_(iterations) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> residuals_;
  int iterations_;
};

class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(const std::string& what, std::size_t used) : Error(what), used_(used) {}
  std::size_t queries_used() const noexcept { return used_; }

 private:
  std::size_t used_;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class InvalidStart : public Error {
 public:
  using Error::Error;
};

class InsufficientPopulation : public Error {
 public:
  using Error::Error;
};

class InvalidTrigger : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t byte_offset)
      : Error(what + " (line " + std::to_string(line) + ", byte " + std::to_string(byte_offset) + ")"),
        line_(line),
        byte_offset_(byte_offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t line_;
  std::size_t byte_offset_;
};

}  // namespace advml
