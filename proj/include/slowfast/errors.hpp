#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slowfast {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched spaces, shapes or layouts.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Argument outside its mathematical domain (non-finite time, zero variance, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Parameters violate the hypotheses or the (mu, epsilon) window.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

class WindowExhaustedError : public Error {
 public:
  WindowExhaustedError(const std::string& what, std::int64_t requested_cell,
                       std::int64_t first_cell, std::int64_t end_cell)
      : Error(what), requested_cell(requested_cell), first_cell(first_cell), end_cell(end_cell) {}

  std::int64_t requested_cell;
  std::int64_t first_cell;
  std::int64_t end_cell;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residual_history)
      : Error(what), residuals(std::move(residual_history)) {}

  std::vector<double> residuals;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step) : Error(what), step(step) {}

  std::int64_t step;
};

class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double ess) : Error(what), effective_sample_size(ess) {}

  double effective_sample_size;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string field, int line)
      : Error(what), field(std::move(field)), line(line) {}

  std::string field;
  int line;  // 1-based, 0 when unknown
};

}  // namespace slowfast
