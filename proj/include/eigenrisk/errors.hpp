#pragma once

#include <stdexcept>
#include <string>

namespace eigenrisk {

// Base for all library failures so callers can map them to one exit path.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Divergent analytic tail (exponent <= 1).
class DivergentSum : public Error {
public:
  explicit DivergentSum(const std::string& msg) : Error(msg) {}
};

// The implicit equations have no solution on the requested domain.
class NoSolution : public Error {
public:
  explicit NoSolution(const std::string& msg) : Error(msg) {}
};

// n == k in a ridgeless solve, or the risk prefactor denominator crossed zero.
class SingularThreshold : public Error {
public:
  explicit SingularThreshold(const std::string& msg) : Error(msg) {}
};

class SingularMatrix : public Error {
public:
  explicit SingularMatrix(const std::string& msg) : Error(msg) {}
};

// Certified bracket or bisection failure; never silently accepted.
class SolverFailure : public Error {
public:
  explicit SolverFailure(const std::string& msg) : Error(msg) {}
};

}  // namespace eigenrisk
