#pragma once
// Typed error hierarchy. Every throwing code path in the library raises one of
// these so callers (CLI, bindings, tests) can map failures to exit codes.

#include <stdexcept>
#include <string>
#include <vector>

namespace edlab {

// Root of the hierarchy.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- construction / configuration ---------------------------------------

struct DimensionError : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct ChartMismatch : Error {
  using Error::Error;
};

// Collects every violation found while validating a configuration.
struct ValidationError : Error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v)
      : Error(join(v)), violations(std::move(v)) {}
  explicit ValidationError(const std::string& msg)
      : Error(msg), violations{msg} {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "configuration invalid:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
};

struct ParseError : Error {
  int line = 0, column = 0;
  ParseError(int line_, int col_, const std::string& msg)
      : Error("parse error at line " + std::to_string(line_) + ", column " +
              std::to_string(col_) + ": " + msg),
        line(line_),
        column(col_) {}
};

// --- state construction ---------------------------------------------------

struct UnresolvableWidth : Error {
  using Error::Error;
};

struct BoundaryLeak : Error {
  using Error::Error;
};

// Density touched the floor where a nodeless field was required.
struct NodeError : Error {
  using Error::Error;
};

// --- geometry -------------------------------------------------------------

// A verified identity (inner-product assembly, J^2 = -1, ...) failed.
struct IdentityViolation : Error {
  using Error::Error;
};

// Quantum-geometry checks are only meaningful on the eta == hbar locus.
struct EtaHbarMismatch : Error {
  using Error::Error;
};

// --- solvers / best matching ----------------------------------------------

struct SolverDivergence : Error {
  using Error::Error;
};

struct NegativeLapse : Error {
  using Error::Error;
};

struct SingularInertia : Error {
  using Error::Error;
};

struct NotCentered : Error {
  using Error::Error;
};

// --- sampler ---------------------------------------------------------------

struct InfeasibleConstraint : Error {
  using Error::Error;
};

struct UndersampledBins : Error {
  using Error::Error;
};

// --- checkpoint files -------------------------------------------------------

struct BadMagic : Error {
  using Error::Error;
};

struct VersionMismatch : Error {
  using Error::Error;
};

struct TruncatedFile : Error {
  using Error::Error;
};

struct ChecksumMismatch : Error {
  using Error::Error;
};

}  // namespace edlab
