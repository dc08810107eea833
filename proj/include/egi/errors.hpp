#pragma once

#include <stdexcept>
#include <string>

namespace egi {

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateEnsemble : std::runtime_error {
  explicit DegenerateEnsemble(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteValue : std::runtime_error {
  explicit NonFiniteValue(const std::string& what) : std::runtime_error(what) {}
};

struct SingularWhitening : std::runtime_error {
  explicit SingularWhitening(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInnovation : std::runtime_error {
  explicit SingularInnovation(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteState : std::runtime_error {
  explicit NonFiniteState(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownPotential : std::runtime_error {
  explicit UnknownPotential(const std::string& what) : std::runtime_error(what) {}
};

struct BadDimension : std::runtime_error {
  explicit BadDimension(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct BinMismatch : std::runtime_error {
  explicit BinMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureOverflow : std::runtime_error {
  explicit QuadratureOverflow(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace egi
