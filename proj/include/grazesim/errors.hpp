#pragma once

#include <stdexcept>
#include <string>

namespace grazesim {

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct NotPSD : std::runtime_error {
  explicit NotPSD(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateDenominator : std::runtime_error {
  explicit DegenerateDenominator(const std::string& what) : std::runtime_error(what) {}
};

struct OnUnitCircle : std::runtime_error {
  explicit OnUnitCircle(const std::string& what) : std::runtime_error(what) {}
};

struct ChainInconsistent : std::runtime_error {
  explicit ChainInconsistent(const std::string& what) : std::runtime_error(what) {}
};

struct Unstable : std::runtime_error {
  explicit Unstable(const std::string& what) : std::runtime_error(what) {}
};

struct Diverged : std::runtime_error {
  explicit Diverged(const std::string& what) : std::runtime_error(what) {}
};

struct NoReturns : std::runtime_error {
  explicit NoReturns(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroXStar : std::runtime_error {
  explicit ZeroXStar(const std::string& what) : std::runtime_error(what) {}
};

struct Tangential : std::runtime_error {
  explicit Tangential(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureNotConverged : std::runtime_error {
  explicit QuadratureNotConverged(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateNormalForm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GrazingDegenerate : std::runtime_error {
  explicit GrazingDegenerate(const std::string& what) : std::runtime_error(what) {}
};

struct StepTooLarge : std::runtime_error {
  explicit StepTooLarge(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grazesim
