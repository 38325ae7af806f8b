#ifndef FRACGMRF_ERRORS_HPP
#define FRACGMRF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracgmrf {

/// Numerical failures (factorization breakdown, positivity violations,
/// degenerate linear systems). Distinct from argument/config errors so the
/// CLI can map them to a dedicated exit code.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracgmrf

#endif
