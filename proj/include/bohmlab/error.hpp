#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohmlab {

enum class ErrorKind {
  resolution,             // packet narrower than the grid can resolve
  domain,                 // data leaves or does not fit the grid domain
  precondition,           // caller violated a documented precondition
  grid_mismatch,          // operands live on different grids
  configuration,          // invalid run/solver configuration
  conditional_undefined,  // conditioning on a density node
  insufficient_data,      // statistics cannot be formed
  disjointness,           // measurement branches overlap
  normalization,          // distribution or state not normalized
  unknown_scenario,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bohmlab
