#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sinusnav {

enum class Errc {
  invalid_argument,
  invalid_state,
  degenerate_geometry,
  file_not_found,
  malformed_row,
  empty_cloud,
  infeasible_endpoint,
  no_path_found,
  too_few_markers,
  label_mismatch,
  collinear_markers,
  empty_frame,
  no_skeleton,
  no_endpoint,
  degenerate_view,
  infeasible_limits,
  imaging_failure,
  timeout,
  config_error,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sinusnav
