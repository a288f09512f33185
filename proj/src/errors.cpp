#include "sinusnav/errors.hpp"

namespace sinusnav {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_state: return "invalid-state";
    case Errc::degenerate_geometry: return "degenerate-geometry";
    case Errc::file_not_found: return "file-not-found";
    case Errc::malformed_row: return "malformed-row";
    case Errc::empty_cloud: return "empty-cloud";
    case Errc::infeasible_endpoint: return "infeasible-endpoint";
    case Errc::no_path_found: return "no-path-found";
    case Errc::too_few_markers: return "too-few-markers";
    case Errc::label_mismatch: return "label-mismatch";
    case Errc::collinear_markers: return "collinear-markers";
    case Errc::empty_frame: return "empty-frame";
    case Errc::no_skeleton: return "no-skeleton";
    case Errc::no_endpoint: return "no-endpoint";
    case Errc::degenerate_view: return "degenerate-view";
    case Errc::infeasible_limits: return "infeasible-limits";
    case Errc::imaging_failure: return "imaging-failure";
    case Errc::timeout: return "timeout";
    case Errc::config_error: return "config-error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace sinusnav
