#pragma once

#include <stdexcept>
#include <string>

namespace affdim {

// Failure categories used across the library. The CLI maps these to exit
// codes (invalid input -> 2, resource limits -> 3).
enum class Errc {
  invalid_argument,
  empty_result,
  level_cap,
  invalid_ifs,
  not_projectable,
  unsupported,
  insufficient_mass,
  invalid_parameters,
  non_convergence,
  resource_limit,
  degenerate_direction,
  no_furstenberg_directions,
  invalid_family,
  no_reference,
  stage_failure,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::empty_result: return "empty-result";
    case Errc::level_cap: return "level-cap";
    case Errc::invalid_ifs: return "invalid-ifs";
    case Errc::not_projectable: return "not-projectable";
    case Errc::unsupported: return "unsupported";
    case Errc::insufficient_mass: return "insufficient-mass";
    case Errc::invalid_parameters: return "invalid-parameters";
    case Errc::non_convergence: return "non-convergence";
    case Errc::resource_limit: return "resource-limit";
    case Errc::degenerate_direction: return "degenerate-direction";
    case Errc::no_furstenberg_directions: return "no-furstenberg-directions";
    case Errc::invalid_family: return "invalid-family";
    case Errc::no_reference: return "no-reference";
    case Errc::stage_failure: return "stage-failure";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace affdim
