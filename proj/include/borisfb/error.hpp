#pragma once

#include <stdexcept>
#include <string>

namespace borisfb {

inline constexpr const char* kVersion = "0.1.0";

enum class errc {
    invalid_argument,
    zero_field,
    filter_pole,
    singular_matrix,
    no_convergence,
    degenerate_field,
    resonance_rejected,
    oracle_not_converged,
    grid_mismatch,
    insufficient_data,
    io_error,
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw Error(code, std::string(errc_name(code)) + ": " + what);
}

inline const char* errc_name(errc code) noexcept {
    switch (code) {
        case errc::invalid_argument:     return "InvalidArgument";
        case errc::zero_field:           return "ZeroField";
        case errc::filter_pole:          return "FilterPole";
        case errc::singular_matrix:      return "SingularMatrix";
        case errc::no_convergence:       return "NoConvergence";
        case errc::degenerate_field:     return "DegenerateField";
        case errc::resonance_rejected:   return "ResonanceRejected";
        case errc::oracle_not_converged: return "OracleNotConverged";
        case errc::grid_mismatch:        return "GridMismatch";
        case errc::insufficient_data:    return "InsufficientData";
        case errc::io_error:             return "IoError";
    }
    return "UnknownError";
}

}  // namespace borisfb
