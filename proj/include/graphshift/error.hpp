#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphshift {

enum class ErrorKind {
    invalid_input,
    unsupported_measure,
    undefined_ratio,
    singular_energy,
    not_in_stable_set,
    not_in_unstable_set,
    resonant_energy,
    insufficient_data,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::unsupported_measure: return "unsupported-measure";
    case ErrorKind::undefined_ratio: return "undefined-ratio";
    case ErrorKind::singular_energy: return "singular-energy";
    case ErrorKind::not_in_stable_set: return "not-in-stable-set";
    case ErrorKind::not_in_unstable_set: return "not-in-unstable-set";
    case ErrorKind::resonant_energy: return "resonant-energy";
    case ErrorKind::insufficient_data: return "insufficient-data";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace graphshift
