#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridswitch {

/// Failure categories raised by the library. Every throw site uses one of these,
/// so callers (and the CLI exit-code mapping) can branch on the code alone.
enum class Errc {
    // network
    DisconnectedGraph,
    DuplicateLine,
    NonPositiveParameter,
    DanglingReference,
    DimensionMismatch,
    // supply
    ImproperTransferFunction,
    DegenerateLeadingCoefficient,
    NonlinearModelUnsupported,
    EmptyGrid,
    UnsupportedVariant,
    StorageSearchFailed,
    // loads
    NotInJumpSet,
    // solver
    StepRejected,
    NoSignChange,
    MaxBisectionsExceeded,
    NotAttracting,
    InvalidInitialSigma,
    NumericalBlowup,
    InsufficientSwitches,
    // analysis
    NoEquilibriumFound,
    NonzeroFrequencyRequired,
    MissingEquilibrium,
    // scenario io
    SyntaxError,
    SchemaError,
    SemanticError,
    InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace gridswitch
