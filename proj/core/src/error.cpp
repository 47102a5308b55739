#include "gridswitch/error.hpp"

namespace gridswitch {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::DisconnectedGraph: return "DisconnectedGraph";
        case Errc::DuplicateLine: return "DuplicateLine";
        case Errc::NonPositiveParameter: return "NonPositiveParameter";
        case Errc::DanglingReference: return "DanglingReference";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::ImproperTransferFunction: return "ImproperTransferFunction";
        case Errc::DegenerateLeadingCoefficient: return "DegenerateLeadingCoefficient";
        case Errc::NonlinearModelUnsupported: return "NonlinearModelUnsupported";
        case Errc::EmptyGrid: return "EmptyGrid";
        case Errc::UnsupportedVariant: return "UnsupportedVariant";
        case Errc::StorageSearchFailed: return "StorageSearchFailed";
        case Errc::NotInJumpSet: return "NotInJumpSet";
        case Errc::StepRejected: return "StepRejected";
        case Errc::NoSignChange: return "NoSignChange";
        case Errc::MaxBisectionsExceeded: return "MaxBisectionsExceeded";
        case Errc::NotAttracting: return "NotAttracting";
        case Errc::InvalidInitialSigma: return "InvalidInitialSigma";
        case Errc::NumericalBlowup: return "NumericalBlowup";
        case Errc::InsufficientSwitches: return "InsufficientSwitches";
        case Errc::NoEquilibriumFound: return "NoEquilibriumFound";
        case Errc::NonzeroFrequencyRequired: return "NonzeroFrequencyRequired";
        case Errc::MissingEquilibrium: return "MissingEquilibrium";
        case Errc::SyntaxError: return "SyntaxError";
        case Errc::SchemaError: return "SchemaError";
        case Errc::SemanticError: return "SemanticError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace gridswitch
