#include "drsl/core.hpp"

namespace drsl {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyDesign: return "EmptyDesign";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::BadParams: return "BadParams";
    case Errc::UnknownCondition: return "UnknownCondition";
    case Errc::BadArchitecture: return "BadArchitecture";
    case Errc::BadAlpha: return "BadAlpha";
    case Errc::BatchTooLarge: return "BatchTooLarge";
    case Errc::ConditionMismatch: return "ConditionMismatch";
    case Errc::BadStep: return "BadStep";
    case Errc::ConstantVector: return "ConstantVector";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ConstantRow: return "ConstantRow";
    case Errc::DegeneratePair: return "DegeneratePair";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::BadSpec: return "BadSpec";
    case Errc::InfeasibleSchedule: return "InfeasibleSchedule";
    case Errc::MissingFile: return "MissingFile";
    case Errc::ParseError: return "ParseError";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::IoError: return "IoError";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace drsl
