#include "loopcompat/error.hpp"

namespace loopcompat {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::EstimationFailed: return "EstimationFailed";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::NoInstance: return "NoInstance";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::Undeterminable: return "Undeterminable";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::IngestError: return "IngestError";
  }
  return "Unknown";
}

}  // namespace loopcompat
