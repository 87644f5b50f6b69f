#pragma once

#include <stdexcept>
#include <string>

namespace qclearn {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : Error { using Error::Error; };
struct MalformedEncoding : Error { using Error::Error; };
struct EnsembleTooLarge : Error { using Error::Error; };
struct EnsembleExhausted : Error { using Error::Error; };
struct DegeneratePair : Error { using Error::Error; };
struct InvalidSecret : Error { using Error::Error; };
struct TooManyQubits : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct CorruptCheckpoint : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct OverlapDetected : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct InconsistentInput : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

}  // namespace qclearn
