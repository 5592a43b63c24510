#pragma once

#include <stdexcept>
#include <string>

namespace sigforge {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct EmptyCorpus : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };

// nncore / dbn
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// classify
struct EmptyTrainingSet : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// embed
struct TooFewPoints : Error { using Error::Error; };

// files / pipeline
struct IoFailure : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct MissingArtifact : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };

}  // namespace sigforge
