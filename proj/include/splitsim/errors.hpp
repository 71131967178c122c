#pragma once

#include <stdexcept>
#include <string>

namespace splitsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// Spectral / clustering degeneracies.
struct DegenerateSpectrum : Error { using Error::Error; };
struct DegenerateScores : Error { using Error::Error; };

// Distance-correlation degeneracies.
struct DegenerateLabels : Error { using Error::Error; };
struct DegenerateEmbeddings : Error { using Error::Error; };

// Ranking metrics.
struct SingleClass : Error { using Error::Error; };

// Neural-net bookkeeping.
struct StaleCache : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// Two-party message layer.
struct ProtocolError : Error { using Error::Error; };

// CSV ingestion.
struct MalformedRow : Error { using Error::Error; };
struct UnparseableReal : Error { using Error::Error; };
struct MissingLabelColumn : Error { using Error::Error; };

// Experiment configuration.
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace splitsim
