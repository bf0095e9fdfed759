#pragma once

#include <stdexcept>
#include <string>

namespace kancast {

// Base class for all library errors. Subclasses carry the failure kind in
// the type so callers can catch selectively; the message carries context.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateDomain : Error { using Error::Error; };
struct OrderTooLow : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct ZeroNorm : Error { using Error::Error; };
struct NonFiniteObjective : Error { using Error::Error; };
struct AllPruned : Error { using Error::Error; };
struct DegenerateSamples : Error { using Error::Error; };
struct NonAffineEdge : Error { using Error::Error; };
struct MissingFeature : Error { using Error::Error; };

struct FileNotFound : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct DuplicateDate : Error { using Error::Error; };
struct InsufficientHistory : Error { using Error::Error; };
struct EmptySegment : Error { using Error::Error; };
struct MissingRate : Error { using Error::Error; };

struct SingularDesign : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };
struct SingularFit : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };
struct InsufficientContext : Error { using Error::Error; };

struct NonPositiveActual : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct PerfectForecast : Error { using Error::Error; };
struct DegenerateForecast : Error { using Error::Error; };
struct ZeroResiduals : Error { using Error::Error; };

struct EmptyJoin : Error { using Error::Error; };
struct MissingBaseReport : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

} // namespace kancast
