#pragma once

#include <stdexcept>
#include <string>

namespace porescope {

/// Problems with user-supplied data or arguments. CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failures (solvers, fits). CLI maps these to exit code 1.
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -- volume ingest --
struct SizeMismatch : InputError { using InputError::InputError; };
struct InconsistentSlices : InputError { using InputError::InputError; };
struct MissingSidecar : InputError { using InputError::InputError; };

// -- pore-space cleaning / sectioning --
struct EmptyPoreSpace : InputError { using InputError::InputError; };
struct SectionTooThin : InputError { using InputError::InputError; };

// -- pore network --
struct NoSpanningPath : InputError { using InputError::InputError; };
struct DisconnectedNetwork : ComputeError { using ComputeError::ComputeError; };
struct SolverDiverged : ComputeError { using ComputeError::ComputeError; };

// -- flow-field import / interpolation --
struct MalformedHeader : InputError { using InputError::InputError; };
struct NonMonotonePlanes : InputError { using InputError::InputError; };
struct InsufficientPlanes : InputError { using InputError::InputError; };

// -- streamline analytics --
struct ClosedPath : ComputeError { using ComputeError::ComputeError; };
struct DegenerateXY : ComputeError { using ComputeError::ComputeError; };
struct TooFewSamples : ComputeError { using ComputeError::ComputeError; };
struct MissingSamples : InputError { using InputError::InputError; };
struct ZeroVariance : ComputeError { using ComputeError::ComputeError; };

// -- regime fitting --
struct InsufficientPoints : ComputeError { using ComputeError::ComputeError; };
struct IllConditioned : ComputeError { using ComputeError::ComputeError; };

} // namespace porescope
