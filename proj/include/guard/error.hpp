#pragma once

#include <stdexcept>
#include <string>

namespace guard {

// Base class for all domain errors raised by this library. CLI maps these
// to exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GUARD_DEFINE_ERROR(Name)                       \
    class Name : public Error {                        \
    public:                                            \
        using Error::Error;                            \
    }

// taxonomy
GUARD_DEFINE_ERROR(SchemaError);
GUARD_DEFINE_ERROR(ValidationError);
GUARD_DEFINE_ERROR(NotFoundError);
GUARD_DEFINE_ERROR(NotFairnessTask);

// metrics
GUARD_DEFINE_ERROR(InvalidDistribution);
GUARD_DEFINE_ERROR(SupportMismatch);
GUARD_DEFINE_ERROR(AbsoluteContinuityViolation);
GUARD_DEFINE_ERROR(DegenerateSupport);
GUARD_DEFINE_ERROR(EmptyTally);
GUARD_DEFINE_ERROR(LengthMismatch);
GUARD_DEFINE_ERROR(EmptyAfterExclusion);

// prompt pipeline
GUARD_DEFINE_ERROR(ProviderUnavailable);
GUARD_DEFINE_ERROR(MixedProviders);
GUARD_DEFINE_ERROR(ParseError);
GUARD_DEFINE_ERROR(UnknownCategory);
GUARD_DEFINE_ERROR(WrongVoteCount);

// annotation
GUARD_DEFINE_ERROR(SameAnnotator);
GUARD_DEFINE_ERROR(PreconditionViolation);

// model
GUARD_DEFINE_ERROR(InvalidConfig);
GUARD_DEFINE_ERROR(ShapeMismatch);
GUARD_DEFINE_ERROR(ZeroNormRow);
GUARD_DEFINE_ERROR(AllMasked);
GUARD_DEFINE_ERROR(NonFiniteGradient);
GUARD_DEFINE_ERROR(DivergedLoss);

// scoring backends
GUARD_DEFINE_ERROR(TransportError);
GUARD_DEFINE_ERROR(TimeoutError);
GUARD_DEFINE_ERROR(AuthError);
GUARD_DEFINE_ERROR(RateLimited);

// bench runner
GUARD_DEFINE_ERROR(FatalIO);
GUARD_DEFINE_ERROR(EmptyRecords);
GUARD_DEFINE_ERROR(AllExcluded);
GUARD_DEFINE_ERROR(CountMismatch);

#undef GUARD_DEFINE_ERROR

}  // namespace guard
