#pragma once

#include <stdexcept>
#include <string>

namespace vpecg {

// Base class for every error raised by the library. Each subclass maps to one
// failure mode of the public operations so callers can catch selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VPECG_DEFINE_ERROR(Name)                          \
    class Name : public Error {                           \
    public:                                               \
        explicit Name(const std::string& what) : Error(what) {} \
    }

VPECG_DEFINE_ERROR(BoundsViolation);
VPECG_DEFINE_ERROR(KnotCollision);
VPECG_DEFINE_ERROR(InfeasibleInit);
VPECG_DEFINE_ERROR(TooFewPeaks);
VPECG_DEFINE_ERROR(EmptyInput);
VPECG_DEFINE_ERROR(NoSignificantExtrema);
VPECG_DEFINE_ERROR(DegenerateInput);
VPECG_DEFINE_ERROR(EmptyWindow);
VPECG_DEFINE_ERROR(NoMatchingBeats);
VPECG_DEFINE_ERROR(TooFewAnchors);
VPECG_DEFINE_ERROR(ZeroNoise);
VPECG_DEFINE_ERROR(NonUniformSampling);
VPECG_DEFINE_ERROR(IoError);
VPECG_DEFINE_ERROR(ConfigError);

#undef VPECG_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(const std::string& file, long line, const std::string& what)
        : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace vpecg
