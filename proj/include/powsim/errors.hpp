#pragma once

#include <stdexcept>
#include <string>

namespace powsim {

enum class Errc {
    // chain
    UnknownParent,
    DuplicateBlock,
    HeightMismatch,
    WrongEpochLength,
    NonMonotoneTimestamps,
    CustomSeriesExhausted,
    // sim
    ProbabilityOutOfRange,
    ConfigInvalid,
    // analytics
    DegeneratePhi,
    DegenerateBetaHon,
    NMinersTooSmall,
    BothZero,
    TailNotConverged,
    DegenerateInput,
    ZeroPartyFraction,
    // pragthos
    UnknownCommit,
    // harness
    ParseError,
    ValidationError,
    IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace powsim
