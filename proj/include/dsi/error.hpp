#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsi {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    DuplicateToken,
    DuplicateShift,
    ManifestMissing,
    ManifestMalformed,
    EmbeddingFileMissing,
    EmbeddingTruncated,
    PlaceholderMissing,
    PlaceholderDuplicated,
    MultipleTokens,
    NonFinite,
    EmptyInput,
    BackendFailure,
    AllSamplesFailed,
    Unscored,
    Uncalibratable,
    UnknownSample,
    RejectedSample,
    MissingBaseClass,
    NoEligibleClasses,
    MixedShifts,
    SlopeUndefined,
    NotFound,
    InvalidState,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a category so callers
/// (CLI, HTTP service) can map it to an exit code or status without
/// parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace dsi
