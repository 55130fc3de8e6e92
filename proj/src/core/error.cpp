#include "dsi/error.hpp"

namespace dsi {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::DuplicateToken: return "duplicate_token";
        case ErrorCode::DuplicateShift: return "duplicate_shift";
        case ErrorCode::ManifestMissing: return "manifest_missing";
        case ErrorCode::ManifestMalformed: return "manifest_malformed";
        case ErrorCode::EmbeddingFileMissing: return "embedding_file_missing";
        case ErrorCode::EmbeddingTruncated: return "embedding_truncated";
        case ErrorCode::PlaceholderMissing: return "placeholder_missing";
        case ErrorCode::PlaceholderDuplicated: return "placeholder_duplicated";
        case ErrorCode::MultipleTokens: return "multiple_tokens";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::BackendFailure: return "backend_failure";
        case ErrorCode::AllSamplesFailed: return "all_samples_failed";
        case ErrorCode::Unscored: return "unscored";
        case ErrorCode::Uncalibratable: return "uncalibratable";
        case ErrorCode::UnknownSample: return "unknown_sample";
        case ErrorCode::RejectedSample: return "rejected_sample";
        case ErrorCode::MissingBaseClass: return "missing_base_class";
        case ErrorCode::NoEligibleClasses: return "no_eligible_classes";
        case ErrorCode::MixedShifts: return "mixed_shifts";
        case ErrorCode::SlopeUndefined: return "slope_undefined";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::InvalidState: return "invalid_state";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace dsi
