#pragma once

#include <stdexcept>
#include <string>

namespace flfp {

enum class errc {
    // capture ingestion
    malformed_capture,
    unsupported_link_type,
    empty_session,
    ambiguous_direction,
    schema_mismatch,
    row_parse_error,
    // feature extraction
    min_packets_not_met,
    unlabeled_session,
    empty_dataset,
    bad_range,
    empty_values,
    edge_mismatch,
    single_class_dataset,
    index_out_of_range,
    // classifiers
    arity_mismatch,
    too_few_samples,
    empty_grid,
    corrupt_model,
    // evaluation
    length_mismatch,
    empty_matrix,
    // synthesis
    degenerate_profile,
    frame_too_small,
    // environment
    io_failure,
    config_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::malformed_capture:     return "MalformedCapture";
        case errc::unsupported_link_type: return "UnsupportedLinkType";
        case errc::empty_session:         return "EmptySession";
        case errc::ambiguous_direction:   return "AmbiguousDirection";
        case errc::schema_mismatch:       return "SchemaMismatch";
        case errc::row_parse_error:       return "RowParseError";
        case errc::min_packets_not_met:   return "MinPacketsNotMet";
        case errc::unlabeled_session:     return "UnlabeledSession";
        case errc::empty_dataset:         return "EmptyDataset";
        case errc::bad_range:             return "BadRange";
        case errc::empty_values:          return "EmptyValues";
        case errc::edge_mismatch:         return "EdgeMismatch";
        case errc::single_class_dataset:  return "SingleClassDataset";
        case errc::index_out_of_range:    return "IndexOutOfRange";
        case errc::arity_mismatch:        return "ArityMismatch";
        case errc::too_few_samples:       return "TooFewSamples";
        case errc::empty_grid:            return "EmptyGrid";
        case errc::corrupt_model:         return "CorruptModel";
        case errc::length_mismatch:       return "LengthMismatch";
        case errc::empty_matrix:          return "EmptyMatrix";
        case errc::degenerate_profile:    return "DegenerateProfile";
        case errc::frame_too_small:       return "FrameTooSmall";
        case errc::io_failure:            return "IoFailure";
        case errc::config_error:          return "ConfigError";
    }
    return "UnknownError";
}

/// Error raised by every fallible operation in the library. The code
/// identifies the failure class; what() carries the specifics.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace flfp
