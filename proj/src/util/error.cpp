#include "shortscribe/error.hpp"

namespace shortscribe {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UndecodableMedia: return "UndecodableMedia";
        case ErrorCode::EmptyVideo: return "EmptyVideo";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BackendMalformedResponse: return "BackendMalformedResponse";
        case ErrorCode::MissingCaption: return "MissingCaption";
        case ErrorCode::PayloadKindMismatch: return "PayloadKindMismatch";
        case ErrorCode::SummaryCountMismatch: return "SummaryCountMismatch";
        case ErrorCode::EmptyResponse: return "EmptyResponse";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::ConcurrentWrite: return "ConcurrentWrite";
        case ErrorCode::InvalidCursor: return "InvalidCursor";
        case ErrorCode::UnknownControl: return "UnknownControl";
        case ErrorCode::InvalidEvent: return "InvalidEvent";
        case ErrorCode::MetadataMissing: return "MetadataMissing";
        case ErrorCode::PortInUse: return "PortInUse";
        case ErrorCode::LabelSchemaError: return "LabelSchemaError";
        case ErrorCode::InvalidTally: return "InvalidTally";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace shortscribe
