#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shortscribe {

enum class ErrorCode {
    UndecodableMedia,
    EmptyVideo,
    DimensionMismatch,
    BackendUnavailable,
    BackendMalformedResponse,
    MissingCaption,
    PayloadKindMismatch,
    SummaryCountMismatch,
    EmptyResponse,
    NotFound,
    SchemaViolation,
    ConcurrentWrite,
    InvalidCursor,
    UnknownControl,
    InvalidEvent,
    MetadataMissing,
    PortInUse,
    LabelSchemaError,
    InvalidTally,
    LengthMismatch,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
/// The message is already prefixed with the code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace shortscribe
