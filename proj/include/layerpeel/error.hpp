#pragma once

#include <stdexcept>
#include <string>

namespace layerpeel {

/// Base class for every error raised by the library. Each subclass maps to
/// one named failure mode so callers can dispatch on type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LAYERPEEL_DEFINE_ERROR(Name)              \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

// svg_core
LAYERPEEL_DEFINE_ERROR(MalformedXml);
LAYERPEEL_DEFINE_ERROR(UnsupportedFeature);

// occlusion / dataset / metrics
LAYERPEEL_DEFINE_ERROR(EmptyDocument);

// raster_engine / metrics
LAYERPEEL_DEFINE_ERROR(DimensionMismatch);

// vectorizer
LAYERPEEL_DEFINE_ERROR(DegeneratePolygon);

// layer_graph
LAYERPEEL_DEFINE_ERROR(InvalidJson);
LAYERPEEL_DEFINE_ERROR(SchemaViolation);
LAYERPEEL_DEFINE_ERROR(DanglingEdge);

// attention_planner
LAYERPEEL_DEFINE_ERROR(LayoutMismatch);
LAYERPEEL_DEFINE_ERROR(EmptyBox);

// peel_orchestrator
LAYERPEEL_DEFINE_ERROR(StallDetected);
LAYERPEEL_DEFINE_ERROR(OutputExists);

// eval_metrics
LAYERPEEL_DEFINE_ERROR(EmptyCloud);
LAYERPEEL_DEFINE_ERROR(ServiceUnavailable);
LAYERPEEL_DEFINE_ERROR(UnpairedFile);

// model_gateways
LAYERPEEL_DEFINE_ERROR(MissingTag);
LAYERPEEL_DEFINE_ERROR(InvalidGraphJson);
LAYERPEEL_DEFINE_ERROR(BoxOutOfRange);

/// Failure reported by (or while talking to) an annotator, remover or
/// embedding backend.
LAYERPEEL_DEFINE_ERROR(BackendError);

#undef LAYERPEEL_DEFINE_ERROR

#define LAYERPEEL_DEFINE_BACKEND_ERROR(Name)      \
    class Name : public BackendError {            \
    public:                                       \
        using BackendError::BackendError;         \
    }

LAYERPEEL_DEFINE_BACKEND_ERROR(Timeout);
LAYERPEEL_DEFINE_BACKEND_ERROR(Unauthorized);
LAYERPEEL_DEFINE_BACKEND_ERROR(ServerError);

#undef LAYERPEEL_DEFINE_BACKEND_ERROR

/// Response that does not follow the wire protocol. Keeps the raw body.
class ProtocolError : public BackendError {
public:
    ProtocolError(const std::string& message, std::string raw_payload)
        : BackendError(message), raw_payload_(std::move(raw_payload)) {}

    const std::string& raw_payload() const { return raw_payload_; }

private:
    std::string raw_payload_;
};

} // namespace layerpeel
