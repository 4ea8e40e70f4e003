#include "llmind/errors.hpp"

namespace llmind {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedDocument: return "malformed-document";
        case ErrorCode::Validation: return "validation";
        case ErrorCode::Identity: return "identity";
        case ErrorCode::Incompatibility: return "incompatibility";
        case ErrorCode::NoCandidates: return "no-candidates";
        case ErrorCode::ProviderUnavailable: return "provider-unavailable";
        case ErrorCode::ExtractionArity: return "extraction-arity";
        case ErrorCode::TypeError: return "type";
        case ErrorCode::RangeError: return "range";
        case ErrorCode::Composition: return "composition";
        case ErrorCode::Template: return "template";
        case ErrorCode::Dispatch: return "dispatch";
        case ErrorCode::Capability: return "capability";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::Addressing: return "addressing";
        case ErrorCode::Protocol: return "protocol";
        case ErrorCode::Framing: return "framing";
        case ErrorCode::Config: return "config";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

} // namespace llmind
