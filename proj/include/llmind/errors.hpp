#pragma once

#include <stdexcept>
#include <string>

namespace llmind {

// Error categories thrown across the framework. Each maps to one failure
// class a caller can act on; the message carries the specifics.
enum class ErrorCode {
    MalformedDocument,   // unparseable JSON, carries byte offset
    Validation,          // schema/invariant violation in a document
    Identity,            // device_id mismatch
    Incompatibility,     // embedding dim/provider mismatch
    NoCandidates,        // matching against an empty index
    ProviderUnavailable, // remote adapter failure or timeout
    ExtractionArity,     // extracted value count != function arity
    TypeError,           // value does not parse under the declared type
    RangeError,          // numeric value outside the declared range
    Composition,         // call composition contract violation
    Template,            // placeholder count != 1
    Dispatch,            // unknown function name at the device
    Capability,          // device cannot perform the operation
    Precondition,        // device-level precondition failed
    Addressing,          // subtask sent to the wrong device
    Protocol,            // malformed wire message
    Framing,             // oversized/unterminated wire line
    Config,              // missing or invalid configuration
    Io,                  // file system failure
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace llmind
