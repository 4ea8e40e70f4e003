#pragma once

#include "llmind/api_corpus.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace llmind {

/// One single-sentence instruction aimed at one device.
struct SubtaskSpec {
    std::uint64_t subtask_id = 0;
    std::string device_id;
    std::string text;
    std::uint64_t issued_round = 0;

    bool operator==(const SubtaskSpec&) const = default;
};

/// Ordered (parameter name, canonical value string) bindings; one per target
/// function parameter, in declaration order.
struct ArgumentSet {
    std::vector<std::pair<std::string, std::string>> bindings;

    bool operator==(const ArgumentSet&) const = default;
};

/// A validated function call: the target function, its arguments, and the
/// textual rendering "name(v1, v2)".
struct CallPlan {
    ApiFunction function;
    ArgumentSet args;
    std::string rendered_call;
};

/// Program template with exactly one `{{CALL_SITE}}` placeholder.
struct CodeTemplate {
    std::string template_text;
};

inline constexpr std::string_view kCallSitePlaceholder = "{{CALL_SITE}}";

/// Validates the single-placeholder invariant; throws Template error.
CodeTemplate load_template(std::string_view raw);
CodeTemplate load_template_file(const std::string& path);

/// Template with the placeholder substituted by the rendered call.
struct RenderedProgram {
    std::string text;
    CallPlan call_plan;
};

/// Pulls argument values out of a subtask sentence. Implementations return
/// canonical value strings aligned with the function's parameter order.
class ArgumentExtractor {
public:
    virtual ~ArgumentExtractor() = default;
    virtual std::string extractor_id() const = 0;
    virtual std::vector<std::string> extract(const std::string& text,
                                             const ApiFunction& function) const = 0;
};

/// Deterministic rule-based extractor. Value discovery: digit literals,
/// signed decimals, and number words (zero through nine hundred ninety-nine,
/// hyphenated compounds, "point" decimals, "minus"/"negative") for numeric
/// parameters; quoted spans for string parameters; true/false/on/off for
/// boolean parameters. Binding: values attach to the parameter whose name
/// tokens appear nearest in the text, preferring a value that follows the
/// mention over one that precedes it; ties resolve by parameter declaration
/// order; parameters without a name mention take the remaining values in
/// order of appearance. Candidate count must match parameter count per value
/// class, else an extraction-arity error is thrown.
class ReferenceExtractor final : public ArgumentExtractor {
public:
    std::string extractor_id() const override;
    std::vector<std::string> extract(const std::string& text,
                                     const ApiFunction& function) const override;
};

/// Deliberately weak extractor that keeps only the first discovered value,
/// whatever the arity. Exercises the evaluation harness's failure detection:
/// it matches the reference on single-argument sentences and fails the arity
/// check on everything else.
class FirstValueExtractor final : public ArgumentExtractor {
public:
    std::string extractor_id() const override;
    std::vector<std::string> extract(const std::string& text,
                                     const ApiFunction& function) const override;
};

/// Runs the extractor and validates the result against the function
/// signature. Throws extraction-arity error when the value count is wrong
/// and type error when a value does not parse under the declared type.
ArgumentSet extract_arguments(const std::string& text, const ApiFunction& function,
                              const ArgumentExtractor& extractor);

/// Validates args against the signature (names, order, declared ranges) and
/// renders "name(v1, v2, ...)". Throws composition error on arity/name
/// mismatch and range error naming the offending parameter.
CallPlan compose_call(const ApiFunction& function, const ArgumentSet& args);

/// Substitutes the call into the template. Throws template error when the
/// placeholder is missing or duplicated, or the rendered call would not
/// appear exactly once in the output.
RenderedProgram render_program(const CodeTemplate& tmpl, const CallPlan& plan);

} // namespace llmind
