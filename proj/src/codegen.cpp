#include "llmind/codegen.hpp"

#include "llmind/errors.hpp"
#include "llmind/numberwords.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace llmind {

namespace {

struct Candidate {
    std::string canonical;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct TextToken {
    std::string lower;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<TextToken> text_tokens(const std::string& text) {
    std::vector<TextToken> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isalnum(static_cast<unsigned char>(text[i]))) {
            TextToken tok;
            tok.begin = i;
            while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
                tok.lower += static_cast<char>(
                    std::tolower(static_cast<unsigned char>(text[i])));
                ++i;
            }
            tok.end = i;
            out.push_back(std::move(tok));
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::string> alias_tokens(const std::string& parameter_name) {
    std::vector<std::string> out;
    std::string current;
    for (char c : parameter_name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

// A numeric literal glued to a letter or underscore ("band_5", "5GHz") is
// part of an identifier, not a standalone value.
bool is_identifier_glued(const std::string& text, std::size_t begin, std::size_t end) {
    auto glue = [](char c) {
        return c == '_' || std::isalpha(static_cast<unsigned char>(c));
    };
    if (begin > 0 && glue(text[begin - 1])) return true;
    if (end < text.size() && glue(text[end])) return true;
    return false;
}

std::vector<Candidate> numeric_candidates(const std::string& text) {
    std::vector<Candidate> out;
    for (const auto& v : numberwords::find_values(text)) {
        if (is_identifier_glued(text, v.begin, v.end)) continue;
        out.push_back({v.canonical, v.begin, v.end});
    }
    return out;
}

std::vector<Candidate> quoted_candidates(const std::string& text) {
    std::vector<Candidate> out;
    std::size_t i = 0;
    while (i < text.size()) {
        char q = text[i];
        if (q != '\'' && q != '"') {
            ++i;
            continue;
        }
        std::size_t close = text.find(q, i + 1);
        if (close == std::string::npos) break;
        out.push_back({text.substr(i + 1, close - i - 1), i, close + 1});
        i = close + 1;
    }
    return out;
}

std::vector<Candidate> boolean_candidates(const std::vector<TextToken>& tokens) {
    std::vector<Candidate> out;
    for (const auto& t : tokens) {
        if (t.lower == "true" || t.lower == "on" || t.lower == "enabled") {
            out.push_back({"true", t.begin, t.end});
        } else if (t.lower == "false" || t.lower == "off" || t.lower == "disabled") {
            out.push_back({"false", t.begin, t.end});
        }
    }
    return out;
}

// A value that follows its mention ("ABC gain to two") binds tighter than
// one that precedes it ("two goes into ABC"); the penalty keeps both usable.
constexpr std::size_t kBeforeMentionPenalty = 1 << 16;

std::size_t directed_distance(std::size_t value_begin, std::size_t value_end,
                              std::size_t mention_begin, std::size_t mention_end) {
    if (value_begin >= mention_end) return value_begin - mention_end;
    if (mention_begin >= value_end) {
        return (mention_begin - value_end) + kBeforeMentionPenalty;
    }
    return 0;
}

// Binds candidates (appearance order) to the given parameter slots
// (declaration order). Mentioned parameters claim their nearest candidate
// first; unmentioned parameters take the leftovers in order of appearance.
void bind_class(const std::string& text, const std::vector<TextToken>& tokens,
                const std::vector<std::size_t>& param_slots,
                const std::vector<const ApiParameter*>& params,
                const std::vector<Candidate>& candidates,
                std::vector<std::string>& values_out) {
    if (param_slots.size() != candidates.size()) {
        throw Error(ErrorCode::ExtractionArity,
                    "found " + std::to_string(candidates.size()) + " value(s) for " +
                        std::to_string(param_slots.size()) + " parameter(s) in \"" +
                        text + "\"");
    }
    const std::size_t n = param_slots.size();

    // Mention positions per local parameter index.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> mentions(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (const auto& alias : alias_tokens(params[p]->name)) {
            for (const auto& tok : tokens) {
                if (tok.lower == alias) mentions[p].push_back({tok.begin, tok.end});
            }
        }
    }

    std::vector<bool> param_done(n, false);
    std::vector<bool> value_done(n, false);
    std::vector<std::size_t> assignment(n, 0);

    while (true) {
        constexpr auto kNone = std::numeric_limits<std::size_t>::max();
        std::size_t best_p = kNone, best_v = kNone, best_d = kNone;
        for (std::size_t p = 0; p < n; ++p) {
            if (param_done[p] || mentions[p].empty()) continue;
            for (std::size_t v = 0; v < n; ++v) {
                if (value_done[v]) continue;
                std::size_t d = kNone;
                for (const auto& m : mentions[p]) {
                    d = std::min(d, directed_distance(candidates[v].begin,
                                                      candidates[v].end, m.first,
                                                      m.second));
                }
                if (d < best_d) {
                    best_d = d;
                    best_p = p;
                    best_v = v;
                }
            }
        }
        if (best_p == kNone) break;
        assignment[best_p] = best_v;
        param_done[best_p] = true;
        value_done[best_v] = true;
    }

    for (std::size_t p = 0; p < n; ++p) {
        if (param_done[p]) continue;
        for (std::size_t v = 0; v < n; ++v) {
            if (!value_done[v]) {
                assignment[p] = v;
                value_done[v] = true;
                param_done[p] = true;
                break;
            }
        }
    }

    for (std::size_t p = 0; p < n; ++p) {
        values_out[param_slots[p]] = candidates[assignment[p]].canonical;
    }
}

double parse_number(const std::string& value) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(ErrorCode::TypeError, "value '" + value + "' is not numeric");
    }
    return out;
}

std::size_t count_occurrences(const std::string& haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

} // namespace

CodeTemplate load_template(std::string_view raw) {
    CodeTemplate tmpl{std::string(raw)};
    const std::size_t n = count_occurrences(tmpl.template_text, kCallSitePlaceholder);
    if (n != 1) {
        throw Error(ErrorCode::Template,
                    "template must contain the placeholder exactly once, found " +
                        std::to_string(n));
    }
    return tmpl;
}

CodeTemplate load_template_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open template file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_template(buf.str());
}

std::string ReferenceExtractor::extractor_id() const { return "reference-rules"; }

std::vector<std::string> ReferenceExtractor::extract(const std::string& text,
                                                     const ApiFunction& function) const {
    const auto tokens = text_tokens(text);
    std::vector<std::string> values(function.parameters.size());

    std::vector<std::size_t> numeric_slots, string_slots, boolean_slots;
    std::vector<const ApiParameter*> numeric_params, string_params, boolean_params;
    for (std::size_t i = 0; i < function.parameters.size(); ++i) {
        const auto& p = function.parameters[i];
        switch (p.value_type) {
            case ValueType::Integer:
            case ValueType::Decimal:
                numeric_slots.push_back(i);
                numeric_params.push_back(&p);
                break;
            case ValueType::String:
                string_slots.push_back(i);
                string_params.push_back(&p);
                break;
            case ValueType::Boolean:
                boolean_slots.push_back(i);
                boolean_params.push_back(&p);
                break;
        }
    }

    bind_class(text, tokens, numeric_slots, numeric_params, numeric_candidates(text),
               values);
    if (!string_slots.empty()) {
        bind_class(text, tokens, string_slots, string_params, quoted_candidates(text),
                   values);
    }
    if (!boolean_slots.empty()) {
        bind_class(text, tokens, boolean_slots, boolean_params,
                   boolean_candidates(tokens), values);
    }
    return values;
}

std::string FirstValueExtractor::extractor_id() const { return "first-value-only"; }

std::vector<std::string> FirstValueExtractor::extract(const std::string& text,
                                                      const ApiFunction& function) const {
    std::vector<Candidate> all = numeric_candidates(text);
    for (auto& c : quoted_candidates(text)) all.push_back(std::move(c));
    for (auto& c : boolean_candidates(text_tokens(text))) all.push_back(std::move(c));
    std::sort(all.begin(), all.end(),
              [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });
    if (function.parameters.empty() || all.empty()) return {};
    return {all.front().canonical};
}

ArgumentSet extract_arguments(const std::string& text, const ApiFunction& function,
                              const ArgumentExtractor& extractor) {
    std::vector<std::string> values = extractor.extract(text, function);
    if (values.size() != function.parameters.size()) {
        throw Error(ErrorCode::ExtractionArity,
                    "extractor returned " + std::to_string(values.size()) +
                        " value(s), function '" + function.name + "' takes " +
                        std::to_string(function.parameters.size()));
    }
    ArgumentSet args;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& p = function.parameters[i];
        if (!value_parses_as(values[i], p.value_type)) {
            throw Error(ErrorCode::TypeError,
                        "value '" + values[i] + "' does not parse as " +
                            value_type_name(p.value_type) + " for parameter '" +
                            p.name + "'");
        }
        args.bindings.emplace_back(p.name, values[i]);
    }
    return args;
}

CallPlan compose_call(const ApiFunction& function, const ArgumentSet& args) {
    if (args.bindings.size() != function.parameters.size()) {
        throw Error(ErrorCode::Composition,
                    "argument count " + std::to_string(args.bindings.size()) +
                        " does not match arity of '" + function.name + "'");
    }
    std::string call = function.name + "(";
    for (std::size_t i = 0; i < args.bindings.size(); ++i) {
        const auto& p = function.parameters[i];
        const auto& [name, value] = args.bindings[i];
        if (name != p.name) {
            throw Error(ErrorCode::Composition,
                        "binding '" + name + "' out of order, expected '" + p.name + "'");
        }
        if (!value_parses_as(value, p.value_type)) {
            throw Error(ErrorCode::TypeError,
                        "value '" + value + "' does not parse as " +
                            value_type_name(p.value_type) + " for parameter '" +
                            p.name + "'");
        }
        if (p.range) {
            const double v = parse_number(value);
            if (v < p.range->first || v > p.range->second) {
                throw Error(ErrorCode::RangeError,
                            "parameter '" + p.name + "' value " + value +
                                " outside [" + std::to_string(p.range->first) + ", " +
                                std::to_string(p.range->second) + "]");
            }
        }
        if (i > 0) call += ", ";
        call += value;
    }
    call += ")";
    return {function, args, std::move(call)};
}

RenderedProgram render_program(const CodeTemplate& tmpl, const CallPlan& plan) {
    const std::size_t placeholder_count =
        count_occurrences(tmpl.template_text, kCallSitePlaceholder);
    if (placeholder_count != 1) {
        throw Error(ErrorCode::Template,
                    "template must contain the placeholder exactly once, found " +
                        std::to_string(placeholder_count));
    }
    std::string text = tmpl.template_text;
    text.replace(text.find(kCallSitePlaceholder), kCallSitePlaceholder.size(),
                 plan.rendered_call);
    if (count_occurrences(text, plan.rendered_call) != 1) {
        throw Error(ErrorCode::Template,
                    "rendered call '" + plan.rendered_call +
                        "' must appear exactly once in the program");
    }
    return {std::move(text), plan};
}

} // namespace llmind
