#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace llmind::numberwords {

// One numeric value located in free text. `canonical` is the digit rendering:
// integers without a point ("26", "-3"), decimals with one-or-more fractional
// digits exactly as spoken/written ("12.5"). Offsets are byte positions into
// the scanned string.
struct FoundValue {
    std::string canonical;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool has_point = false;
};

// Scans text for digit literals ("26", "-3", "12.5") and number-word phrases
// ("twenty-six", "one hundred forty-two", "twelve point five", "minus nine",
// ordinals like "third"). Values are returned in order of appearance.
//
// The word grammar covers zero through nine hundred ninety-nine, hyphenated
// compounds, "point" decimals spoken digit-wise, and a "minus"/"negative"
// prefix. This table is shared verbatim by the dataset generator, which is
// what makes generated pairs exactly recoverable.
std::vector<FoundValue> find_values(const std::string& text);

// Digit rendering -> spoken rendering. Accepts the canonical forms produced
// by find_values (optionally negative, optional fraction part). Returns
// nothing if the string is not such a form or the magnitude exceeds 999.
std::optional<std::string> to_words(const std::string& canonical);

// True if the lowercase word participates in the number grammar (including
// ordinals and the "point"/"minus"/"negative" keywords). Used by the dataset
// generator to keep frame text and random attribute names collision-free.
bool is_number_word(const std::string& lowercase_word);

} // namespace llmind::numberwords
