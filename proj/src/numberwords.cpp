#include "llmind/numberwords.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

namespace llmind::numberwords {

namespace {

const std::array<const char*, 10> kUnits = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"};
const std::array<const char*, 10> kTeens = {
    "ten", "eleven", "twelve", "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
const std::array<const char*, 8> kTens = {
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
const std::array<const char*, 10> kOrdinalUnits = {
    "zeroth", "first", "second", "third", "fourth",
    "fifth", "sixth", "seventh", "eighth", "ninth"};
const std::array<const char*, 10> kOrdinalTeens = {
    "tenth", "eleventh", "twelfth", "thirteenth", "fourteenth",
    "fifteenth", "sixteenth", "seventeenth", "eighteenth", "nineteenth"};
const std::array<const char*, 8> kOrdinalTens = {
    "twentieth", "thirtieth", "fortieth", "fiftieth",
    "sixtieth", "seventieth", "eightieth", "ninetieth"};

enum class WordKind { Unit, Teen, Tens, Hundred, Point, Minus, OrdinalUnit, OrdinalTeen, OrdinalTens };

const std::unordered_map<std::string, std::pair<WordKind, int>>& word_table() {
    static const auto* table = [] {
        auto* t = new std::unordered_map<std::string, std::pair<WordKind, int>>();
        for (int i = 0; i < 10; ++i) (*t)[kUnits[i]] = {WordKind::Unit, i};
        for (int i = 0; i < 10; ++i) (*t)[kTeens[i]] = {WordKind::Teen, 10 + i};
        for (int i = 0; i < 8; ++i) (*t)[kTens[i]] = {WordKind::Tens, 20 + 10 * i};
        for (int i = 0; i < 10; ++i) (*t)[kOrdinalUnits[i]] = {WordKind::OrdinalUnit, i};
        for (int i = 0; i < 10; ++i) (*t)[kOrdinalTeens[i]] = {WordKind::OrdinalTeen, 10 + i};
        for (int i = 0; i < 8; ++i) (*t)[kOrdinalTens[i]] = {WordKind::OrdinalTens, 20 + 10 * i};
        (*t)["hundred"] = {WordKind::Hundred, 100};
        (*t)["point"] = {WordKind::Point, 0};
        (*t)["minus"] = {WordKind::Minus, 0};
        (*t)["negative"] = {WordKind::Minus, 0};
        return t;
    }();
    return *table;
}

struct WordToken {
    std::string lower;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<WordToken> word_tokens(const std::string& text) {
    std::vector<WordToken> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isalpha(static_cast<unsigned char>(text[i]))) {
            std::size_t start = i;
            std::string lower;
            while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
                lower += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
                ++i;
            }
            out.push_back({std::move(lower), start, i});
        } else {
            ++i;
        }
    }
    return out;
}

// Parses a maximal number-word phrase starting at token index `i`.
// Returns the value and one-past-the-last consumed token, or nothing.
struct ParsedPhrase {
    long value = 0;
    bool negative = false;
    std::string fraction; // digits after "point", empty if none
    std::size_t next = 0;
};

std::optional<ParsedPhrase> parse_phrase(const std::vector<WordToken>& toks, std::size_t i) {
    const auto& table = word_table();
    ParsedPhrase out;
    std::size_t j = i;

    auto kind_of = [&](std::size_t k) -> std::optional<std::pair<WordKind, int>> {
        if (k >= toks.size()) return std::nullopt;
        auto it = table.find(toks[k].lower);
        if (it == table.end()) return std::nullopt;
        return it->second;
    };

    if (auto k = kind_of(j); k && k->first == WordKind::Minus) {
        out.negative = true;
        ++j;
    }

    auto k0 = kind_of(j);
    if (!k0) return std::nullopt;

    long value = 0;
    bool have_integer = false;
    bool ordinal = false;

    auto consume_below_hundred = [&](long& acc) {
        auto k = kind_of(j);
        if (!k) return false;
        switch (k->first) {
            case WordKind::Teen:
                acc += k->second;
                ++j;
                return true;
            case WordKind::OrdinalTeen:
                acc += k->second;
                ordinal = true;
                ++j;
                return true;
            case WordKind::Tens: {
                acc += k->second;
                ++j;
                if (auto k2 = kind_of(j)) {
                    if (k2->first == WordKind::Unit && k2->second != 0) {
                        acc += k2->second;
                        ++j;
                    } else if (k2->first == WordKind::OrdinalUnit && k2->second != 0) {
                        acc += k2->second;
                        ordinal = true;
                        ++j;
                    }
                }
                return true;
            }
            case WordKind::OrdinalTens:
                acc += k->second;
                ordinal = true;
                ++j;
                return true;
            case WordKind::Unit:
                acc += k->second;
                ++j;
                return true;
            case WordKind::OrdinalUnit:
                acc += k->second;
                ordinal = true;
                ++j;
                return true;
            default:
                return false;
        }
    };

    // Optional "<unit> hundred" prefix, then the sub-hundred part.
    if ((k0->first == WordKind::Unit || k0->first == WordKind::Teen) &&
        kind_of(j + 1) && kind_of(j + 1)->first == WordKind::Hundred &&
        k0->second >= 1) {
        value = static_cast<long>(k0->second) * 100;
        j += 2;
        have_integer = true;
        long rest = 0;
        std::size_t save = j;
        if (consume_below_hundred(rest) && !ordinal) {
            value += rest;
        } else if (ordinal) {
            value += rest; // "one hundred first" - accept, terminal
        } else {
            j = save;
        }
    } else {
        if (!consume_below_hundred(value)) return std::nullopt;
        have_integer = true;
    }

    if (!have_integer) return std::nullopt;

    // Optional "point <digit>+" fraction; not valid after an ordinal.
    if (!ordinal) {
        if (auto kp = kind_of(j); kp && kp->first == WordKind::Point) {
            std::string frac;
            std::size_t f = j + 1;
            while (true) {
                auto kd = kind_of(f);
                if (kd && kd->first == WordKind::Unit) {
                    frac += static_cast<char>('0' + kd->second);
                    ++f;
                } else {
                    break;
                }
            }
            if (!frac.empty()) {
                out.fraction = frac;
                j = f;
            }
        }
    }

    out.value = value;
    out.next = j;
    return out;
}

} // namespace

std::vector<FoundValue> find_values(const std::string& text) {
    std::vector<FoundValue> out;

    // Pass 1: digit literals. Mark their byte spans so word scanning can skip
    // nothing (words and digits cannot overlap, but keep order by position).
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        bool minus = false;
        std::size_t start = i;
        if (c == '-' && i + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            // A '-' glued to a preceding word ("twenty-six") is a hyphen, not a sign.
            if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) {
                ++i;
                continue;
            }
            minus = true;
            ++i;
            c = text[i];
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::string digits;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            digits += text[i];
            ++i;
        }
        bool has_point = false;
        if (i + 1 < text.size() && text[i] == '.' &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            has_point = true;
            digits += '.';
            ++i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                digits += text[i];
                ++i;
            }
        }
        // Canonical integer part: strip leading zeros but keep a single zero.
        std::string canon = digits;
        std::size_t nz = 0;
        while (nz + 1 < canon.size() && canon[nz] == '0' &&
               std::isdigit(static_cast<unsigned char>(canon[nz + 1]))) {
            ++nz;
        }
        canon = canon.substr(nz);
        if (minus) canon = "-" + canon;
        out.push_back({std::move(canon), start, i, has_point});
    }

    // Pass 2: number-word phrases over alphabetic tokens.
    auto toks = word_tokens(text);
    std::size_t t = 0;
    while (t < toks.size()) {
        auto parsed = parse_phrase(toks, t);
        if (!parsed) {
            ++t;
            continue;
        }
        FoundValue v;
        v.begin = toks[t].begin;
        v.end = toks[parsed->next - 1].end;
        std::string canon = std::to_string(parsed->value);
        if (!parsed->fraction.empty()) {
            canon += "." + parsed->fraction;
            v.has_point = true;
        }
        if (parsed->negative && parsed->value != 0) canon = "-" + canon;
        v.canonical = std::move(canon);
        out.push_back(std::move(v));
        t = parsed->next;
    }

    std::sort(out.begin(), out.end(),
              [](const FoundValue& a, const FoundValue& b) { return a.begin < b.begin; });
    return out;
}

std::optional<std::string> to_words(const std::string& canonical) {
    if (canonical.empty()) return std::nullopt;
    std::size_t p = 0;
    bool negative = false;
    if (canonical[p] == '-') {
        negative = true;
        ++p;
    }
    std::string int_part, frac_part;
    bool seen_point = false;
    for (; p < canonical.size(); ++p) {
        char c = canonical[p];
        if (c == '.') {
            if (seen_point) return std::nullopt;
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            (seen_point ? frac_part : int_part) += c;
        } else {
            return std::nullopt;
        }
    }
    if (int_part.empty() || (seen_point && frac_part.empty())) return std::nullopt;
    long value = std::stol(int_part);
    if (value > 999) return std::nullopt;

    std::string words;
    if (negative) words = "minus ";
    if (value >= 100) {
        words += kUnits[value / 100];
        words += " hundred";
        value %= 100;
        if (value != 0) words += " ";
    } else if (value == 0) {
        words += "zero";
        value = -1; // handled
    }
    if (value > 0 || (value == 0 && words.empty())) {
        if (value >= 20) {
            words += kTens[value / 10 - 2];
            if (value % 10 != 0) {
                words += "-";
                words += kUnits[value % 10];
            }
        } else if (value >= 10) {
            words += kTeens[value - 10];
        } else if (value >= 0) {
            words += kUnits[value];
        }
    }
    if (seen_point) {
        words += " point";
        for (char c : frac_part) {
            words += " ";
            words += kUnits[c - '0'];
        }
    }
    return words;
}

bool is_number_word(const std::string& lowercase_word) {
    return word_table().count(lowercase_word) > 0;
}

} // namespace llmind::numberwords
