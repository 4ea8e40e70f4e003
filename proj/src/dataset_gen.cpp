#include "llmind/dataset_gen.hpp"

#include "llmind/errors.hpp"
#include "llmind/numberwords.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace llmind {

namespace {

// One sentence frame per action verb. {A} and {V} are the substitution
// points; every frame keeps the value strictly after the attribute mention
// and uses no word from the number grammar.
const std::vector<std::pair<std::string, std::string>>& frames() {
    static const std::vector<std::pair<std::string, std::string>> kFrames = {
        {"tweak", "tweak the device's {A} parameter to {V}"},
        {"set", "set the {A} level to {V}"},
        {"adjust", "adjust the {A} setting to {V}"},
        {"raise", "raise the {A} target to {V}"},
        {"change", "change the {A} knob to {V}"},
        {"configure", "configure the {A} threshold to {V}"},
        {"move", "move the {A} dial to {V}"},
        {"turn", "turn the {A} gain to {V}"},
        {"update", "update the {A} limit to {V}"},
        {"dial", "dial the {A} offset to {V}"},
    };
    return kFrames;
}

const std::set<std::string>& frame_word_blocklist() {
    static const std::set<std::string> kBlocked = [] {
        std::set<std::string> blocked;
        for (const auto& [action, frame] : frames()) {
            std::string word;
            for (char c : frame) {
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    word += static_cast<char>(
                        std::tolower(static_cast<unsigned char>(c)));
                } else if (!word.empty()) {
                    blocked.insert(word);
                    word.clear();
                }
            }
            if (!word.empty()) blocked.insert(word);
        }
        blocked.insert("and");
        blocked.insert("then");
        return blocked;
    }();
    return kBlocked;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string random_attribute(std::mt19937_64& rng,
                             const std::set<std::string>& taken) {
    const auto& pool = attribute_pool();
    for (;;) {
        std::string candidate;
        if (rng() % 4 == 0) {
            for (int i = 0; i < 3; ++i) {
                candidate += static_cast<char>('A' + rng() % 26);
            }
        } else {
            candidate = pool[rng() % pool.size()];
        }
        std::string lower;
        for (char c : candidate) {
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (taken.count(candidate) || frame_word_blocklist().count(lower) ||
            numberwords::is_number_word(lower)) {
            continue;
        }
        return candidate;
    }
}

std::string random_value(std::mt19937_64& rng) {
    std::string value = std::to_string(rng() % 1000);
    if (rng() % 4 == 0) {
        value += "." + std::to_string(rng() % 10);
    }
    return value;
}

ApiFunction planted_signature(
    const std::vector<std::pair<std::string, std::string>>& arguments) {
    ApiFunction fn;
    fn.name = "planted_arguments";
    fn.description = "recover the planted values";
    for (const auto& [attribute, value] : arguments) {
        ApiParameter p;
        p.name = attribute;
        p.value_type = value.find('.') != std::string::npos ? ValueType::Decimal
                                                            : ValueType::Integer;
        p.description = "target " + attribute;
        fn.parameters.push_back(std::move(p));
    }
    return fn;
}

void write_line(std::ofstream& out, const SubtaskArgPair& pair) {
    nlohmann::ordered_json row;
    row["instruction"] = pair.instruction;
    auto args = nlohmann::ordered_json::array();
    for (const auto& [attribute, value] : pair.arguments) {
        args.push_back({attribute, value});
    }
    row["arguments"] = std::move(args);
    row["arity"] = pair.arity;
    out << row.dump() << "\n";
}

} // namespace

DatasetSpec full_scale_spec(std::uint64_t seed) {
    return {{{1, 12000}, {2, 12000}, {3, 12000}, {4, 12000}}, 0.10, seed};
}

DatasetSpec desk_scale_spec(std::uint64_t seed) {
    return {{{1, 1200}, {2, 1200}, {3, 1200}, {4, 1200}}, 0.10, seed};
}

const std::vector<std::string>& action_pool() {
    static const std::vector<std::string> kActions = [] {
        std::vector<std::string> actions;
        for (const auto& [action, frame] : frames()) actions.push_back(action);
        return actions;
    }();
    return kActions;
}

const std::vector<std::string>& attribute_pool() {
    static const std::vector<std::string> kAttributes = {
        "ABC", "XYZ", "DEF", "QRS", "JKL",
        "MNP", "UVW", "GHK", "TRV", "BDP"};
    return kAttributes;
}

const std::vector<std::string>& connector_pool() {
    static const std::vector<std::string> kConnectors = {"and", "then", ";"};
    return kConnectors;
}

std::string render_clause(const Triplet& triplet, bool as_words) {
    const std::string* frame = nullptr;
    for (const auto& [action, text] : frames()) {
        if (action == triplet.action) {
            frame = &text;
            break;
        }
    }
    if (frame == nullptr) {
        throw Error(ErrorCode::Validation,
                    "no sentence frame for action '" + triplet.action + "'");
    }
    std::string rendered_value = triplet.value;
    if (as_words) {
        auto words = numberwords::to_words(triplet.value);
        if (!words) {
            throw Error(ErrorCode::Validation,
                        "value '" + triplet.value +
                            "' has no spoken rendering");
        }
        rendered_value = *words;
    }
    std::string clause = *frame;
    auto substitute = [&clause](const std::string& key, const std::string& with) {
        auto at = clause.find(key);
        clause.replace(at, key.size(), with);
    };
    substitute("{A}", triplet.attribute);
    substitute("{V}", rendered_value);
    return clause;
}

std::string render_instruction(const std::vector<std::pair<Triplet, bool>>& parts,
                               const std::vector<std::string>& connectors) {
    if (parts.empty()) {
        throw Error(ErrorCode::Validation, "an instruction needs a clause");
    }
    if (connectors.size() + 1 != parts.size()) {
        throw Error(ErrorCode::Validation,
                    "joining " + std::to_string(parts.size()) +
                        " clauses takes " + std::to_string(parts.size() - 1) +
                        " connectors");
    }
    std::string instruction;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            const std::string& connector = connectors[i - 1];
            if (connector == "and") {
                instruction += " and ";
            } else if (connector == "then") {
                instruction += ", then ";
            } else if (connector == ";") {
                instruction += "; ";
            } else {
                throw Error(ErrorCode::Validation,
                            "unknown connector '" + connector + "'");
            }
        }
        instruction += render_clause(parts[i].first, parts[i].second);
    }
    instruction[0] = static_cast<char>(
        std::toupper(static_cast<unsigned char>(instruction[0])));
    instruction += ".";
    return instruction;
}

SubtaskArgPair generate_pair(std::mt19937_64& rng, int arity) {
    if (arity < 1 || arity > 4) {
        throw Error(ErrorCode::Validation,
                    "arity " + std::to_string(arity) + " is outside [1, 4]");
    }
    SubtaskArgPair pair;
    pair.arity = arity;
    std::set<std::string> taken;
    std::vector<std::pair<Triplet, bool>> parts;
    for (int i = 0; i < arity; ++i) {
        Triplet triplet;
        triplet.action = action_pool()[rng() % action_pool().size()];
        triplet.attribute = random_attribute(rng, taken);
        taken.insert(triplet.attribute);
        triplet.value = random_value(rng);
        bool as_words = rng() % 2 == 0;
        pair.arguments.emplace_back(triplet.attribute, triplet.value);
        parts.emplace_back(std::move(triplet), as_words);
    }
    std::vector<std::string> connectors;
    for (int i = 1; i < arity; ++i) {
        connectors.push_back(connector_pool()[rng() % connector_pool().size()]);
    }
    pair.instruction = render_instruction(parts, connectors);

    // Generation-time recovery check: the reference extractor must read the
    // planted values back exactly, or the frame pool is broken.
    static const ReferenceExtractor kReference;
    auto recovered =
        kReference.extract(pair.instruction, planted_signature(pair.arguments));
    bool exact = recovered.size() == pair.arguments.size();
    for (std::size_t i = 0; exact && i < recovered.size(); ++i) {
        exact = recovered[i] == pair.arguments[i].second;
    }
    if (!exact) {
        throw Error(ErrorCode::Validation,
                    "generated pair is not recoverable: " + pair.instruction);
    }
    return pair;
}

DatasetFiles generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    if (spec.per_arity_counts.empty()) {
        throw Error(ErrorCode::Validation, "the spec lists no arities");
    }
    for (const auto& [arity, count] : spec.per_arity_counts) {
        if (arity < 1 || arity > 4) {
            throw Error(ErrorCode::Validation,
                        "arity " + std::to_string(arity) + " is outside [1, 4]");
        }
        if (count <= 0) {
            throw Error(ErrorCode::Validation,
                        "count for arity " + std::to_string(arity) +
                            " must be positive");
        }
    }
    if (!(spec.test_fraction > 0.0) || !(spec.test_fraction < 1.0)) {
        throw Error(ErrorCode::Validation, "test fraction must sit in (0, 1)");
    }

    std::error_code fs_error;
    std::filesystem::create_directories(out_dir, fs_error);
    if (fs_error) {
        throw Error(ErrorCode::Io, "cannot create '" + out_dir +
                                       "': " + fs_error.message());
    }

    DatasetFiles files;
    files.train_path = out_dir + "/train.jsonl";
    files.test_path = out_dir + "/test.jsonl";
    files.manifest_path = out_dir + "/manifest.json";

    std::ofstream train(files.train_path, std::ios::binary);
    std::ofstream test(files.test_path, std::ios::binary);
    if (!train.good() || !test.good()) {
        throw Error(ErrorCode::Io, "cannot write dataset files under '" +
                                       out_dir + "'");
    }

    for (const auto& [arity, count] : spec.per_arity_counts) {
        std::mt19937_64 pair_rng(
            splitmix64(spec.seed ^ (0x100ull * static_cast<std::uint64_t>(arity))));
        std::mt19937_64 split_rng(splitmix64(
            spec.seed ^ (0xABCDull + static_cast<std::uint64_t>(arity))));

        int n_test =
            static_cast<int>(std::lround(count * spec.test_fraction));
        std::vector<int> order(count);
        for (int i = 0; i < count; ++i) order[i] = i;
        for (int i = count - 1; i > 0; --i) {
            std::swap(order[i],
                      order[split_rng() % static_cast<std::uint64_t>(i + 1)]);
        }
        std::set<int> test_rows(order.begin(), order.begin() + n_test);

        for (int i = 0; i < count; ++i) {
            auto pair = generate_pair(pair_rng, arity);
            bool is_test = test_rows.count(i) > 0;
            write_line(is_test ? test : train, pair);
            ++files.total;
            ++files.per_arity_total[arity];
            if (is_test) {
                ++files.test_count;
                ++files.per_arity_test[arity];
            } else {
                ++files.train_count;
            }
        }
    }
    train.close();
    test.close();
    if (!train.good() || !test.good()) {
        throw Error(ErrorCode::Io, "failed writing dataset files under '" +
                                       out_dir + "'");
    }

    nlohmann::ordered_json manifest;
    manifest["seed"] = spec.seed;
    manifest["test_fraction"] = spec.test_fraction;
    nlohmann::ordered_json counts;
    for (const auto& [arity, count] : files.per_arity_total) {
        counts["arity_" + std::to_string(arity)] = count;
    }
    counts["total"] = files.total;
    counts["train"] = files.train_count;
    counts["test"] = files.test_count;
    manifest["counts"] = std::move(counts);
    manifest["pools"] = {{"actions", action_pool()},
                         {"attributes", attribute_pool()},
                         {"connectors", connector_pool()}};
    manifest["fine_tuning"] = {{"lora_rank", 32},
                               {"lora_alpha", 32},
                               {"lora_dropout", 0.1},
                               {"batch_size", 2},
                               {"learning_rate", 0.02}};
    std::ofstream manifest_out(files.manifest_path, std::ios::binary);
    manifest_out << manifest.dump(2) << "\n";
    if (!manifest_out.good()) {
        throw Error(ErrorCode::Io, "cannot write '" + files.manifest_path + "'");
    }
    return files;
}

EvalResult evaluate_extractor(const ArgumentExtractor& extractor,
                              const std::string& test_path) {
    std::ifstream in(test_path, std::ios::binary);
    if (!in.good()) {
        throw Error(ErrorCode::Io, "cannot read test file '" + test_path + "'");
    }
    EvalResult result;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        SubtaskArgPair pair;
        try {
            auto row = nlohmann::json::parse(line);
            pair.instruction = row.at("instruction").get<std::string>();
            pair.arity = row.at("arity").get<int>();
            for (const auto& arg : row.at("arguments")) {
                pair.arguments.emplace_back(arg.at(0).get<std::string>(),
                                            arg.at(1).get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedDocument,
                        test_path + ":" + std::to_string(line_number) + ": " +
                            e.what());
        }

        ++result.total;
        auto& arity_bucket = result.per_arity[pair.arity];
        ++arity_bucket.total;

        std::string reason;
        bool correct = false;
        try {
            auto values =
                extractor.extract(pair.instruction, planted_signature(pair.arguments));
            if (values.size() != pair.arguments.size()) {
                reason = "extracted " + std::to_string(values.size()) +
                         " values for arity " +
                         std::to_string(pair.arguments.size());
            } else {
                correct = true;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (values[i] != pair.arguments[i].second) {
                        correct = false;
                        reason = "value for " + pair.arguments[i].first +
                                 ": got '" + values[i] + "', planted '" +
                                 pair.arguments[i].second + "'";
                        break;
                    }
                }
            }
        } catch (const std::exception& e) {
            reason = e.what();
        }

        if (correct) {
            ++result.correct;
            ++arity_bucket.correct;
        } else {
            ++result.failure_count;
            if (result.failures.size() < 100) {
                result.failures.push_back(
                    {line_number, pair.arity, pair.instruction, reason});
            }
        }
    }
    if (result.total == 0) {
        throw Error(ErrorCode::Validation,
                    "test file '" + test_path + "' holds no pairs");
    }
    result.accuracy = static_cast<double>(result.correct) / result.total;
    for (auto& [arity, bucket] : result.per_arity) {
        bucket.accuracy = static_cast<double>(bucket.correct) / bucket.total;
    }
    return result;
}

} // namespace llmind
