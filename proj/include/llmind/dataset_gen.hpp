#pragma once

#include "llmind/codegen.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace llmind {

/// One action/attribute/value unit. The action verb selects a sentence
/// frame; the value is the canonical digit rendering ("26", "43.7").
struct Triplet {
    std::string action;
    std::string attribute;
    std::string value;
};

/// One training example: a rendered instruction and the planted
/// (attribute, value) list the extractor must recover, in order.
struct SubtaskArgPair {
    std::string instruction;
    std::vector<std::pair<std::string, std::string>> arguments;
    int arity = 0;
};

/// Per-arity sizes, split fraction, and the master seed.
struct DatasetSpec {
    std::map<int, int> per_arity_counts;
    double test_fraction = 0.10;
    std::uint64_t seed = 0;
};

DatasetSpec full_scale_spec(std::uint64_t seed); // 12,000 per arity 1..4
DatasetSpec desk_scale_spec(std::uint64_t seed); //  1,200 per arity 1..4

/// The generation pools, exposed for the manifest and for tests.
const std::vector<std::string>& action_pool();
const std::vector<std::string>& attribute_pool();
const std::vector<std::string>& connector_pool(); // "and", "then", ";"

/// One clause, lowercase and unterminated: the action's frame with the
/// attribute and the value (spoken rendering when as_words) substituted.
/// Throws a validation error for actions outside the pool.
std::string render_clause(const Triplet& triplet, bool as_words);

/// Joins pre-rendered clauses with connectors (|connectors| = |parts| - 1),
/// capitalizes the first, and terminates with a period.
std::string render_instruction(const std::vector<std::pair<Triplet, bool>>& parts,
                               const std::vector<std::string>& connectors);

/// Draws one pair: `arity` distinct-attribute triplets, each value rendered
/// as digits or number words on a seeded coin, clauses joined by random
/// connectors. Every pair is checked against the reference extractor at
/// generation time; a frame that breaks recovery is a generator bug and
/// throws.
SubtaskArgPair generate_pair(std::mt19937_64& rng, int arity);

struct DatasetFiles {
    std::string train_path;
    std::string test_path;
    std::string manifest_path;
    int total = 0;
    int train_count = 0;
    int test_count = 0;
    std::map<int, int> per_arity_total;
    std::map<int, int> per_arity_test;
};

/// Writes train.jsonl, test.jsonl ({instruction, arguments, arity} per
/// line), and manifest.json (counts, seed, pools, fine-tuning metadata)
/// under out_dir. The test split is drawn uniformly per arity so every
/// arity keeps exactly round(count x fraction) test rows; same spec, same
/// bytes.
DatasetFiles generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

struct ArityAccuracy {
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;
};

struct EvalFailure {
    int line = 0; // 1-based line in the test file
    int arity = 0;
    std::string instruction;
    std::string reason;
};

struct EvalResult {
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;
    std::map<int, ArityAccuracy> per_arity;
    std::vector<EvalFailure> failures; // first 100; failure_count has the rest
    int failure_count = 0;
};

/// Scores an extractor against a generated test file: a pair counts as
/// correct only when the extracted values equal the planted values in
/// parameter order. Extractor exceptions count the pair failed with the
/// error text as the reason.
EvalResult evaluate_extractor(const ArgumentExtractor& extractor,
                              const std::string& test_path);

} // namespace llmind
