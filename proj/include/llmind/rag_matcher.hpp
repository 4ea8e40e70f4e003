#pragma once

#include "llmind/api_corpus.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llmind {

/// Dense embedding of a text, tagged with the provider that produced it so
/// vectors from different providers are never compared.
struct EmbeddingVector {
    std::string provider_id;
    std::vector<float> values;
    bool normalized = false;
};

/// Maps text to a fixed-dimension vector. Implementations must be
/// deterministic for a given input.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

/// Deterministic hashing embedder: tokens are lowercased, punctuation is
/// stripped, each token is FNV-1a hashed into one of `dimension` buckets with
/// a sign bit, and the result is L2-normalized. An all-empty input yields the
/// zero vector (left unnormalized).
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashingEmbeddingProvider(std::size_t dimension = 256);
    std::string provider_id() const override;
    std::size_t dimension() const override;
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::size_t dimension_;
};

/// Cosine similarity in [-1, 1]. Throws Incompatibility if the vectors come
/// from different providers or differ in dimension. Either vector being all
/// zeros yields 0.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// One scored candidate out of an index query.
struct MatchResult {
    ApiFunction function;
    std::string source_device;
    double score = 0.0;
};

/// Searchable set of embedded API chunks for one device.
class ApiIndex {
public:
    ApiIndex(std::shared_ptr<const EmbeddingProvider> provider,
             std::vector<ApiChunk> chunks);

    /// All candidates scored against the query, sorted by descending score;
    /// ties broken by ascending function name. Throws NoCandidates if the
    /// index is empty.
    std::vector<MatchResult> rank(std::string_view query) const;

    std::size_t size() const { return chunks_.size(); }
    const std::string& provider_id() const;

private:
    std::shared_ptr<const EmbeddingProvider> provider_;
    std::string provider_id_;
    std::vector<ApiChunk> chunks_;
    std::vector<EmbeddingVector> vectors_;
};

/// Embeds every chunk of the profile into a fresh index.
ApiIndex build_index(std::shared_ptr<const EmbeddingProvider> provider,
                     const DeviceApiProfile& profile);

/// Best match for a subtask sentence, or nullopt when the top score falls
/// below `min_score` (when given). Throws NoCandidates on an empty index.
std::optional<MatchResult> match_subtask(const ApiIndex& index,
                                         std::string_view subtask,
                                         std::optional<double> min_score = {});

} // namespace llmind
