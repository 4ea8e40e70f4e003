#include "llmind/rag_matcher.hpp"

#include "llmind/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

namespace llmind {

namespace {

std::uint64_t fnv1a64(std::string_view token) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : token) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

} // namespace

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dimension)
    : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorCode::Config, "embedding dimension must be positive");
}

std::string HashingEmbeddingProvider::provider_id() const {
    return "hashing-" + std::to_string(dimension_);
}

std::size_t HashingEmbeddingProvider::dimension() const { return dimension_; }

EmbeddingVector HashingEmbeddingProvider::embed(std::string_view text) const {
    EmbeddingVector vec;
    vec.provider_id = provider_id();
    vec.values.assign(dimension_, 0.0f);
    for (const auto& token : tokenize(text)) {
        const std::uint64_t hash = fnv1a64(token);
        const std::size_t bucket = hash % dimension_;
        const float sign = (hash >> 63) ? -1.0f : 1.0f;
        vec.values[bucket] += sign;
    }
    double norm_sq = 0.0;
    for (float v : vec.values) norm_sq += static_cast<double>(v) * v;
    if (norm_sq > 0.0) {
        const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        for (float& v : vec.values) v *= inv;
        vec.normalized = true;
    }
    return vec;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.provider_id != b.provider_id) {
        throw Error(ErrorCode::Incompatibility,
                    "cannot compare vectors from '" + a.provider_id + "' and '" +
                        b.provider_id + "'");
    }
    if (a.values.size() != b.values.size()) {
        throw Error(ErrorCode::Incompatibility, "embedding dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += static_cast<double>(a.values[i]) * b.values[i];
        na += static_cast<double>(a.values[i]) * a.values[i];
        nb += static_cast<double>(b.values[i]) * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ApiIndex::ApiIndex(std::shared_ptr<const EmbeddingProvider> provider,
                   std::vector<ApiChunk> chunks)
    : provider_(std::move(provider)), chunks_(std::move(chunks)) {
    if (!provider_) throw Error(ErrorCode::Config, "index requires an embedding provider");
    provider_id_ = provider_->provider_id();
    vectors_.reserve(chunks_.size());
    for (const auto& chunk : chunks_) {
        vectors_.push_back(provider_->embed(chunk.chunk_text));
    }
}

const std::string& ApiIndex::provider_id() const { return provider_id_; }

std::vector<MatchResult> ApiIndex::rank(std::string_view query) const {
    if (chunks_.empty()) {
        throw Error(ErrorCode::NoCandidates, "index holds no functions");
    }
    const EmbeddingVector q = provider_->embed(query);
    std::vector<MatchResult> results;
    results.reserve(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        results.push_back({chunks_[i].function, chunks_[i].source_device,
                           cosine_similarity(q, vectors_[i])});
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const MatchResult& a, const MatchResult& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.function.name < b.function.name;
                     });
    return results;
}

ApiIndex build_index(std::shared_ptr<const EmbeddingProvider> provider,
                     const DeviceApiProfile& profile) {
    return ApiIndex(std::move(provider), chunk_profile(profile));
}

std::optional<MatchResult> match_subtask(const ApiIndex& index,
                                         std::string_view subtask,
                                         std::optional<double> min_score) {
    auto ranked = index.rank(subtask);
    if (min_score && ranked.front().score < *min_score) return std::nullopt;
    return ranked.front();
}

} // namespace llmind
