#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "icdst/retrieval.hpp"

namespace icdst {

/// Feature-hashing bag of words, L2-normalized. A stand-in for a sentence
/// encoder so the embedding retriever can run without a model; it knows
/// nothing about semantics beyond shared tokens.
class HashingEmbedder final : public QueryEncoder {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}

    Embedding embed(std::string_view text) const;
    Embedding encode(const RetrievalQuery& q) const override { return embed(q.context_text); }
    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
};

/// Embeds every record's context text with `embedder`.
ExemplarPool embed_pool(const ExemplarPool& pool, const HashingEmbedder& embedder);

/// Query vectors precomputed by an external model, looked up by query key.
class PrecomputedEncoder final : public QueryEncoder {
public:
    explicit PrecomputedEncoder(std::map<std::string, Embedding, std::less<>> vectors) : vectors_(std::move(vectors)) {}
    Embedding encode(const RetrievalQuery& q) const override;

private:
    std::map<std::string, Embedding, std::less<>> vectors_;
};

}  // namespace icdst
