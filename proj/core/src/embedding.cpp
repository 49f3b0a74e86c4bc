#include "icdst/embedding.hpp"

#include <cmath>

#include "icdst/bm25.hpp"
#include "icdst/rng.hpp"

namespace icdst {

Embedding HashingEmbedder::embed(std::string_view text) const {
    Embedding v(dim_, 0.0);
    for (const auto& tok : bm25_tokenize(text)) {
        const auto h = fnv1a(tok);
        v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) {
        // Keep cosine defined for empty or fully cancelling input.
        v[0] = 1.0;
        return v;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

ExemplarPool embed_pool(const ExemplarPool& pool, const HashingEmbedder& embedder) {
    std::map<std::string, Embedding, std::less<>> vectors;
    for (const auto& r : pool.records()) vectors.emplace(r.id, embedder.embed(r.context_text));
    return pool.with_embeddings(vectors);
}

Embedding PrecomputedEncoder::encode(const RetrievalQuery& q) const {
    auto it = vectors_.find(q.key);
    if (it == vectors_.end()) throw RetrievalError("no precomputed query embedding for " + q.key);
    return it->second;
}

}  // namespace icdst
