#include "icdst/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "icdst/prompt.hpp"
#include "icdst/rng.hpp"
#include "text_util.hpp"

namespace icdst {

std::string truncate_front_to_units(std::string_view text, std::size_t max_units) {
    const auto tokens = split_whitespace(text);
    const auto keep = max_tokens_for_units(max_units);
    if (tokens.size() <= keep) return std::string(text);
    if (keep == 0) return {};
    const auto& first = tokens[tokens.size() - keep];
    return std::string(text.substr(static_cast<std::size_t>(first.data() - text.data())));
}

ExemplarRecord make_exemplar_record(std::string id, std::string_view context_text, StateChange change) {
    return {std::move(id), truncate_front_to_units(context_text, kRetrieverMaxUnits), std::move(change), std::nullopt};
}

ExemplarPool::ExemplarPool(std::vector<ExemplarRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.id.empty()) throw RetrievalError("exemplar record " + std::to_string(i) + " has an empty id");
        if (!by_id_.emplace(r.id, i).second) throw RetrievalError("duplicate exemplar id " + r.id);
    }
    const auto with = std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.embedding.has_value(); });
    if (with == 0) return;
    if (static_cast<std::size_t>(with) != records_.size()) {
        throw RetrievalError("embeddings present on only " + std::to_string(with) + " of " +
                             std::to_string(records_.size()) + " records");
    }
    embedding_dim_ = records_.front().embedding->size();
    for (const auto& r : records_) {
        if (r.embedding->size() != *embedding_dim_) {
            throw RetrievalError("embedding of " + r.id + " has length " + std::to_string(r.embedding->size()) +
                                 ", expected " + std::to_string(*embedding_dim_));
        }
    }
}

std::optional<std::size_t> ExemplarPool::index_of(std::string_view id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

ExemplarPool ExemplarPool::with_embeddings(const std::map<std::string, Embedding, std::less<>>& vectors) const {
    auto records = records_;
    for (auto& r : records) {
        auto it = vectors.find(r.id);
        if (it == vectors.end()) throw RetrievalError("no embedding for exemplar " + r.id);
        r.embedding = it->second;
    }
    return ExemplarPool(std::move(records));
}

double cosine_score(std::span<const double> x, std::span<const double> e) {
    if (x.size() != e.size()) {
        throw RetrievalError("dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(e.size()));
    }
    double dot = 0.0, nx = 0.0, ne = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * e[i];
        nx += x[i] * x[i];
        ne += e[i] * e[i];
    }
    if (nx == 0.0 || ne == 0.0) throw RetrievalError("cosine of a zero vector");
    return dot / (std::sqrt(nx) * std::sqrt(ne));
}

namespace {

// Indices of the k best scores, descending, ties by ascending index.
std::vector<ScoredId> top_k(const ExemplarPool& pool, const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    std::vector<ScoredId> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({pool[order[i]].id, scores[order[i]], order[i]});
    return out;
}

double set_f1(std::size_t common, std::size_t a, std::size_t b) {
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(common) / static_cast<double>(a + b);
}

}  // namespace

std::vector<ScoredId> knn(const ExemplarPool& pool, std::span<const double> query, std::size_t k) {
    if (k == 0) return {};
    if (!pool.empty() && !pool.has_embeddings()) throw RetrievalError("pool has no embeddings");
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = cosine_score(query, *pool[i].embedding);
    return top_k(pool, scores, k);
}

double change_similarity(const StateChange& a, const StateChange& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    std::size_t common_slots = 0, common_pairs = 0;
    for (const auto& [slot, value] : a) {
        if (const auto* other = b.find(slot)) {
            ++common_slots;
            if (*other == value) ++common_pairs;
        }
    }
    const double f_slot = set_f1(common_slots, a.size(), b.size());
    const double f_pair = set_f1(common_pairs, a.size(), b.size());
    return 0.5 * (f_slot + f_pair);
}

std::vector<ScoredId> oracle_retrieve(const ExemplarPool& pool, const StateChange& gold, std::size_t k) {
    if (k == 0) return {};
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = change_similarity(gold, pool[i].change);
    return top_k(pool, scores, k);
}

std::vector<std::string> random_retrieve(const ExemplarPool& pool, std::size_t k, std::uint64_t seed) {
    if (k > pool.size()) {
        throw RetrievalError("cannot draw " + std::to_string(k) + " exemplars from a pool of " + std::to_string(pool.size()));
    }
    Rng rng(seed);
    std::vector<std::string> out;
    for (auto i : sample_without_replacement(pool.size(), k, rng)) out.push_back(pool[i].id);
    return out;
}

EmbeddingRetriever::EmbeddingRetriever(std::shared_ptr<const ExemplarPool> pool, std::shared_ptr<const QueryEncoder> encoder)
    : pool_(std::move(pool)), encoder_(std::move(encoder)) {
    if (!pool_ || !encoder_) throw ConfigError("embedding retriever needs a pool and an encoder");
    if (!pool_->empty() && !pool_->has_embeddings()) throw ConfigError("embedding retriever needs an embedded pool");
}

std::vector<ScoredId> EmbeddingRetriever::retrieve(const RetrievalQuery& q, std::size_t k) const {
    const auto v = encoder_->encode(q);
    return knn(*pool_, v, k);
}

std::vector<ScoredId> OracleRetriever::retrieve(const RetrievalQuery& q, std::size_t k) const {
    if (q.gold_change == nullptr) throw RetrievalError("oracle retriever needs the gold change of the query");
    return oracle_retrieve(*pool_, *q.gold_change, k);
}

std::vector<ScoredId> RandomRetriever::retrieve(const RetrievalQuery& q, std::size_t k) const {
    const auto ids = random_retrieve(*pool_, std::min(k, pool_->size()), seed_ ^ fnv1a(q.key));
    std::vector<ScoredId> out;
    for (const auto& id : ids) out.push_back({id, 0.0, *pool_->index_of(id)});
    return out;
}

}  // namespace icdst
