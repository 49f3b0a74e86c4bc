#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/error.hpp"
#include "icdst/state.hpp"

namespace icdst {

using Embedding = std::vector<double>;

class RetrievalError : public Error {
public:
    using Error::Error;
};

/// Retriever inputs are capped at this many length units.
inline constexpr std::size_t kRetrieverMaxUnits = 512;

/// Keeps the tail of `text` so that it fits `max_units`; the cut is made at a
/// token boundary and the kept suffix is returned verbatim.
std::string truncate_front_to_units(std::string_view text, std::size_t max_units);

struct ExemplarRecord {
    std::string id;
    std::string context_text;
    StateChange change;
    std::optional<Embedding> embedding;
};

/// Builds a record with the retriever length cap applied to `context_text`.
ExemplarRecord make_exemplar_record(std::string id, std::string_view context_text, StateChange change);

/// The labeled selection pool. Ids are unique; embeddings, when present on
/// any record, are present on all with one common length.
class ExemplarPool {
public:
    ExemplarPool() = default;
    explicit ExemplarPool(std::vector<ExemplarRecord> records);

    const std::vector<ExemplarRecord>& records() const noexcept { return records_; }
    const ExemplarRecord& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    std::optional<std::size_t> index_of(std::string_view id) const;
    bool has_embeddings() const noexcept { return embedding_dim_.has_value(); }
    std::optional<std::size_t> embedding_dim() const noexcept { return embedding_dim_; }

    /// Copy with embeddings attached by id; every record must be covered.
    ExemplarPool with_embeddings(const std::map<std::string, Embedding, std::less<>>& vectors) const;

private:
    std::vector<ExemplarRecord> records_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::optional<std::size_t> embedding_dim_;
};

struct ScoredId {
    std::string id;
    double score = 0.0;
    std::size_t index = 0;  // position in the pool

    bool operator==(const ScoredId&) const = default;
};

/// Throws RetrievalError on a length mismatch or an all-zero vector.
double cosine_score(std::span<const double> x, std::span<const double> e);

/// Top-k by cosine, descending; equal scores keep pool order.
std::vector<ScoredId> knn(const ExemplarPool& pool, std::span<const double> query, std::size_t k);

/// Mean of slot-set F1 and slot-value-pair F1. Two empty changes score 1,
/// exactly one empty change scores 0.
double change_similarity(const StateChange& a, const StateChange& b);

/// Top-k by change_similarity against the gold change; ties keep pool order.
std::vector<ScoredId> oracle_retrieve(const ExemplarPool& pool, const StateChange& gold, std::size_t k);

/// k ids uniformly without replacement. Throws when k exceeds the pool.
std::vector<std::string> random_retrieve(const ExemplarPool& pool, std::size_t k, std::uint64_t seed);

/// What a retriever may look at for one test turn.
struct RetrievalQuery {
    /// Stable identifier of the test turn (e.g. `dialogue/turn`).
    std::string key;
    std::string context_text;
    /// Only the oracle retriever reads this.
    const StateChange* gold_change = nullptr;
};

/// Encodes a query into the pool's embedding space.
class QueryEncoder {
public:
    virtual ~QueryEncoder() = default;
    virtual Embedding encode(const RetrievalQuery& q) const = 0;
};

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::vector<ScoredId> retrieve(const RetrievalQuery& q, std::size_t k) const = 0;
    virtual std::string_view name() const noexcept = 0;
};

class EmbeddingRetriever final : public Retriever {
public:
    EmbeddingRetriever(std::shared_ptr<const ExemplarPool> pool, std::shared_ptr<const QueryEncoder> encoder);
    std::vector<ScoredId> retrieve(const RetrievalQuery& q, std::size_t k) const override;
    std::string_view name() const noexcept override { return "embedding"; }

private:
    std::shared_ptr<const ExemplarPool> pool_;
    std::shared_ptr<const QueryEncoder> encoder_;
};

class OracleRetriever final : public Retriever {
public:
    explicit OracleRetriever(std::shared_ptr<const ExemplarPool> pool) : pool_(std::move(pool)) {}
    std::vector<ScoredId> retrieve(const RetrievalQuery& q, std::size_t k) const override;
    std::string_view name() const noexcept override { return "oracle"; }

private:
    std::shared_ptr<const ExemplarPool> pool_;
};

/// Draws are seeded per query from (seed, query key), so results do not
/// depend on the order in which queries arrive.
class RandomRetriever final : public Retriever {
public:
    RandomRetriever(std::shared_ptr<const ExemplarPool> pool, std::uint64_t seed) : pool_(std::move(pool)), seed_(seed) {}
    std::vector<ScoredId> retrieve(const RetrievalQuery& q, std::size_t k) const override;
    std::string_view name() const noexcept override { return "random"; }

private:
    std::shared_ptr<const ExemplarPool> pool_;
    std::uint64_t seed_;
};

}  // namespace icdst
