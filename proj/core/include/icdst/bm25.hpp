#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icdst/retrieval.hpp"

namespace icdst {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Lowercased, whitespace-split tokens after value-style cleanup.
std::vector<std::string> bm25_tokenize(std::string_view text);

/// Okapi BM25 over the context texts of a pool.
///
///   score(D, Q) = sum over distinct q in Q of
///                 idf(q) * tf(q, D) * (k1 + 1) / (tf(q, D) + k1 * (1 - b + b * |D| / avgdl))
///   idf(q)      = ln(1 + (N - df(q) + 0.5) / (df(q) + 0.5))
///
/// The idf form is the non-negative variant, so a document that shares no
/// term with the query scores exactly zero. Terms are summed in ascending
/// lexicographic order.
class Bm25Index {
public:
    explicit Bm25Index(const ExemplarPool& pool, Bm25Params params = {});

    double score(std::size_t doc, const std::vector<std::string>& sorted_terms) const;
    std::vector<ScoredId> query(std::string_view text, std::size_t k) const;

    std::size_t size() const noexcept { return docs_.size(); }
    double average_length() const noexcept { return avgdl_; }

private:
    struct Doc {
        std::string id;
        std::unordered_map<std::string, std::size_t> tf;
        std::size_t length = 0;
    };

    double idf(const std::string& term) const;

    Bm25Params params_;
    std::vector<Doc> docs_;
    std::unordered_map<std::string, std::size_t> df_;
    double avgdl_ = 0.0;
};

std::vector<ScoredId> bm25_query(const ExemplarPool& pool, std::string_view query_text, std::size_t k);

class Bm25Retriever final : public Retriever {
public:
    explicit Bm25Retriever(const ExemplarPool& pool, Bm25Params params = {}) : index_(pool, params) {}
    std::vector<ScoredId> retrieve(const RetrievalQuery& q, std::size_t k) const override {
        return index_.query(q.context_text, k);
    }
    std::string_view name() const noexcept override { return "bm25"; }

private:
    Bm25Index index_;
};

}  // namespace icdst
