#include "icdst/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "icdst/normalize.hpp"
#include "text_util.hpp"

namespace icdst {

std::vector<std::string> bm25_tokenize(std::string_view text) {
    const auto folded = collapse_whitespace(text);
    std::vector<std::string> out;
    for (auto tok : split_whitespace(folded)) out.emplace_back(tok);
    return out;
}

Bm25Index::Bm25Index(const ExemplarPool& pool, Bm25Params params) : params_(params) {
    docs_.reserve(pool.size());
    std::size_t total = 0;
    for (const auto& r : pool.records()) {
        Doc doc;
        doc.id = r.id;
        for (auto& tok : bm25_tokenize(r.context_text)) {
            ++doc.tf[tok];
            ++doc.length;
        }
        for (const auto& [term, count] : doc.tf) ++df_[term];
        total += doc.length;
        docs_.push_back(std::move(doc));
    }
    avgdl_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

double Bm25Index::idf(const std::string& term) const {
    auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(docs_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(std::size_t doc, const std::vector<std::string>& sorted_terms) const {
    const auto& d = docs_[doc];
    const double norm = avgdl_ > 0.0 ? static_cast<double>(d.length) / avgdl_ : 0.0;
    double total = 0.0;
    for (const auto& term : sorted_terms) {
        auto it = d.tf.find(term);
        if (it == d.tf.end()) continue;
        const double tf = static_cast<double>(it->second);
        total += idf(term) * (tf * (params_.k1 + 1.0)) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
    }
    return total;
}

std::vector<ScoredId> Bm25Index::query(std::string_view text, std::size_t k) const {
    if (k == 0) return {};
    auto toks = bm25_tokenize(text);
    std::set<std::string> unique(toks.begin(), toks.end());
    const std::vector<std::string> terms(unique.begin(), unique.end());

    std::vector<double> scores(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) scores[i] = score(i, terms);
    std::vector<std::size_t> order(docs_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    std::vector<ScoredId> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({docs_[order[i]].id, scores[order[i]], order[i]});
    return out;
}

std::vector<ScoredId> bm25_query(const ExemplarPool& pool, std::string_view query_text, std::size_t k) {
    return Bm25Index(pool).query(query_text, k);
}

}  // namespace icdst
