#include "icdst/mining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json_util.hpp"

namespace icdst {

using json_util::json;

std::size_t fraction_count(double frac, std::size_t n) {
    if (frac <= 0.0 || n == 0) return 0;
    const double x = frac * static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

MinedPairs mine_contrastive_pairs(const ExemplarPool& pool, const MiningConfig& cfg) {
    const std::size_t n = pool.size();
    if (n < 2) throw RetrievalError("pair mining needs at least 2 records, pool has " + std::to_string(n));
    if (!pool.has_embeddings()) throw RetrievalError("pair mining needs an embedded pool");

    const std::size_t others = n - 1;
    const std::size_t m = std::min(cfg.neighbor_count.value_or(fraction_count(cfg.neighbor_frac, others)), others);
    const std::size_t s = cfg.select_count.value_or(fraction_count(cfg.select_frac, others));
    const std::size_t n_pos = m >= 2 * s ? s : (m + 1) / 2;
    const std::size_t n_neg = m >= 2 * s ? s : m / 2;

    MinedPairs out;
    out.entries.reserve(n);
    std::vector<std::size_t> candidates;
    std::vector<double> cos(n), sim(n);
    for (std::size_t q = 0; q < n; ++q) {
        const auto& query = pool[q];
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == q) continue;
            cos[j] = cosine_score(*query.embedding, *pool[j].embedding);
            candidates.push_back(j);
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m), candidates.end(),
                          [&](std::size_t a, std::size_t b) { return cos[a] > cos[b] || (cos[a] == cos[b] && a < b); });
        candidates.resize(m);
        for (auto j : candidates) sim[j] = change_similarity(query.change, pool[j].change);
        std::sort(candidates.begin(), candidates.end(),
                  [&](std::size_t a, std::size_t b) { return sim[a] > sim[b] || (sim[a] == sim[b] && a < b); });

        MinedPairs::Entry e;
        e.query_id = query.id;
        for (std::size_t i = 0; i < n_pos; ++i) e.positives.push_back(pool[candidates[i]].id);
        for (std::size_t i = 0; i < n_neg; ++i) e.negatives.push_back(pool[candidates[m - 1 - i]].id);
        out.entries.push_back(std::move(e));
    }
    return out;
}

namespace {

constexpr const char* kPairsFormat = "icdst.mined_pairs";

std::ifstream open_in(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + ": " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, const char* what) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(std::string("cannot write ") + what + ": " + path.string());
    return out;
}

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
}

}  // namespace

void export_pairs(const MinedPairs& pairs, const std::filesystem::path& path) {
    auto out = open_out(path, "pairs file");
    json_util::ordered_json header = {{"format", kPairsFormat}, {"version", 1}};
    out << header.dump() << '\n';
    for (const auto& e : pairs.entries) {
        json_util::ordered_json j;
        j["query_id"] = e.query_id;
        j["positives"] = e.positives;
        j["negatives"] = e.negatives;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed writing pairs file: " + path.string());
}

MinedPairs import_pairs(const std::filesystem::path& path) {
    auto in = open_in(path, "pairs file");
    MinedPairs pairs;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = parse_line(line, path, lineno);
        if (!saw_header) {
            if (j.value("format", "") != kPairsFormat) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing mined-pairs header");
            }
            saw_header = true;
            continue;
        }
        try {
            pairs.entries.push_back({j.at("query_id").get<std::string>(), j.at("positives").get<std::vector<std::string>>(),
                                     j.at("negatives").get<std::vector<std::string>>()});
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!saw_header) throw FormatError(path.string() + ": missing mined-pairs header");
    return pairs;
}

std::map<std::string, Embedding, std::less<>> read_embeddings(const std::filesystem::path& path) {
    auto in = open_in(path, "embeddings file");
    std::map<std::string, Embedding, std::less<>> out;
    std::optional<std::size_t> dim;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = parse_line(line, path, lineno);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::string id;
        Embedding v;
        try {
            id = j.at("id").get<std::string>();
            v = j.at("vector").get<Embedding>();
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (!dim) dim = v.size();
        if (v.size() != *dim) {
            throw FormatError(where + ": vector for " + id + " has length " + std::to_string(v.size()) + ", expected " +
                              std::to_string(*dim));
        }
        if (!out.emplace(std::move(id), std::move(v)).second) throw FormatError(where + ": duplicate id");
    }
    return out;
}

void write_embeddings(const ExemplarPool& pool, const std::filesystem::path& path) {
    auto out = open_out(path, "embeddings file");
    for (const auto& r : pool.records()) {
        if (!r.embedding) throw RetrievalError("record " + r.id + " has no embedding");
        json_util::ordered_json j;
        j["id"] = r.id;
        j["vector"] = *r.embedding;
        out << j.dump() << '\n';
    }
}

ExemplarPool import_embeddings(const ExemplarPool& pool, const std::filesystem::path& path) {
    return pool.with_embeddings(read_embeddings(path));
}

}  // namespace icdst
