#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icdst/retrieval.hpp"

namespace icdst {

struct MiningConfig {
    /// Share of the other N-1 records examined as nearest neighbors.
    double neighbor_frac = 0.10;
    /// Share of the other N-1 records taken as positives and as negatives.
    double select_frac = 0.05;
    /// Absolute overrides for the two counts above.
    std::optional<std::size_t> neighbor_count;
    std::optional<std::size_t> select_count;
};

struct MinedPairs {
    struct Entry {
        std::string query_id;
        std::vector<std::string> positives;  // best first
        std::vector<std::string> negatives;  // worst first

        bool operator==(const Entry&) const = default;
    };

    std::vector<Entry> entries;  // pool order

    bool operator==(const MinedPairs&) const = default;
};

/// ceil(frac * n), robust to representation error in `frac * n`.
std::size_t fraction_count(double frac, std::size_t n);

/// For each record: take its nearest neighbors by embedding cosine (itself
/// excluded), rank them by change_similarity to the record's own change
/// (ties by pool order) and keep the top as positives and the bottom as
/// negatives. When the neighbor set holds fewer than twice the selection
/// count it is split in half, the extra middle element going to the positives.
MinedPairs mine_contrastive_pairs(const ExemplarPool& pool, const MiningConfig& cfg = {});

/// Line-delimited JSON: a header line, then one
/// `{"query_id", "positives", "negatives"}` object per entry.
void export_pairs(const MinedPairs& pairs, const std::filesystem::path& path);
MinedPairs import_pairs(const std::filesystem::path& path);

/// Line-delimited `{"id", "vector"}` objects.
std::map<std::string, Embedding, std::less<>> read_embeddings(const std::filesystem::path& path);
void write_embeddings(const ExemplarPool& pool, const std::filesystem::path& path);

/// Attaches vectors from an embeddings file; every pool id must be covered and
/// all vectors must share one length.
ExemplarPool import_embeddings(const ExemplarPool& pool, const std::filesystem::path& path);

}  // namespace icdst
