#pragma once

#include <filesystem>

#include "icdst/retrieval.hpp"

namespace icdst {

/// Line-delimited `{"id", "context_text", "change", "vector"?}` records.
ExemplarPool read_pool(const std::filesystem::path& path);
void write_pool(const ExemplarPool& pool, const std::filesystem::path& path);

}  // namespace icdst
