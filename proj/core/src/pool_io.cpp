#include "icdst/pool_io.hpp"

#include <fstream>

#include "json_util.hpp"

namespace icdst {

using json_util::json;

ExemplarPool read_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pool file: " + path.string());
    std::vector<ExemplarRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            auto j = json::parse(line);
            ExemplarRecord r;
            r.id = j.at("id").get<std::string>();
            r.context_text = j.at("context_text").get<std::string>();
            r.change = json_util::slot_map_from_json<StateChange>(j.at("change"), where);
            if (j.contains("vector")) r.embedding = j["vector"].get<Embedding>();
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
    }
    try {
        return ExemplarPool(std::move(records));
    } catch (const RetrievalError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_pool(const ExemplarPool& pool, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write pool file: " + path.string());
    for (const auto& r : pool.records()) {
        json_util::ordered_json j;
        j["id"] = r.id;
        j["context_text"] = r.context_text;
        j["change"] = json_util::slot_map_to_json(r.change);
        if (r.embedding) j["vector"] = *r.embedding;
        out << j.dump() << '\n';
    }
}

}  // namespace icdst
