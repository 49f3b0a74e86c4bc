#include "icdst/dialogue.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "icdst/mining.hpp"
#include "icdst/rng.hpp"
#include "json_util.hpp"

namespace icdst {

using json_util::json;

void derive_gold_changes(DialogueRecord& d) {
    d.gold_changes.clear();
    d.gold_changes.reserve(d.turns.size());
    DialogueState prev;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
        auto change = diff_states(prev, d.turns[t].state);
        if (!(apply_change(prev, change) == d.turns[t].state)) {
            throw AccumulationError("dialogue " + d.id + ", turn " + std::to_string(t) +
                                    ": gold state is not reproduced by its own change");
        }
        d.gold_changes.push_back(std::move(change));
        prev = d.turns[t].state;
    }
}

namespace {

DialogueRecord parse_record(const json& j, const Ontology* ont, const std::string& where) {
    DialogueRecord d;
    d.id = j.at("id").get<std::string>();
    const std::string at = where + " (dialogue " + d.id + ")";
    const auto& turns = j.at("turns");
    if (!turns.is_array()) throw FormatError(at + ": turns must be an array");
    for (std::size_t t = 0; t < turns.size(); ++t) {
        const auto& tj = turns[t];
        DialogueTurn turn;
        turn.system = tj.value("system", std::string());
        turn.user = tj.at("user").get<std::string>();
        turn.state = json_util::slot_map_from_json<DialogueState>(tj.value("state", json::object()),
                                                                  at + ", turn " + std::to_string(t));
        if (ont) {
            for (const auto& [slot, value] : turn.state) {
                if (!ont->contains(slot)) {
                    throw FormatError(at + ", turn " + std::to_string(t) + ": slot " + slot.key() +
                                      " is not in the ontology");
                }
            }
        }
        d.turns.push_back(std::move(turn));
    }
    derive_gold_changes(d);
    return d;
}

}  // namespace

std::vector<DialogueRecord> parse_dialogues(std::string_view text, const Ontology* ont, std::string_view source) {
    std::vector<DialogueRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t, std::less<>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = std::string(source) + ":" + std::to_string(lineno);
        try {
            out.push_back(parse_record(json::parse(line), ont, where));
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (!seen.emplace(out.back().id, lineno).second) throw FormatError(where + ": duplicate dialogue id " + out.back().id);
    }
    return out;
}

std::vector<DialogueRecord> load_dialogues(const std::filesystem::path& path, const Ontology* ont) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dialogue file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dialogues(buf.str(), ont, path.string());
}

void write_dialogues(const std::vector<DialogueRecord>& dialogues, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dialogue file: " + path.string());
    for (const auto& d : dialogues) {
        json_util::ordered_json j;
        j["id"] = d.id;
        j["turns"] = json_util::ordered_json::array();
        for (const auto& t : d.turns) {
            json_util::ordered_json tj;
            tj["system"] = t.system;
            tj["user"] = t.user;
            tj["state"] = json_util::slot_map_to_json(t.state);
            j["turns"].push_back(std::move(tj));
        }
        out << j.dump() << '\n';
    }
}

TurnContext turn_context(const DialogueRecord& d, std::size_t t, const DialogueState& prev_state,
                         ContextRepresentation representation) {
    TurnContext ctx;
    ctx.prev_state = prev_state;
    ctx.system_utt = d.turns.at(t).system;
    ctx.user_utt = d.turns[t].user;
    ctx.representation = representation;
    if (representation == ContextRepresentation::full_history) {
        for (std::size_t i = 0; i < t; ++i) ctx.history.push_back({d.turns[i].system, d.turns[i].user});
    }
    return ctx;
}

std::string turn_key(std::string_view dialogue_id, std::size_t turn) {
    return std::string(dialogue_id) + "/" + std::to_string(turn);
}

std::size_t pool_dialogue_count(double fraction, std::size_t n) { return fraction_count(fraction, n); }

std::vector<std::size_t> sample_dialogue_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("pool fraction must be in (0, 1]");
    if (n == 0) throw ConfigError("cannot sample a pool from zero dialogues");
    Rng rng(seed);
    auto idx = sample_without_replacement(n, std::min(pool_dialogue_count(fraction, n), n), rng);
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

void append_records(std::vector<ExemplarRecord>& out, const DialogueRecord& d, const Ontology& ont,
                    ContextRepresentation representation) {
    DialogueState prev;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
        const auto ctx = turn_context(d, t, prev, representation);
        out.push_back(make_exemplar_record(turn_key(d.id, t), render_context(ctx, ont, kRetrieverMaxUnits),
                                           d.gold_changes[t]));
        prev = d.turns[t].state;
    }
}

}  // namespace

ExemplarPool sample_pool(const std::vector<DialogueRecord>& dialogues, double fraction, std::uint64_t seed,
                         const Ontology& ont, ContextRepresentation representation) {
    std::vector<ExemplarRecord> records;
    for (auto i : sample_dialogue_indices(dialogues.size(), fraction, seed)) {
        append_records(records, dialogues[i], ont, representation);
    }
    return ExemplarPool(std::move(records));
}

ExemplarPool pool_from_dialogues(const std::vector<DialogueRecord>& dialogues, const Ontology& ont,
                                 ContextRepresentation representation) {
    std::vector<ExemplarRecord> records;
    for (const auto& d : dialogues) append_records(records, d, ont, representation);
    return ExemplarPool(std::move(records));
}

}  // namespace icdst
