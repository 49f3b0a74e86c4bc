#include <fstream>
#include <sstream>

#include "icdst/evaluation.hpp"
#include "json_util.hpp"

namespace icdst {

using json_util::json;
using json_util::ordered_json;

namespace {

constexpr std::string_view kTraceHeader =
    "dialogue_id\tturn\tgold_state\tpred_state\tgold_change\tpred_change\tstate_correct\tchange_correct\tcompletion";

}  // namespace

std::string report_to_json(const EvalReport& r) {
    ordered_json j;
    j["jga_all"] = r.jga_all;
    j["change_jga"] = r.change_jga;
    j["slot_value_f1"] = r.slot_value_f1;
    j["jga_per_domain"] = ordered_json::object();
    for (const auto& [domain, s] : r.jga_per_domain) j["jga_per_domain"][domain] = {{"rate", s.rate}, {"count", s.count}};
    j["per_turn_index_jga"] = ordered_json::array();
    for (const auto& t : r.per_turn_index_jga) {
        j["per_turn_index_jga"].push_back(
            {{"turn", t.turn}, {"state_jga", t.state_jga}, {"change_jga", t.change_jga}, {"count", t.count}});
    }
    j["n_dialogues"] = r.n_dialogues;
    j["n_turns"] = r.n_turns;
    j["vacuous"] = r.vacuous;
    j["error_log"] = ordered_json::array();
    for (const auto& e : r.error_log) {
        j["error_log"].push_back({{"dialogue_id", e.dialogue_id}, {"turn", e.turn}, {"kind", e.kind}, {"message", e.message}});
    }
    return j.dump(2) + "\n";
}

std::string traces_to_tsv(std::span<const TurnTrace> traces) {
    std::string out(kTraceHeader);
    out += '\n';
    for (const auto& t : traces) {
        if (t.dialogue_id.find_first_of("\t\n\r") != std::string::npos) {
            throw FormatError("dialogue id contains a tab or newline: " + t.dialogue_id);
        }
        out += t.dialogue_id;
        out += '\t' + std::to_string(t.turn);
        out += '\t' + json_util::slot_map_to_json(t.gold_state).dump();
        out += '\t' + json_util::slot_map_to_json(t.pred_state).dump();
        out += '\t' + json_util::slot_map_to_json(t.gold_change).dump();
        out += '\t' + json_util::slot_map_to_json(t.pred_change).dump();
        out += t.state_correct() ? "\t1" : "\t0";
        out += t.change_correct() ? "\t1" : "\t0";
        out += '\t' + json(t.completion).dump();
        out += '\n';
    }
    return out;
}

std::vector<TurnTrace> traces_from_tsv(std::string_view text, std::string_view source) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::vector<TurnTrace> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = std::string(source) + ":" + std::to_string(lineno);
        if (lineno == 1) {
            if (line != kTraceHeader) throw FormatError(where + ": unexpected trace header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        for (;;) {
            auto tab = line.find('\t', pos);
            cells.push_back(line.substr(pos, tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (cells.size() != 9) throw FormatError(where + ": expected 9 columns, got " + std::to_string(cells.size()));
        try {
            TurnTrace t;
            t.dialogue_id = cells[0];
            t.turn = std::stoul(cells[1]);
            t.gold_state = json_util::slot_map_from_json<DialogueState>(json::parse(cells[2]), where);
            t.pred_state = json_util::slot_map_from_json<DialogueState>(json::parse(cells[3]), where);
            t.gold_change = json_util::slot_map_from_json<StateChange>(json::parse(cells[4]), where);
            t.pred_change = json_util::slot_map_from_json<StateChange>(json::parse(cells[5]), where);
            t.completion = json::parse(cells[8]).get<std::string>();
            out.push_back(std::move(t));
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        } catch (const std::logic_error& e) {
            throw FormatError(where + ": bad turn index");
        }
    }
    return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& trace_path) {
    auto write = [](const std::filesystem::path& p, const std::string& s) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + p.string());
        out << s;
        if (!out) throw IoError("failed writing " + p.string());
    };
    write(json_path, report_to_json(report));
    if (!trace_path.empty()) write(trace_path, traces_to_tsv(report.turns));
}

std::vector<TurnTrace> read_traces(const std::filesystem::path& trace_path) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw IoError("cannot open trace file: " + trace_path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return traces_from_tsv(buf.str(), trace_path.string());
}

}  // namespace icdst
