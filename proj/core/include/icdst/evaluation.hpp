#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/dialogue.hpp"
#include "icdst/error.hpp"
#include "icdst/ontology.hpp"
#include "icdst/retrieval.hpp"
#include "icdst/state.hpp"

namespace icdst {

class EvalError : public Error {
public:
    using Error::Error;
};

/// Fraction of aligned turns whose states match exactly. No turns scores 1.
double jga(std::span<const DialogueState> preds, std::span<const DialogueState> golds);

struct DomainScore {
    double rate = 1.0;
    /// Turns where either projection is non-empty.
    std::size_t count = 0;

    bool operator==(const DomainScore&) const = default;
};

/// JGA after projecting onto one domain, over the turns where that domain is
/// active in the gold or the prediction.
DomainScore per_domain_jga(std::span<const DialogueState> preds, std::span<const DialogueState> golds,
                           std::string_view domain, const Ontology& ont);

double change_jga(std::span<const StateChange> preds, std::span<const StateChange> golds);

/// Micro F1 over (slot, value) pairs pooled across turns. When nothing is
/// predicted and nothing is gold the score is 1.
double slot_value_f1(std::span<const DialogueState> preds, std::span<const DialogueState> golds);

/// One scored turn.
struct TurnTrace {
    std::string dialogue_id;
    std::size_t turn = 0;
    DialogueState gold_state;
    DialogueState pred_state;
    StateChange gold_change;
    StateChange pred_change;
    std::string completion;

    bool state_correct() const { return gold_state == pred_state; }
    bool change_correct() const { return gold_change == pred_change; }
    bool operator==(const TurnTrace&) const = default;
};

struct TurnIndexScore {
    std::size_t turn = 0;
    double state_jga = 1.0;
    double change_jga = 1.0;
    std::size_t count = 0;

    bool operator==(const TurnIndexScore&) const = default;
};

/// Buckets traces by turn position, ascending.
std::vector<TurnIndexScore> per_turn_index(std::span<const TurnTrace> traces);

struct ErrorEntry {
    std::string dialogue_id;
    std::size_t turn = 0;
    std::string kind;
    std::string message;

    bool operator==(const ErrorEntry&) const = default;
};

struct EvalReport {
    double jga_all = 1.0;
    std::map<std::string, DomainScore> jga_per_domain;
    double change_jga = 1.0;
    double slot_value_f1 = 1.0;
    std::vector<TurnIndexScore> per_turn_index_jga;
    std::size_t n_dialogues = 0;
    std::size_t n_turns = 0;
    /// Set when there was nothing to score and every rate is the vacuous 1.
    bool vacuous = false;
    std::vector<ErrorEntry> error_log;
    std::vector<TurnTrace> turns;

    bool operator==(const EvalReport&) const = default;
};

/// Scores traces given in dialogue order. Per-domain entries cover every
/// ontology domain.
EvalReport score_traces(std::vector<TurnTrace> traces, const Ontology& ont, std::vector<ErrorEntry> error_log = {});

/// Which previous state a test turn's context is rendered from.
enum class Conditioning { predicted_prev_state, gold_prev_state };

/// Predicts each turn's change as the label of the top retrieved exemplar.
EvalReport copy_baseline(const ExemplarPool& pool, const Retriever& retriever,
                         const std::vector<DialogueRecord>& test, const Ontology& ont,
                         ContextRepresentation representation = ContextRepresentation::prev_state_plus_turn,
                         Conditioning conditioning = Conditioning::predicted_prev_state);

/// Summary document (no per-turn rows). Numbers are written so that reading
/// them back yields the same doubles.
std::string report_to_json(const EvalReport& report);
/// Flat per-turn table with a header row; state cells hold compact JSON.
std::string traces_to_tsv(std::span<const TurnTrace> traces);
std::vector<TurnTrace> traces_from_tsv(std::string_view text, std::string_view source = "<trace>");

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& trace_path);
std::vector<TurnTrace> read_traces(const std::filesystem::path& trace_path);

}  // namespace icdst
