#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/error.hpp"
#include "icdst/ontology.hpp"
#include "icdst/prompt.hpp"
#include "icdst/retrieval.hpp"
#include "icdst/state.hpp"

namespace icdst {

struct DialogueTurn {
    std::string system;  // empty on the first turn
    std::string user;
    DialogueState state;
};

struct DialogueRecord {
    std::string id;
    std::vector<DialogueTurn> turns;
    /// Turn t diffed against turn t-1; turn 0 against the empty state.
    std::vector<StateChange> gold_changes;
};

/// Raised when a record's gold states cannot be rebuilt from its own changes.
class AccumulationError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Fills gold_changes and checks that folding them reproduces every state.
void derive_gold_changes(DialogueRecord& d);

/// Line-delimited `{"id", "turns": [{"system", "user", "state"}]}` records.
/// Values are normalized on load. With an ontology, slots it does not define
/// are rejected.
std::vector<DialogueRecord> load_dialogues(const std::filesystem::path& path, const Ontology* ont = nullptr);
std::vector<DialogueRecord> parse_dialogues(std::string_view text, const Ontology* ont = nullptr,
                                            std::string_view source = "<input>");
void write_dialogues(const std::vector<DialogueRecord>& dialogues, const std::filesystem::path& path);

/// Context inputs for turn `t` given the state to condition on.
TurnContext turn_context(const DialogueRecord& d, std::size_t t, const DialogueState& prev_state,
                         ContextRepresentation representation);

/// `dialogue_id/turn`, used as record id and query key.
std::string turn_key(std::string_view dialogue_id, std::size_t turn);

/// Number of dialogues drawn for `fraction` of `n`: ceil(fraction * n).
std::size_t pool_dialogue_count(double fraction, std::size_t n);

/// Indices of the dialogues drawn for the pool, ascending.
std::vector<std::size_t> sample_dialogue_indices(std::size_t n, double fraction, std::uint64_t seed);

/// Draws whole dialogues and flattens each turn into a record whose context
/// is rendered from the gold previous state and whose label is the gold change.
ExemplarPool sample_pool(const std::vector<DialogueRecord>& dialogues, double fraction, std::uint64_t seed,
                         const Ontology& ont,
                         ContextRepresentation representation = ContextRepresentation::prev_state_plus_turn);

/// Every turn of every dialogue, no sampling.
ExemplarPool pool_from_dialogues(const std::vector<DialogueRecord>& dialogues, const Ontology& ont,
                                 ContextRepresentation representation = ContextRepresentation::prev_state_plus_turn);

}  // namespace icdst
