#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/codec.hpp"
#include "icdst/error.hpp"
#include "icdst/ontology.hpp"
#include "icdst/state.hpp"

namespace icdst {

enum class ContextRepresentation {
    /// Previous accumulated state plus the current turn (the default).
    prev_state_plus_turn,
    /// Every earlier utterance pair plus the current turn.
    full_history,
    /// Current turn only.
    single_turn,
};

struct UtterancePair {
    std::string system;
    std::string user;
};

struct TurnContext {
    DialogueState prev_state;
    std::string system_utt;
    std::string user_utt;
    ContextRepresentation representation = ContextRepresentation::prev_state_plus_turn;
    /// Earlier turns, oldest first. Read only in full_history mode.
    std::vector<UtterancePair> history;
};

/// A labeled example as it appears in the prompt.
struct PromptExemplar {
    std::string context_text;
    StateChange change;
};

enum class PromptFormat { sql, traditional };
enum class ExemplarOrder { most_similar_last, most_similar_first };

inline constexpr std::size_t kDefaultPromptBudget = 3600;
inline constexpr std::string_view kSqlInstruction =
    "Using valid SQLite, answer the following multi-turn conversational questions for the tables provided above.";
inline constexpr std::string_view kTraditionalInstruction =
    "answer the following multi-turn conversational questions for the ontology provided above.";

struct PromptSpec {
    const Ontology* ontology = nullptr;
    std::string schema_text;
    std::string instruction;
    /// Retrieval rank order: most similar first.
    std::vector<PromptExemplar> exemplars;
    TurnContext test;
    PromptFormat format = PromptFormat::sql;
    std::size_t max_prompt_units = kDefaultPromptBudget;
    ExemplarOrder exemplar_order = ExemplarOrder::most_similar_last;
    /// Empty lines between consecutive example blocks.
    std::size_t blank_lines_between_examples = 2;
    SerializeOptions serialize;
    /// Unit cap for the rendered test context (full_history truncation).
    std::optional<std::size_t> context_unit_cap;
};

struct BuiltPrompt {
    std::string text;
    std::size_t exemplars_used = 0;
};

class BudgetTooSmall : public Error {
public:
    using Error::Error;
};

/// Approximate model tokens: whitespace-delimited tokens times 1.35.
double length_units(std::string_view text);
bool fits_budget(std::string_view text, std::size_t max_units);
/// Largest whitespace-token count whose unit length stays within `max_units`.
std::size_t max_tokens_for_units(std::size_t max_units);

/// The `[context] ... / [system] ... / Q: [user] ...` block for one turn.
/// State pairs follow ontology slot order.
std::string render_context(const TurnContext& ctx, const Ontology& ont);

/// As above; in full_history mode the oldest utterance pairs are dropped
/// until the block fits `max_units`.
std::string render_context(const TurnContext& ctx, const Ontology& ont, std::size_t max_units);

/// Schema, instruction, numbered examples and the open test block. Drops the
/// least similar exemplars one at a time until the budget is met; throws
/// BudgetTooSmall when even the exemplar-free prompt is too long.
BuiltPrompt build_prompt(const PromptSpec& spec);

/// The fixed demonstration turn used in the zero-shot setting.
struct FormattingExample {
    TurnContext turn;
    StateChange change;
    /// Rendered exactly as it appears in the zero-shot prompt.
    std::string context_text;

    PromptExemplar exemplar() const { return {context_text, change}; }
};

/// Requires hotel.type, hotel.area and hotel.internet; throws ConfigError otherwise.
FormattingExample zero_shot_formatting_example(const Ontology& ont);

}  // namespace icdst
