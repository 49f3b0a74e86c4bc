#include "icdst/prompt.hpp"

#include <algorithm>

#include "text_util.hpp"

namespace icdst {

double length_units(std::string_view text) {
    return static_cast<double>(split_whitespace(text).size()) * 1.35;
}

// Integer form of tokens * 1.35 <= max_units.
bool fits_budget(std::string_view text, std::size_t max_units) {
    return split_whitespace(text).size() * 135 <= max_units * 100;
}

std::size_t max_tokens_for_units(std::size_t max_units) { return max_units * 100 / 135; }

namespace {

std::string render_state(const DialogueState& state, const Ontology& ont) {
    std::vector<std::pair<std::size_t, std::string>> known;
    std::vector<std::string> unknown;
    for (const auto& [slot, value] : state) {
        std::string pair = slot.key() + ": " + value;
        const auto idx = ont.slot_index(slot);
        if (idx == Ontology::npos) {
            unknown.push_back(std::move(pair));
        } else {
            known.emplace_back(idx, std::move(pair));
        }
    }
    std::sort(known.begin(), known.end());
    std::vector<std::string> parts;
    for (auto& [idx, pair] : known) parts.push_back(std::move(pair));
    for (auto& pair : unknown) parts.push_back(std::move(pair));
    return join(parts, ", ");
}

std::string render_history(const std::vector<UtterancePair>& history, std::size_t first) {
    std::string out;
    for (std::size_t i = first; i < history.size(); ++i) {
        if (!out.empty()) out += ' ';
        if (!history[i].system.empty()) out += "[system] " + history[i].system + " ";
        out += "[user] " + history[i].user;
    }
    return out;
}

std::string assemble(std::string_view context, const TurnContext& ctx) {
    std::string out = "[context] ";
    out += context;
    out += "\n[system] ";
    out += ctx.system_utt;
    out += "\nQ: [user] ";
    out += ctx.user_utt;
    return out;
}

}  // namespace

std::string render_context(const TurnContext& ctx, const Ontology& ont) {
    switch (ctx.representation) {
        case ContextRepresentation::prev_state_plus_turn: return assemble(render_state(ctx.prev_state, ont), ctx);
        case ContextRepresentation::full_history: return assemble(render_history(ctx.history, 0), ctx);
        case ContextRepresentation::single_turn: return assemble("", ctx);
    }
    return assemble("", ctx);
}

std::string render_context(const TurnContext& ctx, const Ontology& ont, std::size_t max_units) {
    if (ctx.representation != ContextRepresentation::full_history) return render_context(ctx, ont);
    for (std::size_t first = 0; first < ctx.history.size(); ++first) {
        auto text = assemble(render_history(ctx.history, first), ctx);
        if (fits_budget(text, max_units)) return text;
    }
    return assemble("", ctx);
}

namespace {

std::string label(const PromptSpec& spec, const StateChange& change) {
    if (spec.format == PromptFormat::sql) return "SQL: " + serialize_change(change, *spec.ontology, spec.serialize);
    return "A: " + serialize_traditional(change);
}

std::string assemble_prompt(const PromptSpec& spec, const std::string& test_context, std::size_t n_exemplars) {
    std::string out = spec.schema_text;
    if (!out.empty()) out += '\n';
    out += "-- ";
    out += spec.instruction;
    out += "\n\n";

    std::vector<const PromptExemplar*> placed;
    for (std::size_t i = 0; i < n_exemplars; ++i) placed.push_back(&spec.exemplars[i]);
    if (spec.exemplar_order == ExemplarOrder::most_similar_last) std::reverse(placed.begin(), placed.end());

    const std::string separator(spec.blank_lines_between_examples + 1, '\n');
    std::size_t number = 1;
    for (const auto* ex : placed) {
        out += "Example #" + std::to_string(number++) + "\n";
        out += ex->context_text;
        out += '\n';
        out += label(spec, ex->change);
        out += separator;
    }
    out += "Example #" + std::to_string(number) + "\n";
    out += test_context;
    out += spec.format == PromptFormat::sql ? "\nSQL: SELECT * FROM" : "\nA:";
    return out;
}

}  // namespace

BuiltPrompt build_prompt(const PromptSpec& spec) {
    if (spec.ontology == nullptr) throw ConfigError("prompt spec has no ontology");
    if (spec.max_prompt_units == 0) throw ConfigError("prompt budget must be positive");
    const std::string test_context = spec.context_unit_cap ? render_context(spec.test, *spec.ontology, *spec.context_unit_cap)
                                                           : render_context(spec.test, *spec.ontology);
    for (std::size_t n = spec.exemplars.size() + 1; n-- > 0;) {
        auto text = assemble_prompt(spec, test_context, n);
        if (fits_budget(text, spec.max_prompt_units)) return {std::move(text), n};
    }
    throw BudgetTooSmall("prompt without exemplars needs " +
                         std::to_string(length_units(assemble_prompt(spec, test_context, 0))) + " units, budget is " +
                         std::to_string(spec.max_prompt_units));
}

FormattingExample zero_shot_formatting_example(const Ontology& ont) {
    for (const char* slot : {"type", "area", "internet"}) {
        if (!ont.contains({"hotel", slot})) {
            throw ConfigError(std::string("zero-shot formatting example needs slot hotel-") + slot);
        }
    }
    FormattingExample ex;
    ex.turn.user_utt = "i am looking for a guest house to stay in the west. i do not need internet .";
    ex.change.set({"hotel", "type"}, "guest house");
    ex.change.set({"hotel", "area"}, "west");
    ex.change.set({"hotel", "internet"}, "no");
    ex.context_text = "[context]\n[system]\nQ: [user] " + ex.turn.user_utt;
    return ex;
}

}  // namespace icdst
