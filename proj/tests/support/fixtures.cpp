#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_paths.hpp"

namespace icdst::testing {

using nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TurnContext load_test_turn(const std::filesystem::path& p) {
    auto j = json::parse(read_file(p));
    TurnContext ctx;
    for (auto it = j["prev_state"].begin(); it != j["prev_state"].end(); ++it) {
        ctx.prev_state.set(*SlotName::parse(it.key()), it.value().get<std::string>());
    }
    ctx.system_utt = j["system"].get<std::string>();
    ctx.user_utt = j["user"].get<std::string>();
    return ctx;
}

std::vector<PromptExemplar> load_prompt_exemplars(const std::filesystem::path& p) {
    std::istringstream in(read_file(p));
    std::vector<PromptExemplar> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line);
        PromptExemplar ex;
        ex.context_text = j["context_text"].get<std::string>();
        for (auto it = j["change"].begin(); it != j["change"].end(); ++it) {
            ex.change.set(*SlotName::parse(it.key()), it.value().get<std::string>());
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::string build_appendix_a1_prompt() {
    const auto ont = load_ontology(fixture("appendix_a1_ontology.json"));
    PromptSpec spec;
    spec.ontology = &ont;
    spec.schema_text = render_schema_sql(ont);
    spec.instruction = std::string(kSqlInstruction);
    spec.exemplars = load_prompt_exemplars(fixture("appendix_a1_exemplars.jsonl"));
    spec.test = load_test_turn(fixture("appendix_a1_test_turn.json"));
    return build_prompt(spec).text;
}

std::string build_appendix_a2_prompt() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    PromptSpec spec;
    spec.ontology = &ont;
    spec.schema_text = render_schema_sql(ont, {.use_display_names = true});
    spec.instruction = std::string(kSqlInstruction);
    spec.exemplars = {zero_shot_formatting_example(ont).exemplar()};
    spec.blank_lines_between_examples = 1;
    spec.test = load_test_turn(fixture("appendix_a2_test_turn.json"));
    spec.serialize.use_display_names = true;
    return build_prompt(spec).text;
}

}  // namespace icdst::testing
