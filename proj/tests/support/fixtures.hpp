#pragma once

// Loaders for the appendix fixtures.

#include <string>
#include <vector>

#include "icdst/ontology.hpp"
#include "icdst/prompt.hpp"

namespace icdst::testing {

std::string read_file(const std::filesystem::path& p);

TurnContext load_test_turn(const std::filesystem::path& p);
std::vector<PromptExemplar> load_prompt_exemplars(const std::filesystem::path& p);

// The appendix prompts rebuilt from the bundled ontologies and fixtures.
std::string build_appendix_a1_prompt();
std::string build_appendix_a2_prompt();

}  // namespace icdst::testing
