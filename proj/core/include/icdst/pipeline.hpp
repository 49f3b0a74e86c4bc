#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/codec.hpp"
#include "icdst/dialogue.hpp"
#include "icdst/evaluation.hpp"
#include "icdst/lm_gateway.hpp"
#include "icdst/ontology.hpp"
#include "icdst/prompt.hpp"
#include "icdst/retrieval.hpp"

namespace icdst {

enum class RetrieverKind { embedding, bm25, random, oracle };

struct RunConfig {
    double pool_fraction = 0.01;
    std::uint64_t seed = 0;
    std::size_t k_exemplars = 10;
    RetrieverKind retriever_kind = RetrieverKind::embedding;
    ContextRepresentation representation = ContextRepresentation::prev_state_plus_turn;
    PromptFormat format = PromptFormat::sql;
    Conditioning conditioning = Conditioning::predicted_prev_state;
    MultiDomainStyle multi_domain_style = MultiDomainStyle::per_domain_statements;
    bool use_display_names = false;
    std::size_t budget = kDefaultPromptBudget;
    ExemplarOrder exemplar_order = ExemplarOrder::most_similar_last;
    /// Schema plus the fixed formatting example; no retrieval.
    bool zero_shot = false;
    std::size_t max_completion_units = 120;
    /// Dialogues tracked at once.
    std::size_t parallel_dialogues = 4;

    /// Throws ConfigError.
    void validate() const;
};

std::string_view to_string(RetrieverKind k) noexcept;
std::string_view to_string(ContextRepresentation r) noexcept;
std::string_view to_string(PromptFormat f) noexcept;
std::string_view to_string(Conditioning c) noexcept;
std::string_view to_string(MultiDomainStyle s) noexcept;
std::string_view to_string(ExemplarOrder o) noexcept;

/// Inverses of to_string; throw ConfigError on an unknown name.
RetrieverKind parse_retriever_kind(std::string_view s);
ContextRepresentation parse_representation(std::string_view s);
PromptFormat parse_format(std::string_view s);
Conditioning parse_conditioning(std::string_view s);
MultiDomainStyle parse_multi_domain_style(std::string_view s);
ExemplarOrder parse_exemplar_order(std::string_view s);

/// Builds the retriever of the given kind. `encoder` is required for the
/// embedding kind, whose pool must carry embeddings.
std::shared_ptr<const Retriever> make_retriever(RetrieverKind kind, std::shared_ptr<const ExemplarPool> pool,
                                                std::uint64_t seed,
                                                std::shared_ptr<const QueryEncoder> encoder = nullptr);

struct TurnOutcome {
    TurnTrace trace;
    std::vector<ErrorEntry> errors;
};

struct DialogueRun {
    std::vector<TurnOutcome> turns;
};

/// Retrieve, prompt, complete, parse and accumulate, one turn after another.
class Tracker {
public:
    /// `retriever` may be null only in zero-shot mode.
    Tracker(const Ontology& ont, RunConfig cfg, std::shared_ptr<const ExemplarPool> pool,
            std::shared_ptr<const Retriever> retriever);

    /// The prompt for turn `t` given the state to condition on.
    BuiltPrompt prompt_for(const DialogueRecord& d, std::size_t t, const DialogueState& prev_state) const;

    DialogueRun track(const DialogueRecord& d, const LmGateway& lm) const;
    EvalReport run(const std::vector<DialogueRecord>& test, const LmGateway& lm) const;

    /// Prompt hash to gold completion for every turn, with prompts conditioned
    /// on gold states. Replaying it makes the tracker reproduce the gold labels.
    std::map<std::string, std::string, std::less<>> gold_script(const std::vector<DialogueRecord>& test) const;

    const RunConfig& config() const noexcept { return cfg_; }
    const std::string& schema_text() const noexcept { return schema_; }

private:
    std::string completion_for(const StateChange& change) const;
    ParseResult parse(std::string_view completion) const;

    const Ontology* ont_;
    RunConfig cfg_;
    std::shared_ptr<const ExemplarPool> pool_;
    std::shared_ptr<const Retriever> retriever_;
    std::string schema_;
};

DialogueRun track_dialogue(const DialogueRecord& d, const Tracker& tracker, const LmGateway& lm);
EvalReport run_experiment(const std::vector<DialogueRecord>& test, const Tracker& tracker, const LmGateway& lm);

struct MeanStdev {
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single run.
    double stdev = 0.0;
};

struct RepeatedReport {
    std::vector<std::uint64_t> seeds;
    std::vector<EvalReport> runs;
    /// Keyed by metric name: jga_all, change_jga, slot_value_f1, jga/<domain>.
    std::map<std::string, MeanStdev> summary;
};

MeanStdev mean_stdev(const std::vector<double>& xs);
std::map<std::string, MeanStdev> summarize(const std::vector<EvalReport>& runs);

/// One run per pool seed. Each run samples its pool from `train` with that
/// seed and, for the embedding retriever, embeds it with a hashing embedder.
RepeatedReport run_repeated(const std::vector<DialogueRecord>& train, const std::vector<DialogueRecord>& test,
                            const Ontology& ont, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                            const LmGateway& lm);

std::string repeated_to_json(const RepeatedReport& r);

}  // namespace icdst
