#include "icdst/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "icdst/bm25.hpp"
#include "icdst/embedding.hpp"
#include "json_util.hpp"

namespace icdst {

void RunConfig::validate() const {
    if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) throw ConfigError("pool_fraction must be in (0, 1]");
    if (!zero_shot && k_exemplars == 0) throw ConfigError("k_exemplars must be > 0");
    if (budget == 0) throw ConfigError("budget must be > 0");
    if (max_completion_units == 0) throw ConfigError("max_completion_units must be > 0");
    if (parallel_dialogues == 0) throw ConfigError("parallel_dialogues must be > 0");
}

namespace {

template <typename E, std::size_t N>
E parse_name(std::string_view s, const std::pair<std::string_view, E> (&table)[N], const char* what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    std::string msg = "unknown " + std::string(what) + " '" + std::string(s) + "'; expected one of";
    for (const auto& [name, value] : table) msg += " " + std::string(name);
    throw ConfigError(msg);
}

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::pair<std::string_view, E> (&table)[N]) noexcept {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::pair<std::string_view, RetrieverKind> kRetrievers[] = {
    {"embedding", RetrieverKind::embedding},
    {"bm25", RetrieverKind::bm25},
    {"random", RetrieverKind::random},
    {"oracle", RetrieverKind::oracle},
};
constexpr std::pair<std::string_view, ContextRepresentation> kRepresentations[] = {
    {"state", ContextRepresentation::prev_state_plus_turn},
    {"history", ContextRepresentation::full_history},
    {"turn", ContextRepresentation::single_turn},
};
constexpr std::pair<std::string_view, PromptFormat> kFormats[] = {
    {"sql", PromptFormat::sql},
    {"traditional", PromptFormat::traditional},
};
constexpr std::pair<std::string_view, Conditioning> kConditionings[] = {
    {"predicted", Conditioning::predicted_prev_state},
    {"gold", Conditioning::gold_prev_state},
};
constexpr std::pair<std::string_view, MultiDomainStyle> kStyles[] = {
    {"statements", MultiDomainStyle::per_domain_statements},
    {"aliases", MultiDomainStyle::renamed_aliases},
};
constexpr std::pair<std::string_view, ExemplarOrder> kOrders[] = {
    {"similar-last", ExemplarOrder::most_similar_last},
    {"similar-first", ExemplarOrder::most_similar_first},
};

}  // namespace

std::string_view to_string(RetrieverKind k) noexcept { return name_of(k, kRetrievers); }
std::string_view to_string(ContextRepresentation r) noexcept { return name_of(r, kRepresentations); }
std::string_view to_string(PromptFormat f) noexcept { return name_of(f, kFormats); }
std::string_view to_string(Conditioning c) noexcept { return name_of(c, kConditionings); }
std::string_view to_string(MultiDomainStyle s) noexcept { return name_of(s, kStyles); }
std::string_view to_string(ExemplarOrder o) noexcept { return name_of(o, kOrders); }

RetrieverKind parse_retriever_kind(std::string_view s) { return parse_name(s, kRetrievers, "retriever"); }
ContextRepresentation parse_representation(std::string_view s) { return parse_name(s, kRepresentations, "representation"); }
PromptFormat parse_format(std::string_view s) { return parse_name(s, kFormats, "format"); }
Conditioning parse_conditioning(std::string_view s) { return parse_name(s, kConditionings, "conditioning"); }
MultiDomainStyle parse_multi_domain_style(std::string_view s) { return parse_name(s, kStyles, "multi-domain style"); }
ExemplarOrder parse_exemplar_order(std::string_view s) { return parse_name(s, kOrders, "exemplar order"); }

std::shared_ptr<const Retriever> make_retriever(RetrieverKind kind, std::shared_ptr<const ExemplarPool> pool,
                                                std::uint64_t seed, std::shared_ptr<const QueryEncoder> encoder) {
    if (!pool) throw ConfigError("retriever needs a pool");
    switch (kind) {
        case RetrieverKind::embedding:
            if (!encoder) throw ConfigError("embedding retriever needs a query encoder");
            if (!pool->has_embeddings() && !pool->empty()) throw ConfigError("embedding retriever needs an embedded pool");
            return std::make_shared<EmbeddingRetriever>(std::move(pool), std::move(encoder));
        case RetrieverKind::bm25: return std::make_shared<Bm25Retriever>(*pool);
        case RetrieverKind::random: return std::make_shared<RandomRetriever>(std::move(pool), seed);
        case RetrieverKind::oracle: return std::make_shared<OracleRetriever>(std::move(pool));
    }
    throw ConfigError("unknown retriever kind");
}

Tracker::Tracker(const Ontology& ont, RunConfig cfg, std::shared_ptr<const ExemplarPool> pool,
                 std::shared_ptr<const Retriever> retriever)
    : ont_(&ont), cfg_(std::move(cfg)), pool_(std::move(pool)), retriever_(std::move(retriever)) {
    cfg_.validate();
    if (!cfg_.zero_shot && (!pool_ || !retriever_)) throw ConfigError("few-shot tracking needs a pool and a retriever");
    schema_ = cfg_.format == PromptFormat::sql ? render_schema_sql(ont, {cfg_.use_display_names})
                                               : render_schema_traditional(ont);
}

BuiltPrompt Tracker::prompt_for(const DialogueRecord& d, std::size_t t, const DialogueState& prev_state) const {
    PromptSpec spec;
    spec.ontology = ont_;
    spec.schema_text = schema_;
    spec.instruction = std::string(cfg_.format == PromptFormat::sql ? kSqlInstruction : kTraditionalInstruction);
    spec.test = turn_context(d, t, prev_state, cfg_.representation);
    spec.format = cfg_.format;
    spec.max_prompt_units = cfg_.budget;
    spec.exemplar_order = cfg_.exemplar_order;
    spec.serialize = {cfg_.multi_domain_style, cfg_.use_display_names};
    if (cfg_.representation == ContextRepresentation::full_history) spec.context_unit_cap = cfg_.budget / 2;
    if (cfg_.zero_shot) {
        spec.exemplars.push_back(zero_shot_formatting_example(*ont_).exemplar());
        spec.blank_lines_between_examples = 1;
    } else {
        RetrievalQuery q{turn_key(d.id, t),
                         truncate_front_to_units(render_context(spec.test, *ont_, kRetrieverMaxUnits), kRetrieverMaxUnits),
                         &d.gold_changes.at(t)};
        for (const auto& hit : retriever_->retrieve(q, cfg_.k_exemplars)) {
            const auto& rec = (*pool_)[hit.index];
            spec.exemplars.push_back({rec.context_text, rec.change});
        }
    }
    return build_prompt(spec);
}

std::string Tracker::completion_for(const StateChange& change) const {
    if (cfg_.format == PromptFormat::traditional) return " " + serialize_traditional(change);
    auto sql = serialize_change(change, *ont_, {cfg_.multi_domain_style, cfg_.use_display_names});
    constexpr std::string_view kHead = "SELECT * FROM";
    return sql.substr(kHead.size());
}

ParseResult Tracker::parse(std::string_view completion) const {
    return cfg_.format == PromptFormat::sql ? parse_completion(completion, *ont_) : parse_traditional(completion, *ont_);
}

DialogueRun Tracker::track(const DialogueRecord& d, const LmGateway& lm) const {
    DialogueRun run;
    DialogueState pred;
    DialogueState gold_prev;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
        TurnOutcome out;
        auto log = [&](std::string kind, std::string message) {
            out.errors.push_back({d.id, t, std::move(kind), std::move(message)});
        };
        const auto& base = cfg_.conditioning == Conditioning::gold_prev_state ? gold_prev : pred;
        auto& tr = out.trace;
        tr.dialogue_id = d.id;
        tr.turn = t;
        tr.gold_state = d.turns[t].state;
        tr.gold_change = d.gold_changes[t];

        std::optional<BuiltPrompt> prompt;
        try {
            prompt = prompt_for(d, t, base);
        } catch (const BudgetTooSmall& e) {
            log("BudgetTooSmall", e.what());
        }
        if (prompt) {
            auto req = default_request(std::move(prompt->text));
            req.max_completion_units = cfg_.max_completion_units;
            auto result = lm.complete(req);
            if (!result.ok()) {
                log(std::string(to_string(result.error->kind)), result.error->message);
            } else {
                tr.completion = result.text;
                auto parsed = parse(result.text);
                for (const auto& e : parsed.errors) log(std::string(to_string(e.kind)), e.describe());
                tr.pred_change = std::move(parsed.change);
            }
        }
        tr.pred_state = apply_change(base, tr.pred_change);
        pred = tr.pred_state;
        gold_prev = d.turns[t].state;
        run.turns.push_back(std::move(out));
    }
    return run;
}

EvalReport Tracker::run(const std::vector<DialogueRecord>& test, const LmGateway& lm) const {
    std::vector<DialogueRun> runs(test.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < test.size(); i = next++) {
            try {
                runs[i] = track(test[i], lm);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = test.size();
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        const std::size_t n = std::min(cfg_.parallel_dialogues, test.size());
        for (std::size_t i = 1; i < n; ++i) threads.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<TurnTrace> traces;
    std::vector<ErrorEntry> errors;
    for (auto& r : runs) {
        for (auto& o : r.turns) {
            traces.push_back(std::move(o.trace));
            for (auto& e : o.errors) errors.push_back(std::move(e));
        }
    }
    return score_traces(std::move(traces), *ont_, std::move(errors));
}

std::map<std::string, std::string, std::less<>> Tracker::gold_script(const std::vector<DialogueRecord>& test) const {
    std::map<std::string, std::string, std::less<>> out;
    for (const auto& d : test) {
        DialogueState prev;
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
            out[prompt_sha256(prompt_for(d, t, prev).text)] = completion_for(d.gold_changes[t]);
            prev = d.turns[t].state;
        }
    }
    return out;
}

DialogueRun track_dialogue(const DialogueRecord& d, const Tracker& tracker, const LmGateway& lm) {
    return tracker.track(d, lm);
}

EvalReport run_experiment(const std::vector<DialogueRecord>& test, const Tracker& tracker, const LmGateway& lm) {
    return tracker.run(test, lm);
}

MeanStdev mean_stdev(const std::vector<double>& xs) {
    MeanStdev m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return m;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return m;
}

std::map<std::string, MeanStdev> summarize(const std::vector<EvalReport>& runs) {
    std::map<std::string, std::vector<double>> cols;
    for (const auto& r : runs) {
        cols["jga_all"].push_back(r.jga_all);
        cols["change_jga"].push_back(r.change_jga);
        cols["slot_value_f1"].push_back(r.slot_value_f1);
        for (const auto& [domain, s] : r.jga_per_domain) cols["jga/" + domain].push_back(s.rate);
    }
    std::map<std::string, MeanStdev> out;
    for (const auto& [name, xs] : cols) out[name] = mean_stdev(xs);
    return out;
}

RepeatedReport run_repeated(const std::vector<DialogueRecord>& train, const std::vector<DialogueRecord>& test,
                            const Ontology& ont, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                            const LmGateway& lm) {
    if (seeds.empty()) throw ConfigError("run_repeated needs at least one seed");
    RepeatedReport out;
    const auto embedder = std::make_shared<HashingEmbedder>();
    for (auto seed : seeds) {
        RunConfig c = cfg;
        c.seed = seed;
        std::shared_ptr<const ExemplarPool> pool;
        std::shared_ptr<const Retriever> retriever;
        if (!c.zero_shot) {
            auto sampled = sample_pool(train, c.pool_fraction, seed, ont, c.representation);
            if (c.retriever_kind == RetrieverKind::embedding) sampled = embed_pool(sampled, *embedder);
            pool = std::make_shared<const ExemplarPool>(std::move(sampled));
            retriever = make_retriever(c.retriever_kind, pool, seed, embedder);
        }
        Tracker tracker(ont, c, pool, retriever);
        out.seeds.push_back(seed);
        out.runs.push_back(tracker.run(test, lm));
    }
    out.summary = summarize(out.runs);
    return out;
}

std::string repeated_to_json(const RepeatedReport& r) {
    json_util::ordered_json j;
    j["seeds"] = r.seeds;
    j["summary"] = json_util::ordered_json::object();
    for (const auto& [name, m] : r.summary) j["summary"][name] = {{"mean", m.mean}, {"stdev", m.stdev}};
    j["runs"] = json_util::ordered_json::array();
    for (const auto& run : r.runs) j["runs"].push_back(json_util::ordered_json::parse(report_to_json(run)));
    return j.dump(2) + "\n";
}

}  // namespace icdst
