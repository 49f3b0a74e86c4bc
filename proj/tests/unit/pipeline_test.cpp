#include <gtest/gtest.h>

#include <memory>

#include "fixtures.hpp"
#include "icdst/embedding.hpp"
#include "icdst/pipeline.hpp"
#include "synthetic.hpp"
#include "test_paths.hpp"

namespace icdst {

void PrintTo(const RunConfig& c, std::ostream* os) {
    *os << to_string(c.format) << "/" << to_string(c.representation) << "/" << to_string(c.conditioning);
}

namespace {

using testing::fixture;

const Ontology& multiwoz() {
    static const Ontology ont = load_ontology(testing::multiwoz_ontology_path());
    return ont;
}

struct Corpus {
    std::vector<DialogueRecord> train = testing::random_dialogues(multiwoz(), 30, 101, 4, "train");
    std::vector<DialogueRecord> test = testing::random_dialogues(multiwoz(), 8, 202, 5, "test");
    std::shared_ptr<const ExemplarPool> pool = std::make_shared<const ExemplarPool>(pool_from_dialogues(train, multiwoz()));

    Tracker tracker(RunConfig cfg = {}) const {
        cfg.k_exemplars = 4;
        return Tracker(multiwoz(), cfg, pool, make_retriever(RetrieverKind::bm25, pool, cfg.seed));
    }
};

LmGateway gateway(std::shared_ptr<const CompletionBackend> b) { return LmGateway(std::move(b), 4); }

LmGateway scripted(const Tracker& t, const std::vector<DialogueRecord>& test) {
    return gateway(std::make_shared<ScriptedBackend>(t.gold_script(test)));
}

std::size_t total_turns(const std::vector<DialogueRecord>& ds) {
    std::size_t n = 0;
    for (const auto& d : ds) n += d.turns.size();
    return n;
}

TEST(RunConfig, Validation) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.pool_fraction = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.k_exemplars = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.zero_shot = true;
    EXPECT_NO_THROW(cfg.validate());
    cfg = {};
    cfg.parallel_dialogues = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunConfig, EnumNamesRoundTrip) {
    for (auto k : {RetrieverKind::embedding, RetrieverKind::bm25, RetrieverKind::random, RetrieverKind::oracle}) {
        EXPECT_EQ(parse_retriever_kind(to_string(k)), k);
    }
    for (auto r : {ContextRepresentation::prev_state_plus_turn, ContextRepresentation::full_history,
                   ContextRepresentation::single_turn}) {
        EXPECT_EQ(parse_representation(to_string(r)), r);
    }
    EXPECT_EQ(parse_format(to_string(PromptFormat::traditional)), PromptFormat::traditional);
    EXPECT_EQ(parse_conditioning(to_string(Conditioning::gold_prev_state)), Conditioning::gold_prev_state);
    EXPECT_EQ(parse_multi_domain_style(to_string(MultiDomainStyle::renamed_aliases)), MultiDomainStyle::renamed_aliases);
    EXPECT_EQ(parse_exemplar_order(to_string(ExemplarOrder::most_similar_first)), ExemplarOrder::most_similar_first);
    EXPECT_THROW(parse_retriever_kind("dense"), ConfigError);
    EXPECT_THROW(parse_format("json"), ConfigError);
}

TEST(MakeRetriever, EmbeddingNeedsEncoderAndVectors) {
    Corpus s;
    EXPECT_THROW(make_retriever(RetrieverKind::embedding, s.pool, 0), ConfigError);
    EXPECT_THROW(make_retriever(RetrieverKind::embedding, s.pool, 0, std::make_shared<HashingEmbedder>()), ConfigError);
    EXPECT_THROW(make_retriever(RetrieverKind::bm25, nullptr, 0), ConfigError);
    for (auto k : {RetrieverKind::bm25, RetrieverKind::random, RetrieverKind::oracle}) {
        EXPECT_EQ(make_retriever(k, s.pool, 0)->name(), to_string(k));
    }
}

TEST(Tracker, FewShotNeedsPoolAndRetriever) {
    EXPECT_THROW(Tracker(multiwoz(), RunConfig{}, nullptr, nullptr), ConfigError);
    RunConfig zs;
    zs.zero_shot = true;
    EXPECT_NO_THROW(Tracker(multiwoz(), zs, nullptr, nullptr));
}

class GoldEcho : public ::testing::TestWithParam<RunConfig> {};

TEST_P(GoldEcho, ReproducesGoldExactly) {
    Corpus s;
    const auto tracker = s.tracker(GetParam());
    const auto report = run_experiment(s.test, tracker, scripted(tracker, s.test));
    EXPECT_TRUE(report.error_log.empty()) << report.error_log.front().kind << ": " << report.error_log.front().message;
    EXPECT_EQ(report.jga_all, 1.0);
    EXPECT_EQ(report.change_jga, 1.0);
    EXPECT_EQ(report.slot_value_f1, 1.0);
    EXPECT_EQ(report.n_turns, total_turns(s.test));
    EXPECT_EQ(report.n_dialogues, s.test.size());
}

RunConfig variant(void (*edit)(RunConfig&)) {
    RunConfig c;
    edit(c);
    return c;
}

std::string variant_name(const ::testing::TestParamInfo<RunConfig>& info) {
    static const char* names[] = {"Default",    "Traditional", "Aliases",      "DisplayNames", "FullHistory",
                                  "SingleTurn", "GoldPrev",    "SimilarFirst", "ZeroShot"};
    return names[info.index];
}

INSTANTIATE_TEST_SUITE_P(
    Variants, GoldEcho,
    ::testing::Values(RunConfig{}, variant([](RunConfig& c) { c.format = PromptFormat::traditional; }),
                      variant([](RunConfig& c) { c.multi_domain_style = MultiDomainStyle::renamed_aliases; }),
                      variant([](RunConfig& c) { c.use_display_names = true; }),
                      variant([](RunConfig& c) { c.representation = ContextRepresentation::full_history; }),
                      variant([](RunConfig& c) { c.representation = ContextRepresentation::single_turn; }),
                      variant([](RunConfig& c) { c.conditioning = Conditioning::gold_prev_state; }),
                      variant([](RunConfig& c) { c.exemplar_order = ExemplarOrder::most_similar_first; }),
                      variant([](RunConfig& c) { c.zero_shot = true; })),
    variant_name);

TEST(Tracker, GarbageCompletionsLeaveStatesEmpty) {
    Corpus s;
    const auto tracker = s.tracker();
    const auto report = run_experiment(s.test, tracker, gateway(std::make_shared<EchoBackend>("%% not sql at all")));
    std::size_t empty_gold = 0;
    for (const auto& d : s.test) {
        for (const auto& t : d.turns) empty_gold += t.state.empty();
    }
    for (const auto& t : report.turns) EXPECT_TRUE(t.pred_state.empty());
    EXPECT_DOUBLE_EQ(report.jga_all, static_cast<double>(empty_gold) / static_cast<double>(total_turns(s.test)));
    EXPECT_EQ(report.error_log.size(), total_turns(s.test));
    EXPECT_EQ(report.error_log.front().kind, "MalformedSql");
}

// Script with the gold completion of one chosen turn replaced by garbage.
std::pair<LmGateway, std::size_t> script_with_one_error(const Tracker& tracker, const DialogueRecord& d) {
    auto script = tracker.gold_script({d});
    std::size_t bad = 0;
    while (d.gold_changes[bad].empty()) ++bad;
    DialogueState prev = bad ? d.turns[bad - 1].state : DialogueState{};
    script[prompt_sha256(tracker.prompt_for(d, bad, prev).text)] = " none WHERE oops";
    return {gateway(std::make_shared<ScriptedBackend>(script)), bad};
}

TEST(Tracker, GoldConditioningIsolatesErrors) {
    Corpus s;
    RunConfig cfg;
    cfg.conditioning = Conditioning::gold_prev_state;
    const auto tracker = s.tracker(cfg);
    const auto& d = s.test[0];
    auto [lm, bad] = script_with_one_error(tracker, d);
    const auto run = track_dialogue(d, tracker, lm);
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
        EXPECT_EQ(run.turns[t].trace.change_correct(), t != bad) << t;
        EXPECT_EQ(run.turns[t].trace.state_correct(), t != bad) << t;
    }
}

TEST(Tracker, PredictedConditioningCarriesErrorsForward) {
    Corpus s;
    const auto tracker = s.tracker();
    const auto& d = s.test[0];
    auto [lm, bad] = script_with_one_error(tracker, d);
    const auto run = track_dialogue(d, tracker, lm);
    for (std::size_t t = 0; t < bad; ++t) EXPECT_TRUE(run.turns[t].trace.state_correct()) << t;
    for (std::size_t t = bad; t < d.turns.size(); ++t) EXPECT_FALSE(run.turns[t].trace.state_correct()) << t;
}

// Completions chosen by prompt hash, so any change to the prompt shows up.
class HashPicker final : public CompletionBackend {
public:
    CompletionResult complete(const CompletionRequest& req) const override {
        static const char* options[] = {" hotel WHERE area = west", " taxi WHERE leaveat = 10:00",
                                        " restaurant WHERE food = thai", " none"};
        return {options[prompt_sha256(req.prompt)[0] % 4], FinishReason::stop, 0, std::nullopt};
    }
    std::string_view name() const noexcept override { return "hash"; }
};

TEST(Tracker, NoLookahead) {
    Corpus s;
    const auto tracker = s.tracker();
    const auto lm = gateway(std::make_shared<HashPicker>());
    for (const auto& d : s.test) {
        if (d.turns.size() < 3) continue;
        const auto base = track_dialogue(d, tracker, lm);
        for (std::size_t cut = 1; cut < d.turns.size(); ++cut) {
            auto changed = d;
            for (std::size_t t = cut; t < changed.turns.size(); ++t) {
                changed.turns[t].user = "something else entirely " + std::to_string(t);
                changed.turns[t].system = "different";
                changed.turns[t].state = DialogueState{{{"train", "day"}, "sunday"}};
            }
            derive_gold_changes(changed);
            const auto run = track_dialogue(changed, tracker, lm);
            for (std::size_t t = 0; t < cut; ++t) {
                ASSERT_EQ(run.turns[t].trace.completion, base.turns[t].trace.completion);
                ASSERT_EQ(run.turns[t].trace.pred_state, base.turns[t].trace.pred_state);
            }
        }
    }
}

TEST(Tracker, ZeroDialoguesIsVacuous) {
    Corpus s;
    const auto report = run_experiment({}, s.tracker(), gateway(std::make_shared<EchoBackend>("x")));
    EXPECT_TRUE(report.vacuous);
    EXPECT_EQ(report.n_turns, 0u);
    EXPECT_EQ(report.jga_all, 1.0);
}

TEST(Tracker, BudgetTooSmallIsLoggedPerTurn) {
    Corpus s;
    RunConfig cfg;
    cfg.budget = 50;
    const auto report = run_experiment(s.test, s.tracker(cfg), gateway(std::make_shared<EchoBackend>(" none")));
    EXPECT_EQ(report.error_log.size(), total_turns(s.test));
    for (const auto& e : report.error_log) EXPECT_EQ(e.kind, "BudgetTooSmall");
}

TEST(Tracker, ScriptedMissIsLogged) {
    Corpus s;
    const auto report = run_experiment(s.test, s.tracker(), gateway(std::make_shared<ScriptedBackend>(
                                                                  std::map<std::string, std::string, std::less<>>{})));
    EXPECT_EQ(report.error_log.size(), total_turns(s.test));
    EXPECT_EQ(report.error_log.front().kind, "ScriptedMiss");
}

TEST(Tracker, ParallelismDoesNotChangeResults) {
    Corpus s;
    RunConfig one;
    one.parallel_dialogues = 1;
    RunConfig many;
    many.parallel_dialogues = 8;
    const auto lm = gateway(std::make_shared<HashPicker>());
    const auto a = run_experiment(s.test, s.tracker(one), lm);
    const auto b = run_experiment(s.test, s.tracker(many), lm);
    EXPECT_EQ(a, b);
    EXPECT_EQ(report_to_json(a), report_to_json(b));
}

TEST(Tracker, ZeroShotPromptMatchesFixture) {
    RunConfig cfg;
    cfg.zero_shot = true;
    cfg.use_display_names = true;
    const Tracker tracker(multiwoz(), cfg, nullptr, nullptr);
    const auto ctx = testing::load_test_turn(fixture("appendix_a2_test_turn.json"));
    DialogueRecord d{"a2", {{ctx.system_utt, ctx.user_utt, ctx.prev_state}}, {}};
    derive_gold_changes(d);
    EXPECT_EQ(tracker.prompt_for(d, 0, ctx.prev_state).text, testing::read_file(fixture("appendix_a2_prompt.txt")));
}

TEST(Tracker, FewShotPromptUsesRetrievedLabels) {
    Corpus s;
    RunConfig cfg;
    cfg.retriever_kind = RetrieverKind::oracle;
    cfg.k_exemplars = 3;
    const Tracker tracker(multiwoz(), cfg, s.pool, make_retriever(RetrieverKind::oracle, s.pool, 0));
    const auto& d = s.test[1];
    const auto p = tracker.prompt_for(d, 0, {});
    EXPECT_EQ(p.exemplars_used, 3u);
    // Most similar exemplar sits right before the test block.
    const auto best = (*s.pool)[oracle_retrieve(*s.pool, d.gold_changes[0], 1)[0].index];
    const auto at = p.text.find("Example #3\n" + best.context_text);
    EXPECT_NE(at, std::string::npos);
}

TEST(MeanStdev, SampleDeviation) {
    const auto m = mean_stdev({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(m.mean, 2.0);
    EXPECT_DOUBLE_EQ(m.stdev, 1.0);
    EXPECT_DOUBLE_EQ(mean_stdev({0.5}).stdev, 0.0);
    EXPECT_DOUBLE_EQ(mean_stdev({}).mean, 0.0);
}

TEST(RunRepeated, ThreeSeedsGiveMeanAndStdevRows) {
    Corpus s;
    RunConfig cfg;
    cfg.pool_fraction = 0.5;
    cfg.k_exemplars = 3;
    const auto lm = gateway(std::make_shared<HashPicker>());
    const auto rep = run_repeated(s.train, s.test, multiwoz(), cfg, {1, 2, 3}, lm);
    ASSERT_EQ(rep.runs.size(), 3u);
    for (const char* key : {"jga_all", "change_jga", "slot_value_f1", "jga/hotel", "jga/taxi"}) {
        ASSERT_TRUE(rep.summary.contains(key)) << key;
    }
    std::vector<double> jgas;
    for (const auto& r : rep.runs) jgas.push_back(r.jga_all);
    EXPECT_DOUBLE_EQ(rep.summary.at("jga_all").mean, mean_stdev(jgas).mean);
    EXPECT_DOUBLE_EQ(rep.summary.at("jga_all").stdev, mean_stdev(jgas).stdev);
    const auto json = repeated_to_json(rep);
    EXPECT_NE(json.find("\"summary\""), std::string::npos);
    EXPECT_EQ(json, repeated_to_json(run_repeated(s.train, s.test, multiwoz(), cfg, {1, 2, 3}, lm)));
    EXPECT_THROW(run_repeated(s.train, s.test, multiwoz(), cfg, {}, lm), ConfigError);
}

}  // namespace
}  // namespace icdst
