// One line per acceptance criterion; exit status is the number of failures.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "icdst/codec.hpp"
#include "icdst/embedding.hpp"
#include "icdst/evaluation.hpp"
#include "icdst/lm_gateway.hpp"
#include "icdst/mining.hpp"
#include "icdst/bm25.hpp"
#include "icdst/pipeline.hpp"
#include "icdst/pool_io.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "test_paths.hpp"

#ifndef ICDST_CLI_PATH
#error "ICDST_CLI_PATH must be defined"
#endif

namespace {

using namespace icdst;
using namespace icdst::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 3) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << x;
    return s.str();
}

std::string strip_head(const std::string& sql) { return sql.substr(std::string("SELECT * FROM").size()); }

Outcome codec_round_trip() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    Rng rng(1);
    const auto t0 = Clock::now();
    std::size_t exact = 0, total = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = random_change(ont, rng, 6);
        for (auto style : {MultiDomainStyle::per_domain_statements, MultiDomainStyle::renamed_aliases}) {
            for (bool display : {false, true}) {
                auto parsed = parse_completion(serialize_change(c, ont, {style, display}), ont);
                exact += parsed.ok() && parsed.change == c;
                ++total;
            }
        }
        auto trad = parse_traditional(serialize_traditional(c), ont);
        exact += trad.ok() && trad.change == c;
        ++total;
    }
    const double secs = seconds_since(t0);
    return {exact == total && secs < 5.0,
            std::to_string(exact) + "/" + std::to_string(total) + " exact over 1000 changes, " + fmt(secs) + " s"};
}

Outcome appendix_completions() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    int hits = 0;
    auto a1 = parse_completion(" attraction WHERE name = cambridge artworks", ont);
    hits += a1.ok() && a1.change == StateChange{{{"attraction", "name"}, "cambridge artworks"}};
    auto a2 = parse_completion("SELECT * FROM hotel WHERE type = guest house AND area = west AND internet = no;", ont);
    hits += a2.ok() && a2.change == StateChange{{{"hotel", "type"}, "guest house"},
                                                {{"hotel", "area"}, "west"},
                                                {{"hotel", "internet"}, "no"}};
    auto a3 = parse_traditional(" restaurant-area: centre, restaurant-food: italian", ont);
    hits += a3.ok() && a3.change == StateChange{{{"restaurant", "area"}, "centre"}, {{"restaurant", "food"}, "italian"}};
    return {hits == 3, std::to_string(hits) + "/3 exact"};
}

Outcome prompt_fidelity() {
    const bool a1 = build_appendix_a1_prompt() == read_file(fixture("appendix_a1_prompt.txt"));
    const bool a2 = build_appendix_a2_prompt() == read_file(fixture("appendix_a2_prompt.txt"));
    return {a1 && a2, std::string("A.1 ") + (a1 ? "identical" : "differs") + ", A.2 " + (a2 ? "identical" : "differs")};
}

Outcome state_algebra() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    Rng rng(4);
    const auto t0 = Clock::now();
    std::size_t ok = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = random_state(ont, rng, 8);
        const auto b = random_state(ont, rng, 8);
        ok += apply_change(a, diff_states(a, b)) == b;
    }
    const double secs = seconds_since(t0);
    return {ok == 10000 && secs < 5.0, std::to_string(ok) + "/10000, " + fmt(secs) + " s"};
}

Outcome similarity_oracle() {
    const std::vector<SlotName> slots = {{"hotel", "area"}, {"hotel", "stars"}, {"taxi", "leaveat"}};
    const std::vector<std::string> values = {"v1", "v2"};
    std::vector<StateChange> all;
    for (int code = 0; code < 27; ++code) {
        StateChange c;
        int x = code;
        for (const auto& s : slots) {
            if (x % 3) c.set(s, values[x % 3 - 1]);
            x /= 3;
        }
        all.push_back(c);
    }
    double worst = 0.0;
    for (const auto& a : all) {
        for (const auto& b : all) worst = std::max(worst, std::abs(change_similarity(a, b) - change_similarity_oracle(a, b)));
    }
    return {worst <= 1e-12, "729 pairs, max |diff| " + std::to_string(worst)};
}

std::vector<std::string> ids_of(const std::vector<ScoredId>& hits) {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.id);
    return out;
}

std::vector<std::string> ids_of(const ExemplarPool& pool, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pool[i].id);
    return out;
}

Outcome retrieval_oracles() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    Rng rng(6);
    const std::vector<std::string> vocab = {"hotel", "cheap", "north", "taxi", "train", "the", "a", "museum", "centre"};
    int agree = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t n = 1 + rng.below(50);
        const std::size_t dim = 2 + rng.below(6);
        std::vector<ExemplarRecord> recs;
        std::vector<std::vector<double>> vecs;
        std::vector<std::string> docs;
        std::vector<StateChange> changes;
        for (std::size_t i = 0; i < n; ++i) {
            ExemplarRecord r;
            r.id = "r" + std::to_string(i);
            if (i > 0 && rng.below(4) == 0) {
                // Planted duplicate to exercise tie-breaking.
                const auto& src = recs[rng.below(i)];
                r.context_text = src.context_text;
                r.change = src.change;
                r.embedding = src.embedding;
            } else {
                const auto len = 1 + rng.below(8);
                for (std::size_t w = 0; w < len; ++w) r.context_text += (w ? " " : "") + vocab[rng.below(vocab.size())];
                r.change = random_change(ont, rng, 3, false);
                Embedding e(dim);
                do {
                    for (auto& x : e) x = static_cast<double>(static_cast<int>(rng.below(7)) - 3);
                } while (std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0; }));
                r.embedding = e;
            }
            vecs.push_back(*r.embedding);
            docs.push_back(r.context_text);
            changes.push_back(r.change);
            recs.push_back(std::move(r));
        }
        const ExemplarPool pool(std::move(recs));
        const std::size_t k = 1 + rng.below(n + 2);
        Embedding q(dim);
        do {
            for (auto& x : q) x = static_cast<double>(static_cast<int>(rng.below(7)) - 3);
        } while (std::all_of(q.begin(), q.end(), [](double x) { return x == 0.0; }));
        std::string qtext;
        for (int w = 0; w < 4; ++w) qtext += (w ? " " : "") + vocab[rng.below(vocab.size())];
        const auto gold = rng.below(3) == 0 ? changes[rng.below(n)] : random_change(ont, rng, 3, false);

        const bool knn_ok = ids_of(knn(pool, q, k)) == ids_of(pool, knn_oracle(vecs, q, k));
        const bool bm25_ok = ids_of(bm25_query(pool, qtext, k)) == ids_of(pool, rank_oracle(bm25_scores_oracle(docs, qtext), k));
        const bool oracle_ok = ids_of(oracle_retrieve(pool, gold, k)) == ids_of(pool, oracle_retrieve_oracle(changes, gold, k));
        agree += knn_ok && bm25_ok && oracle_ok;
    }
    return {agree == trials, std::to_string(agree) + "/" + std::to_string(trials) + " trials agree on knn, bm25 and oracle"};
}

Outcome mining_oracle_check() {
    // Two clusters of four in embedding space; labels cut across them.
    std::vector<ExemplarRecord> recs;
    const std::vector<Embedding> vecs = {{1, 0.1, 0}, {1, 0.2, 0}, {1, 0.3, 0.1}, {1, 0, 0.4},
                                         {0, 1, 0.1}, {0.1, 1, 0}, {0, 1, 0.3}, {0.2, 1, 0.2}};
    const std::vector<StateChange> labels = {
        {{{"hotel", "area"}, "north"}},
        {{{"hotel", "area"}, "north"}, {{"hotel", "stars"}, "4"}},
        {{{"hotel", "area"}, "south"}},
        {{{"taxi", "leaveat"}, "10:00"}},
        {{{"hotel", "area"}, "north"}},
        {},
        {{{"hotel", "area"}, "north"}, {{"hotel", "stars"}, "4"}},
        {{{"taxi", "leaveat"}, "10:00"}, {{"hotel", "area"}, "north"}},
    };
    for (std::size_t i = 0; i < vecs.size(); ++i) recs.push_back({"p" + std::to_string(i), "", labels[i], vecs[i]});
    const ExemplarPool small(std::move(recs));
    MiningConfig cfg;
    cfg.neighbor_frac = 0.5;
    cfg.select_frac = 0.25;
    const bool small_ok = mine_contrastive_pairs(small, cfg) == mining_oracle(small, 4, 2);

    const auto ont = load_ontology(multiwoz_ontology_path());
    auto dialogues = random_dialogues(ont, 40, 7, 5);
    std::vector<ExemplarRecord> big_recs;
    auto full = pool_from_dialogues(dialogues, ont);
    for (std::size_t i = 0; i < 100 && i < full.size(); ++i) big_recs.push_back(full[i]);
    const auto big = embed_pool(ExemplarPool(std::move(big_recs)), HashingEmbedder(64));
    const auto mined = mine_contrastive_pairs(big);
    bool counts_ok = big.size() == 100 && fraction_count(0.10, 99) == 10 && fraction_count(0.05, 99) == 5;
    for (const auto& e : mined.entries) counts_ok = counts_ok && e.positives.size() == 5 && e.negatives.size() == 5;
    const bool big_ok = mined == mining_oracle(big, 10, 5);
    return {small_ok && counts_ok && big_ok, std::string("8-record ") + (small_ok ? "matches" : "differs") +
                                                 ", N=100 counts " + (counts_ok ? "10/5/5" : "wrong") + ", N=100 " +
                                                 (big_ok ? "matches" : "differs")};
}

Outcome gold_echo() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    const auto test = random_dialogues(ont, 10, 80, 5, "test");
    const auto train = random_dialogues(ont, 40, 81, 5, "train");
    auto pool = std::make_shared<const ExemplarPool>(embed_pool(pool_from_dialogues(train, ont), HashingEmbedder()));
    RunConfig cfg;
    cfg.k_exemplars = 5;
    Tracker tracker(ont, cfg, pool, make_retriever(RetrieverKind::embedding, pool, 0, std::make_shared<HashingEmbedder>()));
    LmGateway lm(std::make_shared<ScriptedBackend>(tracker.gold_script(test)));
    const auto r = run_experiment(test, tracker, lm);
    return {r.n_dialogues == 10 && r.jga_all == 1.0 && r.change_jga == 1.0 && r.slot_value_f1 == 1.0,
            "JGA " + fmt(r.jga_all) + ", change-JGA " + fmt(r.change_jga) + ", F1 " + fmt(r.slot_value_f1) + " over " +
                std::to_string(r.n_turns) + " turns"};
}

Outcome copy_baseline_ordering() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    const auto split = planted_split(9);
    const auto base = pool_from_dialogues(split.pool, ont);
    auto pool = std::make_shared<const ExemplarPool>(embed_pool(base, HashingEmbedder()));
    auto score = [&](RetrieverKind kind) {
        auto retriever = make_retriever(kind, pool, 3, std::make_shared<HashingEmbedder>());
        return copy_baseline(*pool, *retriever, split.test, ont).jga_all;
    };
    const double random = score(RetrieverKind::random);
    const double embedding = score(RetrieverKind::embedding);
    const double oracle = score(RetrieverKind::oracle);
    return {pool->size() == 200 && random < embedding && embedding < oracle,
            "random " + fmt(random) + " < embedding " + fmt(embedding) + " < oracle " + fmt(oracle) + " (pool " +
                std::to_string(pool->size()) + " turns)"};
}

Outcome figure5_shape() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    const std::size_t turns = 6;
    const auto test = two_domain_dialogues(24, turns, 10);
    const auto train = two_domain_dialogues(20, turns, 11);
    auto pool = std::make_shared<const ExemplarPool>(pool_from_dialogues(train, ont));
    RunConfig cfg;
    cfg.retriever_kind = RetrieverKind::bm25;
    cfg.k_exemplars = 3;
    Tracker tracker(ont, cfg, pool, make_retriever(RetrieverKind::bm25, pool, 0));

    // Dialogue j goes wrong once, at turn j mod T, by inventing a taxi slot
    // that then persists in its own accumulated state.
    std::map<std::string, std::string, std::less<>> script;
    for (std::size_t j = 0; j < test.size(); ++j) {
        const auto& d = test[j];
        DialogueState pred;
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
            auto change = d.gold_changes[t];
            if (t == j % turns) change.set({"taxi", "destination"}, "planted error");
            script[prompt_sha256(tracker.prompt_for(d, t, pred).text)] = strip_head(serialize_change(change, ont));
            pred = apply_change(pred, change);
        }
    }
    LmGateway lm(std::make_shared<ScriptedBackend>(std::move(script)));
    const auto r = run_experiment(test, tracker, lm);
    bool flat = true, non_increasing = true;
    std::string curve;
    for (std::size_t i = 0; i < r.per_turn_index_jga.size(); ++i) {
        const auto& p = r.per_turn_index_jga[i];
        flat = flat && std::abs(p.change_jga - r.per_turn_index_jga[0].change_jga) < 1e-12;
        if (i) non_increasing = non_increasing && p.state_jga <= r.per_turn_index_jga[i - 1].state_jga;
        curve += (i ? " " : "") + fmt(p.state_jga, 2) + "/" + fmt(p.change_jga, 2);
    }
    const bool decays = r.per_turn_index_jga.back().state_jga < r.per_turn_index_jga.front().state_jga;
    return {r.error_log.empty() && r.per_turn_index_jga.size() == turns && flat && non_increasing && decays,
            "state/change JGA by turn: " + curve};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const auto ont_path = multiwoz_ontology_path();
    const auto ont = load_ontology(ont_path);
    const auto dir = fs::temp_directory_path() / ("icdst_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto train = random_dialogues(ont, 30, 110, 5, "train");
    const auto test = random_dialogues(ont, 8, 111, 5, "test");
    write_dialogues(train, dir / "train.jsonl");
    write_dialogues(test, dir / "test.jsonl");

    RunConfig cfg;
    cfg.pool_fraction = 0.5;
    cfg.seed = 7;
    cfg.k_exemplars = 4;
    auto pool = std::make_shared<const ExemplarPool>(
        embed_pool(sample_pool(train, cfg.pool_fraction, cfg.seed, ont), HashingEmbedder()));
    Tracker tracker(ont, cfg, pool, make_retriever(RetrieverKind::embedding, pool, cfg.seed, std::make_shared<HashingEmbedder>()));
    auto script = tracker.gold_script(test);
    // Drop some entries so the runs also log misses and diverge from gold.
    std::size_t i = 0;
    for (auto it = script.begin(); it != script.end();) it = (i++ % 5 == 0) ? script.erase(it) : std::next(it);
    write_script(script, dir / "script.jsonl");

    auto run = [&](const std::string& tag) {
        std::string cmd = std::string("\"") + ICDST_CLI_PATH + "\" run --ontology \"" + ont_path.string() + "\" --train \"" +
                          (dir / "train.jsonl").string() + "\" --test \"" + (dir / "test.jsonl").string() +
                          "\" --fraction 0.5 --seed 7 --k 4 --retriever embedding --backend scripted --script \"" +
                          (dir / "script.jsonl").string() + "\" --report \"" + (dir / (tag + ".json")).string() +
                          "\" --trace \"" + (dir / (tag + ".tsv")).string() + "\" > /dev/null";
        return std::system(cmd.c_str());
    };
    const int rc1 = run("a"), rc2 = run("b");
    bool same = false;
    std::size_t bytes = 0;
    std::string extra;
    if (rc1 == 0 && rc2 == 0) {
        const auto ra = read_file(dir / "a.json"), rb = read_file(dir / "b.json");
        same = ra == rb && read_file(dir / "a.tsv") == read_file(dir / "b.tsv");
        bytes = ra.size();
        extra = ", " + std::to_string(nlohmann::json::parse(ra)["error_log"].size()) + " logged turn errors";
    }
    fs::remove_all(dir);
    return {same, "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) + ", reports " +
                      (same ? "bit-identical" : "differ") + " (" + std::to_string(bytes) + " bytes" + extra + ")"};
}

Outcome pool_arithmetic() {
    const auto ont = load_ontology(multiwoz_ontology_path());
    std::vector<DialogueRecord> ds;
    ds.reserve(8438);
    for (std::size_t i = 0; i < 8438; ++i) {
        DialogueRecord d;
        d.id = "d" + std::to_string(i);
        d.turns.push_back({"", "hello", {}});
        derive_gold_changes(d);
        ds.push_back(std::move(d));
    }
    auto dialogue_ids = [](const ExemplarPool& p) {
        std::set<std::string> ids;
        for (const auto& r : p.records()) ids.insert(r.id.substr(0, r.id.find('/')));
        return ids;
    };
    const auto a = dialogue_ids(sample_pool(ds, 0.01, 42, ont));
    const auto b = dialogue_ids(sample_pool(ds, 0.01, 42, ont));
    const auto c = dialogue_ids(sample_pool(ds, 0.01, 43, ont));
    return {a.size() == 85 && a == b, std::to_string(a.size()) + " dialogues, same seed " +
                                          (a == b ? "identical" : "differs") + ", other seed " +
                                          (a == c ? "identical" : "differs")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"codec round-trip", codec_round_trip},
        {"appendix completions parse", appendix_completions},
        {"prompt byte-fidelity", prompt_fidelity},
        {"state algebra", state_algebra},
        {"similarity oracle", similarity_oracle},
        {"retrieval oracles", retrieval_oracles},
        {"pair-mining oracle", mining_oracle_check},
        {"end-to-end gold echo", gold_echo},
        {"copy-baseline ordering", copy_baseline_ordering},
        {"turn-index curve shape", figure5_shape},
        {"run determinism", determinism},
        {"pool arithmetic", pool_arithmetic},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s  %2zu  %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
