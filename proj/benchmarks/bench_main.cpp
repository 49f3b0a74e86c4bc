#include <benchmark/benchmark.h>

#include <memory>
#include <string>
#include <vector>

#include "icdst/bm25.hpp"
#include "icdst/codec.hpp"
#include "icdst/embedding.hpp"
#include "icdst/mining.hpp"
#include "icdst/ontology.hpp"
#include "icdst/prompt.hpp"
#include "icdst/retrieval.hpp"
#include "icdst/rng.hpp"

namespace {

using namespace icdst;

const Ontology& ontology() {
    static const Ontology ont = load_ontology(ICDST_BENCH_ONTOLOGY);
    return ont;
}

StateChange random_change(Rng& rng, std::size_t max_slots) {
    const auto slots = ontology().all_slots();
    StateChange c;
    const auto n = 1 + rng.below(max_slots);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto* s = slots[rng.below(slots.size())];
        const std::string value = s->values.empty() ? "v" + std::to_string(rng.below(50)) : s->values[rng.below(s->values.size())];
        c.set(s->slot_name(), value);
    }
    return c;
}

std::string random_text(Rng& rng, std::size_t words) {
    static const std::vector<std::string> vocab{"i", "need", "a", "cheap", "hotel", "in", "the", "west", "train", "to",
                                                "cambridge", "on", "monday", "please", "book", "for", "two", "people",
                                                "restaurant", "serving", "italian", "food", "taxi", "from", "centre"};
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng.below(vocab.size())];
    }
    return out;
}

ExemplarPool text_pool(std::size_t n) {
    Rng rng(7);
    std::vector<ExemplarRecord> recs;
    recs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        recs.push_back({"p" + std::to_string(i), random_text(rng, 30), random_change(rng, 3), std::nullopt});
    }
    return ExemplarPool(std::move(recs));
}

void BM_SerializeChange(benchmark::State& state) {
    Rng rng(1);
    std::vector<StateChange> changes;
    for (int i = 0; i < 256; ++i) changes.push_back(random_change(rng, 6));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(serialize_change(changes[i++ % changes.size()], ontology()));
}
BENCHMARK(BM_SerializeChange);

void BM_ParseCompletion(benchmark::State& state) {
    Rng rng(2);
    std::vector<std::string> texts;
    for (int i = 0; i < 256; ++i) texts.push_back(serialize_change(random_change(rng, 6), ontology()));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(parse_completion(texts[i++ % texts.size()], ontology()));
}
BENCHMARK(BM_ParseCompletion);

void BM_ChangeSimilarity(benchmark::State& state) {
    Rng rng(3);
    const auto a = random_change(rng, 6);
    const auto b = random_change(rng, 6);
    for (auto _ : state) benchmark::DoNotOptimize(change_similarity(a, b));
}
BENCHMARK(BM_ChangeSimilarity);

void BM_KnnEmbedding(benchmark::State& state) {
    const HashingEmbedder embedder(256);
    const auto pool = embed_pool(text_pool(static_cast<std::size_t>(state.range(0))), embedder);
    const auto query = embedder.embed("cheap hotel in the west for two people");
    for (auto _ : state) benchmark::DoNotOptimize(knn(pool, query, 10));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnEmbedding)->Arg(1000)->Arg(10000);

void BM_Bm25Query(benchmark::State& state) {
    const auto pool = text_pool(static_cast<std::size_t>(state.range(0)));
    const Bm25Index index(pool);
    for (auto _ : state) benchmark::DoNotOptimize(index.query("cheap hotel in the west for two people", 10));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Query)->Arg(1000)->Arg(10000);

void BM_OracleRetrieve(benchmark::State& state) {
    const auto pool = text_pool(static_cast<std::size_t>(state.range(0)));
    Rng rng(4);
    const auto gold = random_change(rng, 3);
    for (auto _ : state) benchmark::DoNotOptimize(oracle_retrieve(pool, gold, 10));
}
BENCHMARK(BM_OracleRetrieve)->Arg(1000);

void BM_MinePairs(benchmark::State& state) {
    const auto pool = embed_pool(text_pool(static_cast<std::size_t>(state.range(0))), HashingEmbedder(64));
    for (auto _ : state) benchmark::DoNotOptimize(mine_contrastive_pairs(pool));
}
BENCHMARK(BM_MinePairs)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_BuildPrompt(benchmark::State& state) {
    const auto pool = text_pool(10);
    PromptSpec spec;
    spec.ontology = &ontology();
    spec.schema_text = render_schema_sql(ontology());
    spec.instruction = std::string(kSqlInstruction);
    for (const auto& r : pool.records()) spec.exemplars.push_back({r.context_text, r.change});
    spec.test.user_utt = "i need a cheap hotel in the west";
    for (auto _ : state) benchmark::DoNotOptimize(build_prompt(spec));
}
BENCHMARK(BM_BuildPrompt);

}  // namespace
BENCHMARK_MAIN();
