#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icdst/bm25.hpp"
#include "icdst/dialogue.hpp"
#include "icdst/embedding.hpp"
#include "icdst/evaluation.hpp"
#include "icdst/lm_gateway.hpp"
#include "icdst/mining.hpp"
#include "icdst/pipeline.hpp"
#include "icdst/pool_io.hpp"

namespace {

using namespace icdst;

// Options shared by the subcommands that need a pool and a retriever.
struct SetupOpts {
    std::string ontology;
    std::string pool;
    std::string train;
    std::string query_embeddings;
    std::size_t embed_dim = 256;
};

struct RunOpts {
    SetupOpts setup;
    std::string test;
    std::string retriever = "embedding";
    std::string format = "sql";
    std::string representation = "state";
    std::string conditioning = "predicted";
    std::string multi_domain = "statements";
    std::string order = "similar-last";
    std::string backend = "scripted";
    std::string script;
    std::string echo_text;
    std::string report = "report.json";
    std::string trace;
    std::string output;
    std::vector<std::uint64_t> repeat_seeds;
    std::size_t max_in_flight = 4;
    RunConfig cfg;
};

void add_setup(CLI::App* cmd, SetupOpts& o, bool need_ontology = true) {
    auto* ont = cmd->add_option("--ontology", o.ontology, "Ontology JSON")->check(CLI::ExistingFile);
    if (need_ontology) ont->required();
    cmd->add_option("--pool", o.pool, "Pool JSONL (as written by sample-pool)")->check(CLI::ExistingFile);
    cmd->add_option("--train", o.train, "Training dialogues to sample the pool from")->check(CLI::ExistingFile);
    cmd->add_option("--query-embeddings", o.query_embeddings, "Precomputed query vectors keyed by dialogue/turn")
        ->check(CLI::ExistingFile);
    cmd->add_option("--embed-dim", o.embed_dim, "Hashing embedder width")->capture_default_str();
}

void add_run_config(CLI::App* cmd, RunOpts& o) {
    cmd->add_option("--test", o.test, "Test dialogues")->required()->check(CLI::ExistingFile);
    cmd->add_option("--retriever", o.retriever, "embedding|bm25|random|oracle")->capture_default_str();
    cmd->add_option("--k", o.cfg.k_exemplars, "Exemplars per prompt")->capture_default_str();
    cmd->add_option("--format", o.format, "sql|traditional")->capture_default_str();
    cmd->add_option("--representation", o.representation, "state|history|turn")->capture_default_str();
    cmd->add_option("--conditioning", o.conditioning, "predicted|gold")->capture_default_str();
    cmd->add_option("--multi-domain", o.multi_domain, "statements|aliases")->capture_default_str();
    cmd->add_option("--order", o.order, "similar-last|similar-first")->capture_default_str();
    cmd->add_flag("--display-names", o.cfg.use_display_names, "Use display column names");
    cmd->add_option("--budget", o.cfg.budget, "Prompt length budget in units")->capture_default_str();
    cmd->add_option("--fraction", o.cfg.pool_fraction, "Pool fraction when sampling from --train")->capture_default_str();
    cmd->add_option("--seed", o.cfg.seed, "Pool and retrieval seed")->capture_default_str();
    cmd->add_flag("--zero-shot", o.cfg.zero_shot, "Schema plus one formatting example");
    cmd->add_option("--parallel", o.cfg.parallel_dialogues, "Dialogues tracked at once")->capture_default_str();
}

void add_backend(CLI::App* cmd, RunOpts& o) {
    cmd->add_option("--backend", o.backend, "scripted|http|echo")->capture_default_str();
    cmd->add_option("--script", o.script, "Scripted completions JSONL")->check(CLI::ExistingFile);
    cmd->add_option("--echo-text", o.echo_text, "Constant completion for the echo backend");
    cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent LM requests")->capture_default_str();
    cmd->add_option("--max-completion", o.cfg.max_completion_units, "Completion length limit")->capture_default_str();
}

void resolve_config(RunOpts& o) {
    o.cfg.retriever_kind = parse_retriever_kind(o.retriever);
    o.cfg.format = parse_format(o.format);
    o.cfg.representation = parse_representation(o.representation);
    o.cfg.conditioning = parse_conditioning(o.conditioning);
    o.cfg.multi_domain_style = parse_multi_domain_style(o.multi_domain);
    o.cfg.exemplar_order = parse_exemplar_order(o.order);
    o.cfg.validate();
}

struct Components {
    std::shared_ptr<const ExemplarPool> pool;
    std::shared_ptr<const Retriever> retriever;
};

Components build_components(const SetupOpts& s, const Ontology& ont, RetrieverKind kind, const RunConfig& cfg) {
    Components c;
    ExemplarPool pool;
    if (!s.pool.empty()) {
        pool = read_pool(s.pool);
    } else if (!s.train.empty()) {
        pool = sample_pool(load_dialogues(s.train, &ont), cfg.pool_fraction, cfg.seed, ont, cfg.representation);
    } else {
        throw ConfigError("give --pool or --train");
    }
    std::shared_ptr<const QueryEncoder> encoder;
    if (kind == RetrieverKind::embedding) {
        if (!s.query_embeddings.empty()) {
            if (!pool.has_embeddings()) throw ConfigError("--query-embeddings needs a pool with vectors");
            encoder = std::make_shared<PrecomputedEncoder>(read_embeddings(s.query_embeddings));
        } else {
            auto embedder = std::make_shared<HashingEmbedder>(s.embed_dim);
            if (pool.has_embeddings() && pool.embedding_dim() != embedder->dim()) {
                throw ConfigError("pool vectors come from another encoder; pass --query-embeddings");
            }
            if (!pool.has_embeddings()) pool = embed_pool(pool, *embedder);
            encoder = embedder;
        }
    }
    c.pool = std::make_shared<const ExemplarPool>(std::move(pool));
    c.retriever = make_retriever(kind, c.pool, cfg.seed, encoder);
    return c;
}

std::shared_ptr<const CompletionBackend> make_backend(const RunOpts& o) {
    if (o.backend == "scripted") {
        if (o.script.empty()) throw ConfigError("the scripted backend needs --script");
        return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(o.script));
    }
    if (o.backend == "echo") return std::make_shared<EchoBackend>(o.echo_text);
    if (o.backend == "http") return std::make_shared<HttpBackend>(HttpConfig{}.with_env());
    throw ConfigError("unknown backend '" + o.backend + "'");
}

void print_summary(const EvalReport& r) {
    std::cout << "dialogues " << r.n_dialogues << ", turns " << r.n_turns << "\n"
              << "jga " << r.jga_all << "\nchange_jga " << r.change_jga << "\nslot_value_f1 " << r.slot_value_f1
              << "\n";
    for (const auto& [domain, s] : r.jga_per_domain) std::cout << "jga/" << domain << " " << s.rate << " (" << s.count << ")\n";
    if (!r.error_log.empty()) std::cout << "errors " << r.error_log.size() << "\n";
}

const DialogueRecord& find_dialogue(const std::vector<DialogueRecord>& ds, const std::string& id) {
    for (const auto& d : ds) {
        if (d.id == id) return d;
    }
    throw ConfigError("no dialogue with id " + id);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"In-context dialogue state tracking toolkit"};
    app.set_config("--config", "", "TOML/INI file setting any option");
    app.require_subcommand(1);

    // ingest
    std::string in_path, out_path, ont_path;
    auto* ingest = app.add_subcommand("ingest", "Validate and normalize a dialogue file");
    ingest->add_option("--input", in_path)->required()->check(CLI::ExistingFile);
    ingest->add_option("--ontology", ont_path)->check(CLI::ExistingFile);
    ingest->add_option("--output", out_path, "Normalized copy");

    // sample-pool
    RunOpts sp;
    auto* sample = app.add_subcommand("sample-pool", "Sample whole dialogues into an exemplar pool");
    sample->add_option("--dialogues", in_path)->required()->check(CLI::ExistingFile);
    sample->add_option("--ontology", ont_path)->required()->check(CLI::ExistingFile);
    sample->add_option("--fraction", sp.cfg.pool_fraction)->capture_default_str();
    sample->add_option("--seed", sp.cfg.seed)->capture_default_str();
    sample->add_option("--representation", sp.representation)->capture_default_str();
    sample->add_option("--output", out_path)->required();

    // embed / embed-import
    std::string pool_path, vec_path;
    std::size_t dim = 256;
    auto* embed = app.add_subcommand("embed", "Attach hashing-embedder vectors to a pool");
    embed->add_option("--pool", pool_path)->required()->check(CLI::ExistingFile);
    embed->add_option("--dim", dim)->capture_default_str();
    embed->add_option("--output", out_path)->required();
    auto* embed_import = app.add_subcommand("embed-import", "Attach externally computed vectors to a pool");
    embed_import->add_option("--pool", pool_path)->required()->check(CLI::ExistingFile);
    embed_import->add_option("--embeddings", vec_path, "JSONL {id, vector}")->required()->check(CLI::ExistingFile);
    embed_import->add_option("--output", out_path)->required();

    // mine-pairs / export-pairs
    MiningConfig mining;
    std::string pairs_path;
    auto* mine = app.add_subcommand("mine-pairs", "Mine positive and negative exemplars for retriever training");
    mine->add_option("--pool", pool_path, "Embedded pool")->required()->check(CLI::ExistingFile);
    mine->add_option("--neighbor-frac", mining.neighbor_frac)->capture_default_str();
    mine->add_option("--select-frac", mining.select_frac)->capture_default_str();
    mine->add_option("--neighbors", mining.neighbor_count, "Absolute neighbor count");
    mine->add_option("--select", mining.select_count, "Absolute positive/negative count");
    mine->add_option("--output", out_path)->required();
    auto* export_cmd = app.add_subcommand("export-pairs", "Flatten mined pairs to anchor/other/label TSV");
    export_cmd->add_option("--pool", pool_path)->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--pairs", pairs_path)->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--output", out_path)->required();

    // retrieve
    RunOpts rt;
    std::string dialogue_id, query_text;
    std::size_t turn = 0;
    auto* retrieve = app.add_subcommand("retrieve", "Show the exemplars retrieved for a turn or a query text");
    add_setup(retrieve, rt.setup);
    retrieve->add_option("--retriever", rt.retriever)->capture_default_str();
    retrieve->add_option("--k", rt.cfg.k_exemplars)->capture_default_str();
    retrieve->add_option("--seed", rt.cfg.seed)->capture_default_str();
    retrieve->add_option("--fraction", rt.cfg.pool_fraction)->capture_default_str();
    retrieve->add_option("--dialogues", rt.test, "Dialogue file holding the query turn")->check(CLI::ExistingFile);
    retrieve->add_option("--dialogue-id", dialogue_id);
    retrieve->add_option("--turn", turn);
    retrieve->add_option("--query", query_text, "Raw context text to query with");

    // prompt
    RunOpts pr;
    auto* prompt = app.add_subcommand("prompt", "Print the prompt for one turn");
    add_setup(prompt, pr.setup);
    add_run_config(prompt, pr);
    prompt->add_option("--dialogue-id", dialogue_id)->required();
    prompt->add_option("--turn", turn)->required();

    // run
    RunOpts rn;
    auto* run = app.add_subcommand("run", "Track every test dialogue and score it");
    add_setup(run, rn.setup);
    add_run_config(run, rn);
    add_backend(run, rn);
    run->add_option("--report", rn.report)->capture_default_str();
    run->add_option("--trace", rn.trace, "Per-turn TSV");
    run->add_option("--repeat-seeds", rn.repeat_seeds, "Pool seeds for a repeated run (needs --train)");

    // score
    std::string trace_path, report_path;
    auto* score = app.add_subcommand("score", "Re-score a saved per-turn trace");
    score->add_option("--trace", trace_path)->required()->check(CLI::ExistingFile);
    score->add_option("--ontology", ont_path)->required()->check(CLI::ExistingFile);
    score->add_option("--report", report_path);

    // copy-baseline
    RunOpts cb;
    auto* copy = app.add_subcommand("copy-baseline", "Predict each turn by copying the top exemplar's label");
    add_setup(copy, cb.setup);
    add_run_config(copy, cb);
    copy->add_option("--report", cb.report)->capture_default_str();
    copy->add_option("--trace", cb.trace);

    // make-gold-script
    RunOpts gs;
    auto* gold = app.add_subcommand("make-gold-script", "Write scripted completions that echo the gold labels");
    add_setup(gold, gs.setup);
    add_run_config(gold, gs);
    gold->add_option("--output", gs.output)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            std::optional<Ontology> ont;
            if (!ont_path.empty()) ont = load_ontology(ont_path);
            auto ds = load_dialogues(in_path, ont ? &*ont : nullptr);
            std::size_t turns = 0;
            for (const auto& d : ds) turns += d.turns.size();
            std::cout << ds.size() << " dialogues, " << turns << " turns\n";
            if (!out_path.empty()) write_dialogues(ds, out_path);
        } else if (*sample) {
            auto ont = load_ontology(ont_path);
            auto ds = load_dialogues(in_path, &ont);
            auto pool = sample_pool(ds, sp.cfg.pool_fraction, sp.cfg.seed, ont, parse_representation(sp.representation));
            write_pool(pool, out_path);
            std::cout << pool_dialogue_count(sp.cfg.pool_fraction, ds.size()) << " dialogues, " << pool.size()
                      << " turns\n";
        } else if (*embed) {
            write_pool(embed_pool(read_pool(pool_path), HashingEmbedder(dim)), out_path);
        } else if (*embed_import) {
            write_pool(import_embeddings(read_pool(pool_path), vec_path), out_path);
        } else if (*mine) {
            auto pairs = mine_contrastive_pairs(read_pool(pool_path), mining);
            export_pairs(pairs, out_path);
            std::cout << pairs.entries.size() << " entries\n";
        } else if (*export_cmd) {
            auto pool = read_pool(pool_path);
            auto pairs = import_pairs(pairs_path);
            std::string out;
            auto text = [&](const std::string& id) -> const std::string& {
                auto i = pool.index_of(id);
                if (!i) throw ConfigError("pairs reference unknown id " + id);
                return pool[*i].context_text;
            };
            auto clean = [](std::string s) {
                for (auto& c : s) {
                    if (c == '\t' || c == '\n') c = ' ';
                }
                return s;
            };
            for (const auto& e : pairs.entries) {
                const auto anchor = clean(text(e.query_id));
                for (const auto& p : e.positives) out += anchor + "\t" + clean(text(p)) + "\t1\n";
                for (const auto& n : e.negatives) out += anchor + "\t" + clean(text(n)) + "\t0\n";
            }
            write_text(out_path, out);
        } else if (*retrieve) {
            auto ont = load_ontology(rt.setup.ontology);
            auto kind = parse_retriever_kind(rt.retriever);
            auto c = build_components(rt.setup, ont, kind, rt.cfg);
            RetrievalQuery q;
            std::vector<DialogueRecord> ds;
            if (!query_text.empty()) {
                q.key = "query";
                q.context_text = query_text;
                if (kind == RetrieverKind::oracle) throw ConfigError("the oracle retriever needs --dialogues/--dialogue-id");
            } else {
                if (rt.test.empty() || dialogue_id.empty()) throw ConfigError("give --query or --dialogues with --dialogue-id");
                ds = load_dialogues(rt.test, &ont);
                const auto& d = find_dialogue(ds, dialogue_id);
                if (turn >= d.turns.size()) throw ConfigError("turn out of range");
                auto prev = turn == 0 ? DialogueState{} : d.turns[turn - 1].state;
                q.key = turn_key(d.id, turn);
                q.context_text = truncate_front_to_units(
                    render_context(turn_context(d, turn, prev, ContextRepresentation::prev_state_plus_turn), ont),
                    kRetrieverMaxUnits);
                q.gold_change = &d.gold_changes[turn];
            }
            for (const auto& hit : c.retriever->retrieve(q, rt.cfg.k_exemplars)) {
                const auto& rec = (*c.pool)[hit.index];
                std::cout << hit.id << "\t" << hit.score << "\t" << serialize_change(rec.change, ont) << "\n";
            }
        } else if (*prompt) {
            resolve_config(pr);
            auto ont = load_ontology(pr.setup.ontology);
            Components c;
            if (!pr.cfg.zero_shot) c = build_components(pr.setup, ont, pr.cfg.retriever_kind, pr.cfg);
            Tracker tracker(ont, pr.cfg, c.pool, c.retriever);
            auto ds = load_dialogues(pr.test, &ont);
            const auto& d = find_dialogue(ds, dialogue_id);
            if (turn >= d.turns.size()) throw ConfigError("turn out of range");
            auto prev = turn == 0 ? DialogueState{} : d.turns[turn - 1].state;
            std::cout << tracker.prompt_for(d, turn, prev).text << "\n";
        } else if (*run) {
            resolve_config(rn);
            auto ont = load_ontology(rn.setup.ontology);
            auto test = load_dialogues(rn.test, &ont);
            LmGateway lm(make_backend(rn), rn.max_in_flight);
            if (!rn.repeat_seeds.empty()) {
                if (rn.setup.train.empty()) throw ConfigError("--repeat-seeds needs --train");
                auto train = load_dialogues(rn.setup.train, &ont);
                auto rep = run_repeated(train, test, ont, rn.cfg, rn.repeat_seeds, lm);
                write_text(rn.report, repeated_to_json(rep));
                for (const auto& [name, m] : rep.summary) std::cout << name << " " << m.mean << " (" << m.stdev << ")\n";
            } else {
                Components c;
                if (!rn.cfg.zero_shot) c = build_components(rn.setup, ont, rn.cfg.retriever_kind, rn.cfg);
                Tracker tracker(ont, rn.cfg, c.pool, c.retriever);
                auto report = run_experiment(test, tracker, lm);
                write_report(report, rn.report, rn.trace);
                print_summary(report);
            }
        } else if (*score) {
            auto ont = load_ontology(ont_path);
            auto report = score_traces(read_traces(trace_path), ont);
            if (!report_path.empty()) write_report(report, report_path, {});
            print_summary(report);
        } else if (*copy) {
            resolve_config(cb);
            auto ont = load_ontology(cb.setup.ontology);
            auto test = load_dialogues(cb.test, &ont);
            auto c = build_components(cb.setup, ont, cb.cfg.retriever_kind, cb.cfg);
            auto report = copy_baseline(*c.pool, *c.retriever, test, ont, cb.cfg.representation, cb.cfg.conditioning);
            write_report(report, cb.report, cb.trace);
            print_summary(report);
        } else if (*gold) {
            resolve_config(gs);
            auto ont = load_ontology(gs.setup.ontology);
            auto test = load_dialogues(gs.test, &ont);
            Components c;
            if (!gs.cfg.zero_shot) c = build_components(gs.setup, ont, gs.cfg.retriever_kind, gs.cfg);
            Tracker tracker(ont, gs.cfg, c.pool, c.retriever);
            auto script = tracker.gold_script(test);
            write_script(script, gs.output);
            std::cout << script.size() << " prompts\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
