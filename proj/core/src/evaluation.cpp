#include "icdst/evaluation.hpp"

#include <algorithm>
#include <map>

namespace icdst {

namespace {

template <typename T>
void check_aligned(std::span<const T> preds, std::span<const T> golds, const char* what) {
    if (preds.size() != golds.size()) {
        throw EvalError(std::string(what) + ": " + std::to_string(preds.size()) + " predictions for " +
                        std::to_string(golds.size()) + " gold turns");
    }
}

template <typename T>
double exact_rate(std::span<const T> preds, std::span<const T> golds) {
    if (golds.empty()) return 1.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) hit += preds[i] == golds[i];
    return static_cast<double>(hit) / static_cast<double>(golds.size());
}

}  // namespace

double jga(std::span<const DialogueState> preds, std::span<const DialogueState> golds) {
    check_aligned(preds, golds, "jga");
    return exact_rate(preds, golds);
}

DomainScore per_domain_jga(std::span<const DialogueState> preds, std::span<const DialogueState> golds,
                           std::string_view domain, const Ontology& ont) {
    check_aligned(preds, golds, "per_domain_jga");
    if (!ont.find_domain(domain)) throw EvalError("unknown domain '" + std::string(domain) + "'");
    DomainScore s;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        auto p = preds[i].project(domain);
        auto g = golds[i].project(domain);
        if (p.empty() && g.empty()) continue;
        ++s.count;
        hit += p == g;
    }
    s.rate = s.count == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(s.count);
    return s;
}

double change_jga(std::span<const StateChange> preds, std::span<const StateChange> golds) {
    check_aligned(preds, golds, "change_jga");
    return exact_rate(preds, golds);
}

double slot_value_f1(std::span<const DialogueState> preds, std::span<const DialogueState> golds) {
    check_aligned(preds, golds, "slot_value_f1");
    std::size_t matched = 0, n_pred = 0, n_gold = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        n_pred += preds[i].size();
        n_gold += golds[i].size();
        for (const auto& [slot, value] : preds[i]) {
            const auto* g = golds[i].find(slot);
            matched += g && *g == value;
        }
    }
    if (n_pred == 0 && n_gold == 0) return 1.0;
    if (matched == 0) return 0.0;
    const double p = static_cast<double>(matched) / static_cast<double>(n_pred);
    const double r = static_cast<double>(matched) / static_cast<double>(n_gold);
    return 2.0 * p * r / (p + r);
}

std::vector<TurnIndexScore> per_turn_index(std::span<const TurnTrace> traces) {
    struct Acc {
        std::size_t state = 0, change = 0, count = 0;
    };
    std::map<std::size_t, Acc> by_turn;
    for (const auto& t : traces) {
        auto& a = by_turn[t.turn];
        a.state += t.state_correct();
        a.change += t.change_correct();
        ++a.count;
    }
    std::vector<TurnIndexScore> out;
    out.reserve(by_turn.size());
    for (const auto& [turn, a] : by_turn) {
        const auto n = static_cast<double>(a.count);
        out.push_back({turn, static_cast<double>(a.state) / n, static_cast<double>(a.change) / n, a.count});
    }
    return out;
}

EvalReport score_traces(std::vector<TurnTrace> traces, const Ontology& ont, std::vector<ErrorEntry> error_log) {
    EvalReport r;
    std::vector<DialogueState> pred_states, gold_states;
    std::vector<StateChange> pred_changes, gold_changes;
    pred_states.reserve(traces.size());
    gold_states.reserve(traces.size());
    pred_changes.reserve(traces.size());
    gold_changes.reserve(traces.size());
    const std::string* last_id = nullptr;
    for (const auto& t : traces) {
        pred_states.push_back(t.pred_state);
        gold_states.push_back(t.gold_state);
        pred_changes.push_back(t.pred_change);
        gold_changes.push_back(t.gold_change);
        if (!last_id || *last_id != t.dialogue_id) ++r.n_dialogues;
        last_id = &t.dialogue_id;
    }
    r.n_turns = traces.size();
    r.vacuous = traces.empty();
    r.jga_all = jga(pred_states, gold_states);
    r.change_jga = change_jga(pred_changes, gold_changes);
    r.slot_value_f1 = slot_value_f1(pred_states, gold_states);
    for (const auto& d : ont.domains()) r.jga_per_domain[d.name] = per_domain_jga(pred_states, gold_states, d.name, ont);
    r.per_turn_index_jga = per_turn_index(traces);
    r.error_log = std::move(error_log);
    r.turns = std::move(traces);
    return r;
}

EvalReport copy_baseline(const ExemplarPool& pool, const Retriever& retriever, const std::vector<DialogueRecord>& test,
                         const Ontology& ont, ContextRepresentation representation, Conditioning conditioning) {
    if (pool.empty()) throw EvalError("copy baseline needs a non-empty pool");
    std::vector<TurnTrace> traces;
    for (const auto& d : test) {
        DialogueState pred;
        DialogueState gold_prev;
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
            const auto& base = conditioning == Conditioning::gold_prev_state ? gold_prev : pred;
            const auto ctx = turn_context(d, t, base, representation);
            RetrievalQuery q{turn_key(d.id, t), truncate_front_to_units(render_context(ctx, ont, kRetrieverMaxUnits),
                                                                        kRetrieverMaxUnits),
                             &d.gold_changes[t]};
            auto hits = retriever.retrieve(q, 1);
            if (hits.empty()) throw EvalError("retriever returned nothing for " + q.key);
            TurnTrace tr;
            tr.dialogue_id = d.id;
            tr.turn = t;
            tr.gold_state = d.turns[t].state;
            tr.gold_change = d.gold_changes[t];
            tr.pred_change = pool[hits.front().index].change;
            tr.pred_state = apply_change(base, tr.pred_change);
            pred = tr.pred_state;
            gold_prev = d.turns[t].state;
            traces.push_back(std::move(tr));
        }
    }
    return score_traces(std::move(traces), ont);
}

}  // namespace icdst
