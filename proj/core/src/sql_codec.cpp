#include <algorithm>
#include <map>

#include "icdst/codec.hpp"
#include "text_util.hpp"

namespace icdst {

std::string_view to_string(CodecError::Kind kind) {
    switch (kind) {
        case CodecError::Kind::unknown_table: return "UnknownTable";
        case CodecError::Kind::unknown_column: return "UnknownColumn";
        case CodecError::Kind::malformed: return "MalformedSql";
    }
    return "?";
}

std::string CodecError::describe() const {
    return std::string(to_string(kind)) + " [" + std::to_string(begin) + "," + std::to_string(end) + "): " + message;
}

bool ParseResult::fatal() const noexcept {
    return std::any_of(errors.begin(), errors.end(), [](const CodecError& e) { return e.fatal(); });
}

namespace {

using DomainGroups = std::vector<std::pair<const DomainDef*, std::vector<std::pair<const SlotDef*, std::string>>>>;

DomainGroups group_by_domain(const StateChange& change, const Ontology& ont) {
    std::map<std::size_t, std::map<std::size_t, std::pair<const SlotDef*, std::string>>> ordered;
    for (const auto& [slot, value] : change) {
        const auto di = ont.domain_index(slot.domain);
        const SlotDef* def = ont.find_slot(slot);
        if (di == Ontology::npos || def == nullptr) {
            throw UnknownSlotError("slot " + slot.key() + " is not in the ontology");
        }
        const auto& d = ont.domains()[di];
        const auto si = static_cast<std::size_t>(def - d.slots.data());
        ordered[di][si] = {def, value};
    }
    DomainGroups out;
    for (auto& [di, slots] : ordered) {
        auto& group = out.emplace_back(&ont.domains()[di], std::vector<std::pair<const SlotDef*, std::string>>{});
        for (auto& [si, entry] : slots) group.second.push_back(std::move(entry));
    }
    return out;
}

std::string conditions(const std::vector<std::pair<const SlotDef*, std::string>>& slots, std::string_view qualifier,
                       bool display) {
    std::string out;
    for (const auto& [def, value] : slots) {
        if (!out.empty()) out += " AND ";
        if (!qualifier.empty()) {
            out += qualifier;
            out += '.';
        }
        out += def->column_name(display);
        out += " = ";
        out += value;
    }
    return out;
}

}  // namespace

std::string serialize_change(const StateChange& change, const Ontology& ont, const SerializeOptions& opts) {
    if (change.empty()) return "SELECT * FROM none;";
    const auto groups = group_by_domain(change, ont);
    if (groups.size() == 1 || opts.style == MultiDomainStyle::per_domain_statements) {
        std::vector<std::string> statements;
        for (const auto& [domain, slots] : groups) {
            statements.push_back("SELECT * FROM " + domain->name + " WHERE " +
                                 conditions(slots, "", opts.use_display_names) + ";");
        }
        return join(statements, " ");
    }
    std::vector<std::string> tables;
    std::vector<std::string> clauses;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::string alias = "d_" + std::to_string(i + 1);
        tables.push_back(groups[i].first->name + " AS " + alias);
        clauses.push_back(conditions(groups[i].second, alias, opts.use_display_names));
    }
    return "SELECT * FROM " + join(tables, ", ") + " WHERE " + join(clauses, " AND ") + ";";
}

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

// Position of `kw` as a whole token in `s`, or npos.
std::size_t find_keyword(std::string_view s, std::string_view kw, bool case_sensitive, std::size_t from = 0) {
    for (std::size_t i = from; i + kw.size() <= s.size(); ++i) {
        const auto cand = s.substr(i, kw.size());
        if (case_sensitive ? cand != kw : !iequals(cand, kw)) continue;
        const bool left = i == 0 || is_space(s[i - 1]);
        const bool right = i + kw.size() == s.size() || is_space(s[i + kw.size()]);
        if (left && right) return i;
    }
    return std::string_view::npos;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::vector<std::string_view> split_on_keyword(std::string_view s, std::string_view kw) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = find_keyword(s, kw, true, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + kw.size();
    }
}

std::string_view strip_quotes(std::string_view v) {
    if (v.size() >= 2 && (v.front() == '\'' || v.front() == '"') && v.back() == v.front()) {
        return trim(v.substr(1, v.size() - 2));
    }
    return v;
}

// Consumes an optional `SELECT * FROM` head.
std::string_view strip_head(std::string_view stmt) {
    auto s = trim(stmt);
    if (!starts_with_ci(s, "select")) return s;
    auto rest = trim(s.substr(6));
    if (rest.empty() || rest.front() != '*') return s;
    rest = trim(rest.substr(1));
    if (!starts_with_ci(rest, "from")) return s;
    if (rest.size() > 4 && !is_space(rest[4])) return s;
    return trim(rest.substr(4));
}

class CompletionParser {
public:
    CompletionParser(std::string_view raw, const Ontology& ont) : raw_(raw), ont_(ont) {}

    ParseResult run() {
        for (auto stmt : split_on(raw_, ';')) {
            if (trim(stmt).empty()) continue;
            statement(stmt);
        }
        if (result_.fatal()) result_.change = StateChange{};
        return std::move(result_);
    }

private:
    struct Table {
        const DomainDef* domain;  // nullptr for the "none" table
        std::string alias;
    };

    void error(CodecError::Kind kind, std::string message, std::string_view span) {
        const auto begin = static_cast<std::size_t>(span.data() - raw_.data());
        result_.errors.push_back({kind, std::move(message), begin, begin + span.size()});
    }

    void statement(std::string_view stmt) {
        const auto body = strip_head(stmt);
        std::string_view from_part = body;
        std::string_view where_part;
        bool has_where = false;
        if (auto w = find_keyword(body, "where", false); w != std::string_view::npos) {
            from_part = body.substr(0, w);
            where_part = body.substr(w + 5);
            has_where = true;
        }
        if (trim(from_part).empty()) {
            error(CodecError::Kind::malformed, "missing table name", trim(stmt));
            return;
        }
        std::vector<Table> tables;
        for (auto item : split_on(from_part, ',')) {
            auto toks = split_whitespace(item);
            if (toks.empty()) {
                error(CodecError::Kind::malformed, "empty table reference", item);
                return;
            }
            std::string alias;
            if (toks.size() == 3 && iequals(toks[1], "as")) {
                alias = to_lower(toks[2]);
            } else if (toks.size() == 2 && !iequals(toks[1], "as")) {
                alias = to_lower(toks[1]);
            } else if (toks.size() != 1) {
                error(CodecError::Kind::malformed, "cannot read table reference '" + std::string(trim(item)) + "'",
                      trim(item));
                return;
            }
            const std::string name = to_lower(toks[0]);
            if (name == "none") {
                tables.push_back({nullptr, alias});
                continue;
            }
            const auto* d = ont_.find_domain(name);
            if (d == nullptr) {
                error(CodecError::Kind::unknown_table, "unknown table '" + name + "'", toks[0]);
                return;
            }
            tables.push_back({d, alias});
        }
        if (!has_where || trim(where_part).empty()) return;
        if (std::all_of(tables.begin(), tables.end(), [](const Table& t) { return t.domain == nullptr; })) return;
        for (auto cond : split_on_keyword(where_part, "AND")) condition(cond, tables);
    }

    void condition(std::string_view cond, const std::vector<Table>& tables) {
        const auto eq = cond.find('=');
        if (eq == std::string_view::npos) {
            error(CodecError::Kind::malformed, "condition without '='", trim(cond));
            return;
        }
        const auto lhs = trim(cond.substr(0, eq));
        const auto rhs = trim(cond.substr(eq + 1));
        if (lhs.empty() || lhs.find_first_of(" \t\n") != std::string_view::npos) {
            error(CodecError::Kind::malformed, "cannot read column '" + std::string(lhs) + "'", trim(cond));
            return;
        }
        const auto value = strip_quotes(rhs);
        if (value.empty()) {
            error(CodecError::Kind::malformed, "empty value", trim(cond));
            return;
        }

        std::string column = to_lower(lhs);
        const DomainDef* domain = nullptr;
        if (auto dot = column.find('.'); dot != std::string::npos) {
            const std::string qualifier = column.substr(0, dot);
            column = column.substr(dot + 1);
            for (const auto& t : tables) {
                if (t.domain && (t.alias == qualifier || t.domain->name == qualifier)) domain = t.domain;
            }
            if (domain == nullptr) {
                error(CodecError::Kind::unknown_table, "unknown table qualifier '" + qualifier + "'", lhs);
                return;
            }
        } else {
            std::size_t matches = 0;
            for (const auto& t : tables) {
                if (t.domain && t.domain->find_column(column)) {
                    domain = t.domain;
                    ++matches;
                }
            }
            if (matches != 1) {
                error(CodecError::Kind::unknown_column,
                      (matches == 0 ? "unknown column '" : "ambiguous column '") + column + "'", lhs);
                return;
            }
        }
        const SlotDef* slot = domain->find_column(column);
        if (slot == nullptr) {
            error(CodecError::Kind::unknown_column, "unknown column '" + column + "' in table " + domain->name, lhs);
            return;
        }
        result_.change.set(slot->slot_name(), value);
    }

    std::string_view raw_;
    const Ontology& ont_;
    ParseResult result_;
};

}  // namespace

ParseResult parse_completion(std::string_view raw, const Ontology& ont) {
    if (trim(raw).empty()) {
        ParseResult r;
        r.errors.push_back({CodecError::Kind::malformed, "empty completion", 0, raw.size()});
        return r;
    }
    return CompletionParser(raw, ont).run();
}

}  // namespace icdst
