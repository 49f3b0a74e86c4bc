#include "icdst/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "text_util.hpp"

namespace icdst {

namespace {

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

// Inventory order with "dontcare" moved to the front when present.
std::vector<std::string> dontcare_first(const std::vector<std::string>& values) {
    std::vector<std::string> out;
    out.reserve(values.size());
    if (std::find(values.begin(), values.end(), kDontCare) != values.end()) out.emplace_back(kDontCare);
    for (const auto& v : values) {
        if (v != kDontCare) out.push_back(v);
    }
    return out;
}

std::string join_cells(const std::vector<std::string>& cells, const std::vector<std::size_t>* gaps) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += gaps ? std::string((*gaps)[i - 1], ' ') : std::string("\t");
        out += cells[i];
    }
    return out;
}

void validate_domain(const DomainDef& d, const Normalizer& norm) {
    if (!is_identifier(d.name)) throw OntologyError("invalid domain name '" + d.name + "'");
    std::set<std::string, std::less<>> names;
    for (const auto& s : d.slots) {
        const std::string where = d.name + "." + s.name;
        if (s.domain != d.name) throw OntologyError(where + ": slot domain mismatch");
        if (!is_identifier(s.name)) throw OntologyError("invalid slot name '" + where + "'");
        if (!names.insert(s.name).second) throw OntologyError("duplicate slot " + where);
        if (s.kind == SlotKind::categorical && s.values.empty()) {
            throw OntologyError(where + ": categorical slot with empty value inventory");
        }
        for (const auto& v : s.values) {
            if (v.empty() || collapse_whitespace(v) != v) {
                throw OntologyError(where + ": value '" + v + "' is not lowercase, trimmed and single-spaced");
            }
        }
        if (s.display_name && !is_identifier(*s.display_name)) {
            throw OntologyError(where + ": invalid display name '" + *s.display_name + "'");
        }
    }
    for (const auto& s : d.slots) {
        if (s.display_name && *s.display_name != s.name && names.contains(*s.display_name)) {
            throw OntologyError(d.name + "." + s.name + ": display name collides with another slot");
        }
    }
    for (std::size_t r = 0; r < d.example_rows.size(); ++r) {
        const auto& row = d.example_rows[r];
        const std::string where = d.name + " example row " + std::to_string(r + 1);
        if (row.size() != d.slots.size()) {
            throw OntologyError(where + ": has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(d.slots.size()));
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto& slot = d.slots[c];
            if (slot.kind != SlotKind::categorical) continue;
            const std::string v = norm(row[c]);
            if (v != kDontCare && !slot.admits(v)) {
                throw OntologyError(where + ": value '" + row[c] + "' not in inventory of " + d.name + "." +
                                    slot.name);
            }
        }
    }
    if (d.example_layout) {
        const std::size_t want = d.slots.empty() ? 0 : d.slots.size() - 1;
        auto check = [&](const std::vector<std::size_t>& gaps, const std::string& what) {
            if (gaps.size() != want) throw OntologyError(d.name + ": " + what + " needs " + std::to_string(want) + " gaps");
            for (auto g : gaps) {
                if (g == 0) throw OntologyError(d.name + ": " + what + " has a zero-width gap");
            }
        };
        check(d.example_layout->header_gaps, "header layout");
        if (d.example_layout->row_gaps.size() != d.example_rows.size()) {
            throw OntologyError(d.name + ": example layout does not cover every example row");
        }
        for (const auto& g : d.example_layout->row_gaps) check(g, "row layout");
    }
}

SlotKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "categorical") return SlotKind::categorical;
    if (s == "open") return SlotKind::open;
    throw OntologyError(where + ": unknown slot kind '" + s + "'");
}

}  // namespace

bool SlotDef::admits(std::string_view value) const {
    return std::find(values.begin(), values.end(), value) != values.end();
}

const SlotDef* DomainDef::find_slot(std::string_view slot) const {
    for (const auto& s : slots) {
        if (s.name == slot) return &s;
    }
    return nullptr;
}

const SlotDef* DomainDef::find_column(std::string_view column) const {
    if (const auto* s = find_slot(column)) return s;
    for (const auto& s : slots) {
        if (s.display_name && *s.display_name == column) return &s;
    }
    return nullptr;
}

Ontology::Ontology(std::vector<DomainDef> domains, const Normalizer& norm) : domains_(std::move(domains)) {
    std::set<std::string, std::less<>> seen;
    for (const auto& d : domains_) {
        if (!seen.insert(d.name).second) throw OntologyError("duplicate domain " + d.name);
        validate_domain(d, norm);
    }
}

const DomainDef* Ontology::find_domain(std::string_view name) const {
    for (const auto& d : domains_) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

const SlotDef* Ontology::find_slot(const SlotName& s) const {
    const auto* d = find_domain(s.domain);
    return d ? d->find_slot(s.slot) : nullptr;
}

std::size_t Ontology::domain_index(std::string_view name) const {
    for (std::size_t i = 0; i < domains_.size(); ++i) {
        if (domains_[i].name == name) return i;
    }
    return npos;
}

std::size_t Ontology::slot_index(const SlotName& s) const {
    std::size_t base = 0;
    for (const auto& d : domains_) {
        if (d.name == s.domain) {
            for (std::size_t i = 0; i < d.slots.size(); ++i) {
                if (d.slots[i].name == s.slot) return base + i;
            }
            return npos;
        }
        base += d.slots.size();
    }
    return npos;
}

std::vector<const SlotDef*> Ontology::all_slots() const {
    std::vector<const SlotDef*> out;
    for (const auto& d : domains_) {
        for (const auto& s : d.slots) out.push_back(&s);
    }
    return out;
}

Ontology parse_ontology(std::string_view text, const Normalizer& norm) {
    using json_util::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw OntologyError("ontology parse error at " + json_util::location(text, e.byte ? e.byte - 1 : 0) + ": " +
                            e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("domains") || !doc["domains"].is_array()) {
            throw OntologyError("ontology must be an object with a \"domains\" array");
        }
        std::vector<DomainDef> domains;
        for (const auto& jd : doc["domains"]) {
            DomainDef d;
            d.name = jd.at("name").get<std::string>();
            for (const auto& js : jd.value("slots", json::array())) {
                SlotDef s;
                s.domain = d.name;
                s.name = js.at("name").get<std::string>();
                s.kind = parse_kind(js.at("kind").get<std::string>(), d.name + "." + s.name);
                s.values = js.value("values", std::vector<std::string>{});
                if (js.contains("display_name")) s.display_name = js["display_name"].get<std::string>();
                s.int_like = js.value("int_like", false);
                if (js.contains("sql_column")) s.sql_column = js["sql_column"].get<std::string>();
                d.slots.push_back(std::move(s));
            }
            d.example_rows = jd.value("example_rows", std::vector<std::vector<std::string>>{});
            if (jd.contains("example_layout")) {
                const auto& jl = jd["example_layout"];
                ExampleLayout layout;
                layout.header_gaps = jl.at("header_gaps").get<std::vector<std::size_t>>();
                layout.row_gaps = jl.at("row_gaps").get<std::vector<std::vector<std::size_t>>>();
                d.example_layout = std::move(layout);
            }
            domains.push_back(std::move(d));
        }
        return Ontology(std::move(domains), norm);
    } catch (const json::exception& e) {
        throw OntologyError(std::string("ontology structure error: ") + e.what());
    }
}

Ontology load_ontology(const std::filesystem::path& path, const Normalizer& norm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open ontology file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_ontology(buf.str(), norm);
    } catch (const OntologyError& e) {
        throw OntologyError(path.string() + ": " + e.what());
    }
}

std::string render_schema_sql(const Ontology& ont, const SchemaRenderOptions& opts) {
    std::vector<std::string> blocks;
    for (const auto& d : ont.domains()) {
        std::ostringstream out;
        out << "CREATE TABLE " << d.name << "(\n";
        std::vector<std::string> columns;
        std::vector<std::string> header;
        for (const auto& s : d.slots) {
            const std::string& col = s.column_name(opts.use_display_names);
            header.push_back(col);
            if (s.sql_column) {
                columns.push_back("  " + *s.sql_column);
                continue;
            }
            std::string line = "  " + col + (s.int_like ? " int" : " text");
            if (s.kind == SlotKind::categorical) {
                line += " CHECK (" + col + " IN (" + join(dontcare_first(s.values), ", ") + "))";
            }
            columns.push_back(std::move(line));
        }
        out << join(columns, ",\n") << "\n)\n";
        if (!d.example_rows.empty()) {
            const auto n = d.example_rows.size();
            const auto* layout = d.example_layout ? &*d.example_layout : nullptr;
            out << "/*\n" << n << " example rows:\n";
            out << "SELECT * FROM " << d.name << " LIMIT " << n << ";\n";
            out << join_cells(header, layout ? &layout->header_gaps : nullptr) << "\n";
            for (std::size_t r = 0; r < n; ++r) {
                out << join_cells(d.example_rows[r], layout ? &layout->row_gaps[r] : nullptr) << "\n";
            }
            out << "*/\n";
        }
        blocks.push_back(out.str());
    }
    return join(blocks, "\n");
}

std::string render_schema_traditional(const Ontology& ont) {
    std::vector<std::string> blocks;
    for (const auto& d : ont.domains()) {
        std::string block;
        for (const auto& s : d.slots) {
            block += d.name + "-" + s.name + ": ";
            if (s.kind == SlotKind::categorical) {
                block += join(dontcare_first(s.values), ", ");
            } else {
                block += join(s.values, ", ");
                block += s.values.empty() ? "etc." : ", etc.";
            }
            block += "\n";
        }
        blocks.push_back(std::move(block));
    }
    return join(blocks, "\n");
}

}  // namespace icdst
