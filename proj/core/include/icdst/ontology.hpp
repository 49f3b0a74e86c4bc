#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/error.hpp"
#include "icdst/normalize.hpp"
#include "icdst/state.hpp"

namespace icdst {

enum class SlotKind { categorical, open };

struct SlotDef {
    std::string domain;
    std::string name;
    SlotKind kind = SlotKind::open;
    /// Full closed set for categorical slots, sample values for open ones.
    std::vector<std::string> values;
    /// Column name shown in prompts instead of `name` when display names are on.
    std::optional<std::string> display_name;
    /// Rendered as an `int` column.
    bool int_like = false;
    /// Verbatim column definition; replaces the generated one when set.
    std::optional<std::string> sql_column;

    SlotName slot_name() const { return {domain, name}; }
    const std::string& column_name(bool use_display_names) const {
        return use_display_names && display_name ? *display_name : name;
    }
    /// Only meaningful for categorical slots.
    bool admits(std::string_view value) const;
};

/// Spaces between adjacent cells of the example table. Absent means cells are
/// tab-separated.
struct ExampleLayout {
    std::vector<std::size_t> header_gaps;
    std::vector<std::vector<std::size_t>> row_gaps;
};

struct DomainDef {
    std::string name;
    std::vector<SlotDef> slots;
    /// Each row holds one cell per slot, verbatim as shown in the prompt.
    std::vector<std::vector<std::string>> example_rows;
    std::optional<ExampleLayout> example_layout;

    const SlotDef* find_slot(std::string_view slot) const;
    /// Looks up by canonical name first, then by display name.
    const SlotDef* find_column(std::string_view column) const;
};

class OntologyError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Domains, slots and example rows of a task schema. Immutable once built.
class Ontology {
public:
    Ontology() = default;
    /// Validates every invariant; throws OntologyError on the first violation.
    explicit Ontology(std::vector<DomainDef> domains, const Normalizer& norm = Normalizer::standard());

    const std::vector<DomainDef>& domains() const noexcept { return domains_; }
    bool empty() const noexcept { return domains_.empty(); }

    const DomainDef* find_domain(std::string_view name) const;
    const SlotDef* find_slot(const SlotName& s) const;
    bool contains(const SlotName& s) const { return find_slot(s) != nullptr; }

    /// Position of the domain in file order, or npos.
    std::size_t domain_index(std::string_view name) const;
    /// Global position of a slot (domain order, then slot order), or npos.
    std::size_t slot_index(const SlotName& s) const;

    /// Every slot in domain order then slot order.
    std::vector<const SlotDef*> all_slots() const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<DomainDef> domains_;
};

/// Parses the JSON ontology document. Parse errors carry line and column.
Ontology parse_ontology(std::string_view text, const Normalizer& norm = Normalizer::standard());
Ontology load_ontology(const std::filesystem::path& path, const Normalizer& norm = Normalizer::standard());

struct SchemaRenderOptions {
    bool use_display_names = false;
};

/// One CREATE TABLE block per domain followed by a commented example table.
std::string render_schema_sql(const Ontology& ont, const SchemaRenderOptions& opts = {});

/// `domain-slot: v1, v2, ...` lines; open slots end with ", etc.".
std::string render_schema_traditional(const Ontology& ont);

}  // namespace icdst
