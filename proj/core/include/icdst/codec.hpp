#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/error.hpp"
#include "icdst/ontology.hpp"
#include "icdst/state.hpp"

namespace icdst {

/// How a change touching several domains is written in SQL.
enum class MultiDomainStyle {
    /// `SELECT * FROM a WHERE ...; SELECT * FROM b WHERE ...;`
    per_domain_statements,
    /// `SELECT * FROM a AS d_1, b AS d_2 WHERE d_1.x = ... AND d_2.y = ...;`
    renamed_aliases,
};

struct SerializeOptions {
    MultiDomainStyle style = MultiDomainStyle::per_domain_statements;
    bool use_display_names = false;
};

/// Thrown by the serializers when a change names a slot the ontology lacks.
class UnknownSlotError : public Error {
public:
    using Error::Error;
};

struct CodecError {
    enum class Kind { unknown_table, unknown_column, malformed };

    Kind kind;
    std::string message;
    /// Byte span of the offending text within the parsed input.
    std::size_t begin = 0;
    std::size_t end = 0;

    /// Unknown columns only drop their own condition; everything else voids the parse.
    bool fatal() const noexcept { return kind != Kind::unknown_column; }
    std::string describe() const;
};

std::string_view to_string(CodecError::Kind kind);

/// Outcome of decoding raw model output. `change` is empty whenever a fatal
/// error was recorded.
struct ParseResult {
    StateChange change;
    std::vector<CodecError> errors;

    bool ok() const noexcept { return errors.empty(); }
    bool fatal() const noexcept;
};

/// The SQL text for a change, including the leading `SELECT * FROM`.
/// Conditions follow ontology domain order, then slot order.
std::string serialize_change(const StateChange& change, const Ontology& ont, const SerializeOptions& opts = {});

/// Decodes an SQL completion with or without its `SELECT * FROM` head.
/// Keywords are case-insensitive except `AND`, which must be upper case so
/// that values such as "a and b guest house" survive. Values may be bare or
/// quoted; bare values run to the next ` AND `, `;` or end of input.
ParseResult parse_completion(std::string_view raw, const Ontology& ont);

/// `domain-slot: value, domain-slot: value;` in (domain, slot) order.
std::string serialize_traditional(const StateChange& change);

/// Inverse of serialize_traditional; the trailing `;` is optional.
ParseResult parse_traditional(std::string_view raw, const Ontology& ont);

}  // namespace icdst
