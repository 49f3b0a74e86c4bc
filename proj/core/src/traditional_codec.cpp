#include "icdst/codec.hpp"
#include "text_util.hpp"

namespace icdst {

std::string serialize_traditional(const StateChange& change) {
    return to_display_string(change) + ";";
}

ParseResult parse_traditional(std::string_view raw, const Ontology& ont) {
    ParseResult result;
    auto error = [&](CodecError::Kind kind, std::string message, std::string_view span) {
        const auto begin = static_cast<std::size_t>(span.data() - raw.data());
        result.errors.push_back({kind, std::move(message), begin, begin + span.size()});
    };

    std::string_view body = raw;
    if (auto semi = body.find(';'); semi != std::string_view::npos) body = body.substr(0, semi);
    if (trim(body).empty()) {
        if (trim(raw).empty()) error(CodecError::Kind::malformed, "empty completion", raw);
        return result;
    }

    std::size_t start = 0;
    while (start <= body.size()) {
        auto comma = body.find(',', start);
        if (comma == std::string_view::npos) comma = body.size();
        const auto item = trim(body.substr(start, comma - start));
        start = comma + 1;
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            error(CodecError::Kind::malformed, "expected 'domain-slot: value'", item);
            continue;
        }
        const auto key = trim(item.substr(0, colon));
        const auto value = trim(item.substr(colon + 1));
        auto slot = SlotName::parse(to_lower(key));
        if (!slot || value.empty()) {
            error(CodecError::Kind::malformed, "cannot read pair '" + std::string(item) + "'", item);
            continue;
        }
        const auto* domain = ont.find_domain(slot->domain);
        if (domain == nullptr) {
            error(CodecError::Kind::unknown_table, "unknown domain '" + slot->domain + "'", key);
            continue;
        }
        const auto* def = domain->find_column(slot->slot);
        if (def == nullptr) {
            error(CodecError::Kind::unknown_column, "unknown slot '" + slot->key() + "'", key);
            continue;
        }
        result.change.set(def->slot_name(), value);
    }
    if (result.fatal()) result.change = StateChange{};
    return result;
}

}  // namespace icdst
