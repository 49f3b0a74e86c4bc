#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "icdst/state.hpp"

namespace icdst::json_util {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// 1-based line and column of a byte offset.
inline std::string location(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Keyed by "domain-slot", in map order.
template <typename SlotMapT>
ordered_json slot_map_to_json(const SlotMapT& m) {
    ordered_json out = ordered_json::object();
    for (const auto& [slot, value] : m) out[slot.key()] = value;
    return out;
}

template <typename SlotMapT, typename Json>
SlotMapT slot_map_from_json(const Json& j, std::string_view what) {
    if (!j.is_object()) throw FormatError(std::string(what) + ": expected an object of \"domain-slot\": value");
    SlotMapT out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto slot = SlotName::parse(it.key());
        if (!slot) throw FormatError(std::string(what) + ": bad slot key '" + it.key() + "'");
        if (!it.value().is_string()) throw FormatError(std::string(what) + ": value of '" + it.key() + "' is not a string");
        out.set(*slot, it.value().template get<std::string>());
    }
    return out;
}

}  // namespace icdst::json_util
