#include "icdst/state.hpp"

#include "icdst/normalize.hpp"
#include "text_util.hpp"

namespace icdst {

std::optional<SlotName> SlotName::parse(std::string_view key) {
    key = trim(key);
    auto dash = key.find('-');
    if (dash == std::string_view::npos || dash == 0 || dash + 1 == key.size()) return std::nullopt;
    return SlotName{std::string(key.substr(0, dash)), std::string(key.substr(dash + 1))};
}

DialogueState::DialogueState(std::initializer_list<std::pair<SlotName, std::string>> init) {
    for (const auto& [slot, value] : init) set(slot, value);
}

void DialogueState::set(const SlotName& slot, std::string_view value) {
    std::string v = normalize_value(value);
    if (v.empty() || v == "none") {
        values_.erase(slot);
        return;
    }
    values_[slot] = std::move(v);
}

DialogueState DialogueState::project(std::string_view domain) const {
    DialogueState out;
    for (const auto& [slot, value] : values_) {
        if (slot.domain == domain) out.values_.emplace(slot, value);
    }
    return out;
}

StateChange::StateChange(std::initializer_list<std::pair<SlotName, std::string>> init) {
    for (const auto& [slot, value] : init) set(slot, value);
}

void StateChange::set(const SlotName& slot, std::string_view value) {
    if (iequals(trim(value), kDeletionToken)) {
        set_deletion(slot);
        return;
    }
    std::string v = normalize_value(value);
    if (v.empty()) {
        set_deletion(slot);
        return;
    }
    values_[slot] = std::move(v);
}

DialogueState apply_change(const DialogueState& prev, const StateChange& change) {
    DialogueState next = prev;
    for (const auto& [slot, value] : change) {
        if (StateChange::is_deletion(value)) {
            next.erase(slot);
        } else {
            next.set(slot, value);
        }
    }
    return next;
}

StateChange diff_states(const DialogueState& prev, const DialogueState& curr) {
    StateChange change;
    for (const auto& [slot, value] : curr) {
        const std::string* old = prev.find(slot);
        if (old == nullptr || *old != value) change.set(slot, value);
    }
    for (const auto& [slot, value] : prev) {
        if (!curr.contains(slot)) change.set_deletion(slot);
    }
    return change;
}

std::string to_display_string(const detail::SlotMap& m) {
    std::string out;
    for (const auto& [slot, value] : m) {
        if (!out.empty()) out += ", ";
        out += slot.key();
        out += ": ";
        out += value;
    }
    return out;
}

}  // namespace icdst
