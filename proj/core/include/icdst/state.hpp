#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace icdst {

/// Reserved value that marks a slot deletion inside a StateChange.
inline constexpr std::string_view kDeletionToken = "NONE";

/// A (domain, slot) pair, written `domain-slot` in every text format.
struct SlotName {
    std::string domain;
    std::string slot;

    auto operator<=>(const SlotName&) const = default;

    std::string key() const { return domain + '-' + slot; }

    /// Splits `domain-slot` at the first '-'. Returns nullopt when either side
    /// would be empty.
    static std::optional<SlotName> parse(std::string_view key);
};

namespace detail {

// Shared storage for the two map-shaped value types. Iteration is in
// (domain, slot) lexicographic order.
class SlotMap {
public:
    using Map = std::map<SlotName, std::string>;
    using const_iterator = Map::const_iterator;

    const_iterator begin() const noexcept { return values_.begin(); }
    const_iterator end() const noexcept { return values_.end(); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    bool contains(const SlotName& s) const { return values_.contains(s); }

    const std::string* find(const SlotName& s) const {
        auto it = values_.find(s);
        return it == values_.end() ? nullptr : &it->second;
    }

    const Map& entries() const noexcept { return values_; }

protected:
    Map values_;
};

}  // namespace detail

/// Accumulated dialogue state: a set of slot/value pairs.
class DialogueState : public detail::SlotMap {
public:
    DialogueState() = default;
    DialogueState(std::initializer_list<std::pair<SlotName, std::string>> init);

    /// Normalizes `value` first. Values that normalize to empty, "none" or the
    /// deletion token leave the slot absent (MultiWOZ convention).
    void set(const SlotName& slot, std::string_view value);
    void erase(const SlotName& slot) { values_.erase(slot); }

    /// Restriction to the slots of one domain.
    DialogueState project(std::string_view domain) const;

    friend bool operator==(const DialogueState& a, const DialogueState& b) {
        return a.values_ == b.values_;
    }
};

/// Per-turn delta. A value equal to kDeletionToken removes the slot.
class StateChange : public detail::SlotMap {
public:
    StateChange() = default;
    StateChange(std::initializer_list<std::pair<SlotName, std::string>> init);

    /// Normalizes `value`, except that any casing of "none" becomes kDeletionToken.
    void set(const SlotName& slot, std::string_view value);
    void set_deletion(const SlotName& slot) { values_[slot] = std::string(kDeletionToken); }
    void erase(const SlotName& slot) { values_.erase(slot); }

    static bool is_deletion(std::string_view value) { return value == kDeletionToken; }

    friend bool operator==(const StateChange& a, const StateChange& b) {
        return a.values_ == b.values_;
    }
};

/// Copies `prev` and executes each add/change/delete in `change`.
DialogueState apply_change(const DialogueState& prev, const StateChange& change);

/// The minimal change c with apply_change(prev, c) == curr.
StateChange diff_states(const DialogueState& prev, const DialogueState& curr);

/// "domain-slot: value" pairs joined by ", " in map order.
std::string to_display_string(const detail::SlotMap& m);

}  // namespace icdst
