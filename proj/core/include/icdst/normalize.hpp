#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icdst {

inline constexpr std::string_view kDontCare = "dontcare";

/// Lowercases ASCII, trims, and collapses internal whitespace runs to one space.
std::string collapse_whitespace(std::string_view raw);

/// Value canonicalization driven by a replacement table.
///
/// A rule `raw -> canonical` rewrites every occurrence of `raw` that sits on
/// token boundaries (start/end of value or a single space). Rules are applied
/// in table order after case and whitespace folding, so the table itself is
/// expected to be closed: no canonical form may contain another rule's raw
/// form. `validate()` checks that.
class Normalizer {
public:
    using Rule = std::pair<std::string, std::string>;

    Normalizer() = default;
    explicit Normalizer(std::vector<Rule> rules);

    /// Built-in MultiWOZ table (don't care variants, guesthouse, center).
    static const Normalizer& standard();

    /// Standard rules followed by the `raw<TAB>canonical` lines of `path`.
    /// Blank lines and lines starting with '#' are skipped.
    static Normalizer from_file(const std::filesystem::path& path);

    std::string operator()(std::string_view raw) const;

    const std::vector<Rule>& rules() const noexcept { return rules_; }

private:
    void validate() const;

    std::vector<Rule> rules_;
};

/// normalize_value with the standard table.
std::string normalize_value(std::string_view raw);

}  // namespace icdst
