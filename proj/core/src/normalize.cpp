#include "icdst/normalize.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "icdst/error.hpp"
#include "text_util.hpp"

namespace icdst {

std::string collapse_whitespace(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

Normalizer::Normalizer(std::vector<Rule> rules) : rules_(std::move(rules)) {
    for (auto& [raw, canonical] : rules_) {
        raw = collapse_whitespace(raw);
        canonical = collapse_whitespace(canonical);
    }
    validate();
}

void Normalizer::validate() const {
    std::set<std::string, std::less<>> raw_tokens;
    for (const auto& [raw, canonical] : rules_) {
        if (raw.empty()) throw FormatError("normalization rule with empty raw form");
        for (auto tok : split_whitespace(raw)) raw_tokens.emplace(tok);
    }
    for (const auto& [raw, canonical] : rules_) {
        for (auto tok : split_whitespace(canonical)) {
            if (raw_tokens.contains(tok)) {
                throw FormatError("normalization table is not closed: canonical form '" + canonical +
                                  "' reuses token '" + std::string(tok) + "'");
            }
        }
    }
}

const Normalizer& Normalizer::standard() {
    static const Normalizer instance({
        {"don't care", "dontcare"},
        {"do not care", "dontcare"},
        {"dont care", "dontcare"},
        {"guesthouse", "guest house"},
        {"center", "centre"},
    });
    return instance;
}

Normalizer Normalizer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open normalization table: " + path.string());
    std::vector<Rule> rules = standard().rules();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected raw<TAB>canonical");
        }
        rules.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return Normalizer(std::move(rules));
}

namespace {

// Replaces token-aligned occurrences of `raw` in the single-spaced `value`.
void replace_tokens(std::string& value, const std::string& raw, const std::string& canonical) {
    std::size_t pos = 0;
    while ((pos = value.find(raw, pos)) != std::string::npos) {
        const std::size_t end = pos + raw.size();
        const bool left_ok = pos == 0 || value[pos - 1] == ' ';
        const bool right_ok = end == value.size() || value[end] == ' ';
        if (left_ok && right_ok) {
            value.replace(pos, raw.size(), canonical);
            pos += canonical.size();
        } else {
            ++pos;
        }
    }
}

}  // namespace

std::string Normalizer::operator()(std::string_view raw) const {
    std::string value = collapse_whitespace(raw);
    for (const auto& [from, to] : rules_) replace_tokens(value, from, to);
    return value;
}

std::string normalize_value(std::string_view raw) { return Normalizer::standard()(raw); }

}  // namespace icdst
