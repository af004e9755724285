#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnassess/errors.hpp"

namespace vulnassess {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date &) const = default;

    static bool valid(int y, int m, int d) {
        if (y < 1 || m < 1 || m > 12 || d < 1) return false;
        static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int limit = days[m - 1];
        if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) limit = 29;
        return d <= limit;
    }

    /// Accepts ISO-8601 (YYYY-MM-DD) and compact YYYYMMDD forms.
    static Date parse(const std::string &s) {
        int y = 0, m = 0, d = 0;
        if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
            y = std::stoi(s.substr(0, 4));
            m = std::stoi(s.substr(5, 2));
            d = std::stoi(s.substr(8, 2));
        } else if (s.size() == 8 &&
                   std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            y = std::stoi(s.substr(0, 4));
            m = std::stoi(s.substr(4, 2));
            d = std::stoi(s.substr(6, 2));
        } else {
            throw Error("unparseable date '" + s + "'");
        }
        if (!valid(y, m, d)) throw Error("invalid calendar date '" + s + "'");
        return {y, m, d};
    }

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }
};

struct VulnRecord {
    std::string id;
    std::optional<std::string> cve_id;
    std::optional<std::string> cwe_id;
    std::string code;
    double cvss3_score = 0.0;
    int severity = 0;
    Date published;
    std::optional<std::string> suggestion;
    std::optional<std::string> description;
    bool suggestion_cleared = false; // flagged for regeneration by dedup_suggestions
};

/// CVSS 3.0 qualitative bands: Low < 4.0 <= Medium < 7.0 <= High < 9.0 <= Critical.
inline int severity_from_score(double score) {
    if (!(score >= 0.0) || score > 10.0)
        throw OutOfRange("cvss3 score " + std::to_string(score) + " not in [0,10]");
    if (score < 4.0) return 0;
    if (score < 7.0) return 1;
    if (score < 9.0) return 2;
    return 3;
}

inline const char *severity_name(int label) {
    static const char *names[] = {"low", "medium", "high", "critical"};
    return label >= 0 && label < 4 ? names[label] : "?";
}

// --- record (de)serialization ----------------------------------------------

inline nlohmann::json record_to_json(const VulnRecord &r) {
    nlohmann::json j = {{"id", r.id},
                        {"code", r.code},
                        {"cvss3_score", r.cvss3_score},
                        {"severity", r.severity},
                        {"published", r.published.iso()}};
    if (r.cve_id) j["cve_id"] = *r.cve_id;
    if (r.cwe_id) j["cwe_id"] = *r.cwe_id;
    if (r.suggestion) j["suggestion"] = *r.suggestion;
    if (r.description) j["description"] = *r.description;
    return j;
}

inline VulnRecord record_from_json(const nlohmann::json &j, int line) {
    VulnRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.code = j.at("code").get<std::string>();
        r.cvss3_score = j.at("cvss3_score").get<double>();
        if (j.contains("cve_id")) r.cve_id = j["cve_id"].get<std::string>();
        if (j.contains("cwe_id")) r.cwe_id = j["cwe_id"].get<std::string>();
        if (j.contains("suggestion")) r.suggestion = j["suggestion"].get<std::string>();
        if (j.contains("description")) r.description = j["description"].get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(line, e.what());
    }
    try {
        r.published = Date::parse(j.at("published").get<std::string>());
    } catch (const nlohmann::json::exception &e) {
        throw ParseError(line, e.what());
    } catch (const Error &e) {
        throw InvariantViolation(r.id, "published", e.what());
    }
    int computed;
    try {
        computed = severity_from_score(r.cvss3_score);
    } catch (const OutOfRange &e) {
        throw OutOfRange(std::string(e.what()) + " (line " + std::to_string(line) + ")");
    }
    if (j.contains("severity")) {
        r.severity = j["severity"].get<int>();
        if (r.severity != computed)
            throw InvariantViolation(r.id, "severity",
                                     "stored " + std::to_string(r.severity) +
                                         " but score maps to " + std::to_string(computed));
    } else {
        r.severity = computed;
    }
    return r;
}

/// Load line-delimited records; severity is recomputed from the score and
/// mismatches are rejected.
inline std::vector<VulnRecord> load_records(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<VulnRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
            throw ParseError(lineno, e.what());
        }
        out.push_back(record_from_json(j, lineno));
    }
    return out;
}

inline void save_records(const std::string &path, const std::vector<VulnRecord> &records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (const auto &r : records) out << record_to_json(r).dump() << "\n";
}

// --- chronological split ----------------------------------------------------

struct SplitSpec {
    Date train_end{2022, 8, 17};
    Date eval_start{2022, 8, 18};
};

struct SplitResult {
    std::vector<VulnRecord> train;
    std::vector<VulnRecord> validation;
    std::vector<VulnRecord> test;
};

/// Chronological partition: everything published up to train_end trains; the
/// rest is ordered by (date, id) and divided between validation and test by
/// count.
inline SplitResult split_by_time(std::vector<VulnRecord> records, const SplitSpec &spec,
                                 double val_fraction = 0.5) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw Error("val_fraction must lie in (0,1)");
    if (!(spec.train_end < spec.eval_start))
        throw Error("train_end must precede eval_start");
    SplitResult out;
    std::vector<VulnRecord> rest;
    for (auto &r : records) {
        if (r.published <= spec.train_end) out.train.push_back(std::move(r));
        else rest.push_back(std::move(r));
    }
    std::sort(rest.begin(), rest.end(), [](const VulnRecord &a, const VulnRecord &b) {
        if (a.published != b.published) return a.published < b.published;
        return a.id < b.id;
    });
    size_t n_val = static_cast<size_t>(std::floor(static_cast<double>(rest.size()) * val_fraction));
    for (size_t i = 0; i < rest.size(); ++i)
        (i < n_val ? out.validation : out.test).push_back(std::move(rest[i]));
    if (out.train.empty()) throw EmptySplit("train");
    if (out.validation.empty()) throw EmptySplit("validation");
    if (out.test.empty()) throw EmptySplit("test");
    return out;
}

// --- suggestion hygiene ------------------------------------------------------

namespace detail {

inline bool comment_only(const std::string &text) {
    bool any = false;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        size_t b = line.find_first_not_of(" \t\r");
        if (b != std::string::npos) {
            any = true;
            std::string rest = line.substr(b);
            bool marker = rest.rfind("//", 0) == 0 || rest.rfind("/*", 0) == 0 ||
                          rest.rfind("*", 0) == 0 || rest.rfind("#", 0) == 0;
            if (!marker) return false;
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return any;
}

} // namespace detail

/// Clear exact-duplicate suggestions (first occurrence wins) and suggestions
/// that consist only of code comments; cleared records are flagged for
/// regeneration.
inline std::vector<VulnRecord> dedup_suggestions(std::vector<VulnRecord> records) {
    std::set<std::string> seen;
    for (auto &r : records) {
        if (!r.suggestion) continue;
        bool clear = false;
        if (detail::comment_only(*r.suggestion)) clear = true;
        else if (!seen.insert(*r.suggestion).second) clear = true;
        if (clear) {
            r.suggestion.reset();
            r.suggestion_cleared = true;
        }
    }
    return records;
}

// --- class statistics --------------------------------------------------------

struct ClassStats {
    std::array<size_t, 4> counts{};
    std::array<double, 4> fractions{};
    size_t total = 0;
};

inline ClassStats stats(const std::vector<VulnRecord> &records) {
    ClassStats s;
    for (const auto &r : records) {
        ++s.counts[static_cast<size_t>(r.severity)];
        ++s.total;
    }
    for (size_t c = 0; c < 4; ++c)
        s.fractions[c] =
            s.total > 0 ? static_cast<double>(s.counts[c]) / static_cast<double>(s.total) : 0.0;
    return s;
}

} // namespace vulnassess
