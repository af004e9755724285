#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnassess/errors.hpp"

namespace vulnassess {

/// Three-part prompt for extracting vulnerability intention reports:
/// task instructions, output format specification, and a code placeholder.
struct PromptTemplate {
    std::string task_instructions;
    std::string output_format;
    std::string code_placeholder = "[CODE]";
    std::string version = "v1";

    std::string skeleton() const {
        return task_instructions + "\n\n" + output_format + "\n\nCode:\n" + code_placeholder + "\n";
    }
};

inline PromptTemplate default_prompt_template() {
    PromptTemplate t;
    t.task_instructions =
        "You are a software security engineer reviewing a C function for weaknesses. "
        "Analyze the code below and report the intention an attacker could realize "
        "through it. Base every statement on the code itself.";
    t.output_format =
        "Answer with exactly three labeled sections.\n"
        "Exploitability:\n"
        "Condition: <the condition that must hold before the flaw can be exploited>\n"
        "Way: <how an attacker can reach and drive the flawed code>\n"
        "Impact:\n"
        "<the consequence if exploitation succeeds, e.g. memory corruption, data "
        "disclosure, denial of service>\n"
        "Scope:\n"
        "<the boundary of the damage: component, process, or whole system>";
    t.version = "v1";
    return t;
}

/// Structured vulnerability intention report.
struct Vir {
    std::string condition; // EXP
    std::string way;       // EXP
    std::string impact;    // IMP
    std::string scope;     // SCO
    std::string provider_id;
    std::string template_version;

    bool operator==(const Vir &) const = default;
};

namespace detail {

inline std::string trim(const std::string &s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Strip leading list bullets / numbering / markdown noise from one line.
inline std::string strip_bullet(const std::string &line) {
    size_t i = 0;
    const size_t n = line.size();
    while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    if (j < n && (line[j] == '-' || line[j] == '*' || line[j] == '+' || line[j] == '>')) {
        ++j;
    } else if (j < n && std::isdigit(static_cast<unsigned char>(line[j]))) {
        size_t k = j;
        while (k < n && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
        if (k < n && (line[k] == '.' || line[k] == ')')) j = k + 1;
    }
    if (j > i && j < n && line[j] != ' ' && line[j] != '\t') j = i; // not a bullet
    while (j < n && (line[j] == ' ' || line[j] == '\t')) ++j;
    return line.substr(j);
}

/// If `line` opens a labeled block ("Impact:", "## Scope", ...), return the
/// label in lowercase plus any content following the colon.
inline std::optional<std::pair<std::string, std::string>>
match_label(const std::string &line, const std::vector<std::string> &labels) {
    std::string s = strip_bullet(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*')) s.erase(s.begin());
    s = trim(s);
    std::string low = lower(s);
    for (const auto &label : labels) {
        if (low.rfind(label, 0) != 0) continue;
        size_t after = label.size();
        // tolerate markdown emphasis directly after the word
        size_t k = after;
        while (k < s.size() && s[k] == '*') ++k;
        if (k < s.size() && s[k] != ':' && s[k] != ' ' && s[k] != '\t' && s[k] != '\r') continue;
        while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
        if (k < s.size() && s[k] == ':') ++k;
        return std::make_pair(label, trim(s.substr(k)));
    }
    return std::nullopt;
}

} // namespace detail

/// Substitute the code segment into the template. A literal occurrence of the
/// placeholder token inside the code is escaped so the substitution point
/// stays unambiguous.
inline std::string build_prompt(const std::string &code, const PromptTemplate &t) {
    if (detail::trim(code).empty()) throw EmptyCode();
    std::string body = code;
    if (!t.code_placeholder.empty()) {
        std::string escaped = t.code_placeholder;
        escaped.insert(1, "\\");
        size_t pos = 0;
        while ((pos = body.find(t.code_placeholder, pos)) != std::string::npos) {
            body.replace(pos, t.code_placeholder.size(), escaped);
            pos += escaped.size();
        }
    }
    std::string prompt = t.skeleton();
    size_t slot = prompt.find(t.code_placeholder);
    if (slot == std::string::npos) throw Error("template lacks its code placeholder");
    prompt.replace(slot, t.code_placeholder.size(), body);
    return prompt;
}

/// Parse a provider response into a Vir. Sections may appear in any order and
/// are located by their case-insensitive headers.
inline Vir parse_vir(const std::string &response) {
    static const std::vector<std::string> sections = {"exploitability", "impact", "scope"};

    std::vector<std::string> lines;
    size_t pos = 0;
    while (true) {
        size_t nl = response.find('\n', pos);
        lines.push_back(response.substr(pos, nl == std::string::npos ? nl : nl - pos));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }

    std::map<std::string, std::string> bodies;
    std::string current;
    for (const auto &raw : lines) {
        auto m = detail::match_label(raw, sections);
        if (m) {
            current = m->first;
            if (!bodies.count(current)) bodies[current] = "";
            if (!m->second.empty()) bodies[current] = m->second;
            continue;
        }
        if (current.empty()) continue;
        std::string stripped = detail::strip_bullet(raw);
        if (detail::trim(stripped).empty()) continue;
        auto &b = bodies[current];
        if (!b.empty()) b += "\n";
        b += detail::trim(stripped);
    }

    for (const auto &name : sections) {
        if (!bodies.count(name)) throw MissingSection(name);
        if (detail::trim(bodies[name]).empty()) throw EmptySection(name);
    }

    Vir v;
    v.impact = bodies["impact"];
    v.scope = bodies["scope"];

    // EXP(condition, way): explicit labels win, otherwise the first sentence
    // is the condition and the remainder the way.
    const std::string &exp = bodies["exploitability"];
    static const std::vector<std::string> exp_labels = {"condition", "way"};
    std::map<std::string, std::string> parts;
    std::string cur;
    size_t p = 0;
    while (true) {
        size_t nl = exp.find('\n', p);
        std::string line = exp.substr(p, nl == std::string::npos ? nl : nl - p);
        auto m = detail::match_label(line, exp_labels);
        if (m) {
            cur = m->first;
            parts[cur] = m->second;
        } else if (!cur.empty() && !detail::trim(line).empty()) {
            auto &b = parts[cur];
            if (!b.empty()) b += "\n";
            b += detail::trim(line);
        }
        if (nl == std::string::npos) break;
        p = nl + 1;
    }
    if (parts.count("condition") || parts.count("way")) {
        v.condition = parts.count("condition") ? parts["condition"] : "";
        v.way = parts.count("way") ? parts["way"] : "";
    } else {
        size_t dot = std::string::npos;
        for (size_t i = 0; i + 1 <= exp.size(); ++i) {
            if (exp[i] != '.') continue;
            if (i + 1 == exp.size() || exp[i + 1] == ' ' || exp[i + 1] == '\n') {
                dot = i;
                break;
            }
        }
        if (dot == std::string::npos) {
            v.condition = detail::trim(exp);
        } else {
            v.condition = detail::trim(exp.substr(0, dot + 1));
            v.way = detail::trim(exp.substr(dot + 1));
        }
    }
    if (detail::trim(v.condition).empty() && detail::trim(v.way).empty())
        throw EmptySection("exploitability");
    return v;
}

/// Canonical rendering; parse_vir() recovers the same report from it.
inline std::string render_vir(const Vir &v) {
    return "Exploitability:\nCondition: " + v.condition + "\nWay: " + v.way + "\nImpact:\n" +
           v.impact + "\nScope:\n" + v.scope;
}

inline nlohmann::json store_vir(const Vir &v) {
    return {{"exploitability", {{"condition", v.condition}, {"way", v.way}}},
            {"impact", v.impact},
            {"scope", v.scope},
            {"provider_id", v.provider_id},
            {"template_version", v.template_version}};
}

inline Vir load_vir(const nlohmann::json &doc) {
    Vir v;
    const auto &exp = doc.at("exploitability");
    v.condition = exp.at("condition").get<std::string>();
    v.way = exp.at("way").get<std::string>();
    v.impact = doc.at("impact").get<std::string>();
    v.scope = doc.at("scope").get<std::string>();
    v.provider_id = doc.value("provider_id", "");
    v.template_version = doc.value("template_version", "");
    return v;
}

} // namespace vulnassess
