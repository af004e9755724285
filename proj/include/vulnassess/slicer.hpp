#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vulnassess/pdg.hpp"

namespace vulnassess {

enum class OperatorCategory { Arithmetic, Bitwise, CompoundAssignment, IncrementDecrement };

inline const char *to_string(OperatorCategory c) {
    switch (c) {
        case OperatorCategory::Arithmetic: return "arithmetic";
        case OperatorCategory::Bitwise: return "bitwise";
        case OperatorCategory::CompoundAssignment: return "compound-assignment";
        case OperatorCategory::IncrementDecrement: return "increment-decrement";
    }
    return "arithmetic";
}

inline std::optional<OperatorCategory> operator_category_from(const std::string &s) {
    if (s == "arithmetic") return OperatorCategory::Arithmetic;
    if (s == "bitwise") return OperatorCategory::Bitwise;
    if (s == "compound-assignment") return OperatorCategory::CompoundAssignment;
    if (s == "increment-decrement") return OperatorCategory::IncrementDecrement;
    return std::nullopt;
}

/// System APIs that frequently end up misused; callers may override the list.
inline const std::set<std::string> &default_api_names() {
    static const std::set<std::string> names = {
        "strcpy",  "strncpy", "strcat",  "strncat", "sprintf",  "snprintf", "vsprintf",
        "memcpy",  "memmove", "memset",  "malloc",  "calloc",   "realloc",  "free",
        "alloca",  "system",  "popen",   "execl",   "execlp",   "execle",   "execv",
        "execvp",  "execvpe", "execve",  "read",    "recv",     "recvfrom", "readlink",
        "fopen",   "open",    "gets",    "fgets",   "scanf",    "sscanf",   "fscanf",
        "strtok",  "atoi",    "atol",    "getenv",  "write",    "send"};
    return names;
}

struct PoiConfig {
    std::set<std::string> api_names = default_api_names();
    std::set<OperatorCategory> enabled_categories = {
        OperatorCategory::Arithmetic, OperatorCategory::Bitwise,
        OperatorCategory::CompoundAssignment, OperatorCategory::IncrementDecrement};
};

/// Load an API list file: one identifier per line, '#' starts a comment.
inline std::set<std::string> load_api_names(std::istream &in) {
    std::set<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        names.insert(line.substr(b, e - b + 1));
    }
    return names;
}

enum class PoiKind { ApiCall, Operator };

struct Poi {
    int node = 0;
    PoiKind kind = PoiKind::ApiCall;
    std::string detail; // callee name or operator token
    std::optional<OperatorCategory> category;
};

enum class Provenance { Poi, Origin, Effect };

inline const char *to_string(Provenance p) {
    switch (p) {
        case Provenance::Poi: return "poi";
        case Provenance::Origin: return "origin";
        case Provenance::Effect: return "effect";
    }
    return "poi";
}

struct Idg {
    std::string pdg_ref; // function name
    std::vector<Poi> pois;
    std::set<int> retained_nodes;
    std::map<int, Provenance> provenance;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<OperatorCategory> categorize_operator(const std::string &tok) {
    static const std::set<std::string> compound = {"+=", "-=", "*=", "/=", "%=",
                                                   "&=", "|=", "^=", "<<=", ">>="};
    static const std::set<std::string> incdec = {"++", "--"};
    static const std::set<std::string> arith = {"+", "-", "*", "/", "%"};
    static const std::set<std::string> bitwise = {"&", "|", "^", "~", "<<", ">>"};
    if (compound.count(tok)) return OperatorCategory::CompoundAssignment;
    if (incdec.count(tok)) return OperatorCategory::IncrementDecrement;
    if (arith.count(tok)) return OperatorCategory::Arithmetic;
    if (bitwise.count(tok)) return OperatorCategory::Bitwise;
    return std::nullopt;
}

} // namespace detail

/// Detect points of interest: calls into the configured API set plus
/// statements whose text contains an enabled operator category. Literals and
/// comments never match (the token scan masks them).
inline std::vector<Poi> find_pois(const Pdg &pdg, const PoiConfig &cfg) {
    std::vector<Poi> pois;
    for (const auto &st : pdg.function.statements) {
        if (st.callee && cfg.api_names.count(*st.callee))
            pois.push_back({st.id, PoiKind::ApiCall, *st.callee, std::nullopt});

        std::map<OperatorCategory, std::string> found;
        for (const auto &tok : lex(st.text)) {
            if (tok.kind != TokKind::Punct) continue;
            auto cat = detail::categorize_operator(tok.text);
            if (cat && cfg.enabled_categories.count(*cat) && !found.count(*cat))
                found.emplace(*cat, tok.text);
        }
        for (const auto &[cat, tok] : found)
            pois.push_back({st.id, PoiKind::Operator, tok, cat});
    }
    std::stable_sort(pois.begin(), pois.end(),
                     [](const Poi &a, const Poi &b) { return a.node < b.node; });
    return pois;
}

namespace detail {

inline std::set<int> closure(const Pdg &pdg, int node, bool reverse, bool with_control) {
    if (!pdg.nodes.count(node)) throw UnknownNode(node);
    std::map<int, std::vector<int>> adj;
    auto add = [&](const std::set<std::pair<int, int>> &edges) {
        for (const auto &[a, b] : edges) reverse ? adj[b].push_back(a) : adj[a].push_back(b);
    };
    add(pdg.data_edges);
    if (with_control) add(pdg.control_edges);

    std::set<int> seen{node};
    std::deque<int> work{node};
    while (!work.empty()) {
        int cur = work.front();
        work.pop_front();
        auto it = adj.find(cur);
        if (it == adj.end()) continue;
        for (int nxt : it->second)
            if (seen.insert(nxt).second) work.push_back(nxt);
    }
    return seen;
}

} // namespace detail

/// Nodes the given node's input data is built from: transitive predecessors
/// over data edges only, the node itself included.
inline std::set<int> trace_origins(const Pdg &pdg, int node) {
    return detail::closure(pdg, node, /*reverse=*/true, /*with_control=*/false);
}

/// Nodes the given node's output reaches: transitive successors over data and
/// control edges, the node itself included.
inline std::set<int> trace_effects(const Pdg &pdg, int node) {
    return detail::closure(pdg, node, /*reverse=*/false, /*with_control=*/true);
}

/// Unite each POI with its origins and effects into the intention dependence
/// graph. An empty POI list yields an empty retained set plus a warning so
/// that callers can fall back to the whole function.
inline Idg build_idg(const Pdg &pdg, const std::vector<Poi> &pois) {
    Idg idg;
    idg.pdg_ref = pdg.function.name;
    idg.pois = pois;
    if (pois.empty()) {
        idg.warnings.push_back("DegenerateSlice: no points of interest; downstream consumers "
                               "should use the whole function body");
        return idg;
    }
    std::set<int> origin_nodes, effect_nodes, poi_nodes;
    for (const auto &p : pois) {
        if (!pdg.nodes.count(p.node)) throw UnknownNode(p.node);
        poi_nodes.insert(p.node);
        auto o = trace_origins(pdg, p.node);
        auto e = trace_effects(pdg, p.node);
        origin_nodes.insert(o.begin(), o.end());
        effect_nodes.insert(e.begin(), e.end());
    }
    idg.retained_nodes = poi_nodes;
    idg.retained_nodes.insert(origin_nodes.begin(), origin_nodes.end());
    idg.retained_nodes.insert(effect_nodes.begin(), effect_nodes.end());
    for (int n : idg.retained_nodes) {
        if (poi_nodes.count(n)) idg.provenance[n] = Provenance::Poi;
        else if (origin_nodes.count(n)) idg.provenance[n] = Provenance::Origin;
        else idg.provenance[n] = Provenance::Effect;
    }
    return idg;
}

/// Source lines covered by the retained nodes, ascending and deduplicated.
inline std::set<int> retained_lines(const Idg &idg, const FunctionModel &f) {
    std::set<int> lines;
    for (const auto &st : f.statements) {
        if (!idg.retained_nodes.count(st.id)) continue;
        for (int l = st.line; l <= std::max(st.line, st.end_line); ++l) lines.insert(l);
    }
    return lines;
}

/// Render the retained slice back to a code segment: the signature line is
/// always prepended, retained source lines follow in ascending order.
inline std::string render_idg(const Idg &idg, const FunctionModel &f) {
    std::string out = !f.signature.empty() ? f.signature : f.name + "(...)";
    std::map<int, std::string> by_line;
    if (f.source_lines.empty()) {
        // rebuilt from a document: fall back to per-node text
        for (const auto &st : f.statements) {
            if (!idg.retained_nodes.count(st.id)) continue;
            auto &slot = by_line[st.line];
            if (!slot.empty()) slot += " ";
            slot += st.text;
        }
    } else {
        for (int l : retained_lines(idg, f)) {
            if (l >= 1 && l <= static_cast<int>(f.source_lines.size()))
                by_line[l] = f.source_lines[static_cast<size_t>(l - 1)];
        }
    }
    for (const auto &[line, text] : by_line) {
        out += "\n";
        out += text;
    }
    return out;
}

/// Whole-function rendering used by the empty-slice fallback.
inline std::string render_whole_function(const FunctionModel &f) {
    if (!f.source_lines.empty()) {
        std::string out;
        for (size_t i = 0; i < f.source_lines.size(); ++i) {
            if (i) out += "\n";
            out += f.source_lines[i];
        }
        return out;
    }
    std::string out = !f.signature.empty() ? f.signature : f.name + "(...)";
    for (const auto &st : f.statements) {
        out += "\n";
        out += st.text;
    }
    return out;
}

// --- IDG interchange -------------------------------------------------------

inline nlohmann::json store_idg(const Idg &idg, const FunctionModel &f) {
    nlohmann::json doc;
    doc["function"] = idg.pdg_ref;
    nlohmann::json pois = nlohmann::json::array();
    for (const auto &p : idg.pois) {
        nlohmann::json pj = {{"node", p.node},
                             {"kind", p.kind == PoiKind::ApiCall ? "api-call" : "operator"},
                             {"detail", p.detail}};
        if (p.category) pj["category"] = to_string(*p.category);
        pois.push_back(std::move(pj));
    }
    doc["pois"] = std::move(pois);
    doc["retained_lines"] = retained_lines(idg, f);
    nlohmann::json prov = nlohmann::json::object();
    for (const auto &[node, tag] : idg.provenance) prov[std::to_string(node)] = to_string(tag);
    doc["provenance"] = std::move(prov);
    doc["code"] =
        idg.retained_nodes.empty() ? render_whole_function(f) : render_idg(idg, f);
    if (!idg.warnings.empty()) doc["warnings"] = idg.warnings;
    return doc;
}

} // namespace vulnassess
