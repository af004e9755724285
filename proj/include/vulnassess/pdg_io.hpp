#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "vulnassess/pdg.hpp"

namespace vulnassess {

using Json = nlohmann::json;

namespace detail {

inline const Json &require(const Json &j, const char *field, const std::string &path) {
    auto it = j.find(field);
    if (it == j.end()) throw SchemaViolation(path + "." + field, "missing field");
    return *it;
}

inline std::set<std::string> string_set(const Json &j, const std::string &path) {
    if (!j.is_array()) throw SchemaViolation(path, "expected array");
    std::set<std::string> out;
    for (const auto &e : j) {
        if (!e.is_string()) throw SchemaViolation(path, "expected string elements");
        out.insert(e.get<std::string>());
    }
    return out;
}

} // namespace detail

/// Validate and deserialize a dependence-graph interchange document.
inline Pdg load_pdg(const Json &doc) {
    Pdg g;
    const Json &fn = detail::require(doc, "function", "$");
    g.function.name = detail::require(fn, "name", "$.function").get<std::string>();
    const Json &params = detail::require(fn, "params", "$.function");
    for (const auto &p : params) g.function.params.push_back(p.get<std::string>());
    const Json &span = detail::require(fn, "span", "$.function");
    if (!span.is_array() || span.size() != 2)
        throw SchemaViolation("$.function.span", "expected [start,end]");
    g.function.source_span = {span[0].get<int>(), span[1].get<int>()};

    const Json &nodes = detail::require(doc, "nodes", "$");
    size_t idx = 0;
    for (const auto &n : nodes) {
        std::string path = "nodes[" + std::to_string(idx) + "]";
        Statement st;
        st.id = detail::require(n, "id", path).get<int>();
        if (st.id < 0) throw SchemaViolation(path + ".id", "negative id");
        if (g.nodes.count(st.id)) throw SchemaViolation(path + ".id", "duplicate node id");
        st.line = detail::require(n, "line", path).get<int>();
        if (st.line < 1) throw SchemaViolation(path + ".line", "lines are 1-based");
        st.end_line = st.line;
        auto kind = statement_kind_from(detail::require(n, "kind", path).get<std::string>());
        if (!kind) throw SchemaViolation(path + ".kind", "unknown kind");
        st.kind = *kind;
        st.text = detail::require(n, "text", path).get<std::string>();
        st.defs = detail::string_set(detail::require(n, "defs", path), path + ".defs");
        st.uses = detail::string_set(detail::require(n, "uses", path), path + ".uses");
        if (n.contains("callee")) st.callee = n["callee"].get<std::string>();
        if (st.kind == StatementKind::Call && !st.callee)
            throw SchemaViolation(path + ".callee", "call node without callee");
        g.nodes.insert(st.id);
        g.function.statements.push_back(std::move(st));
        ++idx;
    }
    std::sort(g.function.statements.begin(), g.function.statements.end(),
              [](const Statement &a, const Statement &b) { return a.id < b.id; });

    auto read_edges = [&](const char *field, std::set<std::pair<int, int>> &dst) {
        const Json &arr = detail::require(doc, field, "$");
        size_t i = 0;
        for (const auto &e : arr) {
            std::string path = std::string(field) + "[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 2) throw SchemaViolation(path, "expected [from,to]");
            int from = e[0].get<int>(), to = e[1].get<int>();
            if (!g.nodes.count(from)) throw SchemaViolation(path + ".from", "dangling endpoint");
            if (!g.nodes.count(to)) throw SchemaViolation(path + ".to", "dangling endpoint");
            dst.insert({from, to});
            ++i;
        }
    };
    read_edges("data_edges", g.data_edges);
    read_edges("control_edges", g.control_edges);
    return g;
}

inline Json store_pdg(const Pdg &g) {
    Json doc;
    doc["function"] = {{"name", g.function.name},
                       {"params", g.function.params},
                       {"span", {g.function.source_span.first, g.function.source_span.second}}};
    Json nodes = Json::array();
    for (const auto &s : g.function.statements) {
        Json n = {{"id", s.id},
                  {"line", s.line},
                  {"kind", to_string(s.kind)},
                  {"text", s.text},
                  {"defs", s.defs},
                  {"uses", s.uses}};
        if (s.callee) n["callee"] = *s.callee;
        nodes.push_back(std::move(n));
    }
    doc["nodes"] = std::move(nodes);
    auto edges = [](const std::set<std::pair<int, int>> &es) {
        Json arr = Json::array();
        for (const auto &[a, b] : es) arr.push_back({a, b});
        return arr;
    };
    doc["data_edges"] = edges(g.data_edges);
    doc["control_edges"] = edges(g.control_edges);
    return doc;
}

inline Pdg load_pdg_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    Json doc;
    try {
        in >> doc;
    } catch (const Json::exception &e) {
        throw SchemaViolation("$", e.what());
    }
    return load_pdg(doc);
}

} // namespace vulnassess
