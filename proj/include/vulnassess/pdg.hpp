#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vulnassess/errors.hpp"
#include "vulnassess/lexer.hpp"

namespace vulnassess {

enum class StatementKind { Decl, Assign, Call, Condition, LoopHeader, Return, Other };

inline const char *to_string(StatementKind k) {
    switch (k) {
        case StatementKind::Decl: return "decl";
        case StatementKind::Assign: return "assign";
        case StatementKind::Call: return "call";
        case StatementKind::Condition: return "condition";
        case StatementKind::LoopHeader: return "loop-header";
        case StatementKind::Return: return "return";
        case StatementKind::Other: return "other";
    }
    return "other";
}

inline std::optional<StatementKind> statement_kind_from(const std::string &s) {
    if (s == "decl") return StatementKind::Decl;
    if (s == "assign") return StatementKind::Assign;
    if (s == "call") return StatementKind::Call;
    if (s == "condition") return StatementKind::Condition;
    if (s == "loop-header") return StatementKind::LoopHeader;
    if (s == "return") return StatementKind::Return;
    if (s == "other") return StatementKind::Other;
    return std::nullopt;
}

struct Statement {
    int id = 0;   // dense, unique within a function
    int line = 1; // 1-based, first source line of the statement
    StatementKind kind = StatementKind::Other;
    std::string text; // verbatim source text
    std::set<std::string> defs;
    std::set<std::string> uses;
    std::optional<std::string> callee; // present when the statement contains a call

    // Structural details kept by the parser; not part of the interchange schema.
    std::optional<int> control_parent; // nearest enclosing condition/loop-header
    int arm = 0;                       // 0 = then/body, 1 = else
    bool is_for_step = false;          // desugared third clause of a for(;;)
    int end_line = 1;                  // last source line covered by `text`
    std::set<std::string> may_defs;    // defs that do not kill (e.g. &x, p[i]=...)
    std::optional<std::string> assign_target; // LHS base of a top-level assignment
};

struct FunctionModel {
    std::string name;
    std::vector<std::string> params;
    std::vector<Statement> statements;
    std::pair<int, int> source_span{1, 1};

    // Raw text carried for rendering; absent for models rebuilt from documents.
    std::vector<std::string> source_lines;
    std::string signature;
};

struct Pdg {
    FunctionModel function;
    std::set<int> nodes;
    std::set<std::pair<int, int>> data_edges;
    std::set<std::pair<int, int>> control_edges;
};

struct CallGraph {
    // (caller function name, callee function name, call-site node id)
    std::set<std::tuple<std::string, std::string, int>> edges;
    // (callee name, assigned identifier, node id)
    std::set<std::tuple<std::string, std::string, int>> returns_into;
};

// ---------------------------------------------------------------------------
// def/use extraction over a token span
// ---------------------------------------------------------------------------

namespace detail {

struct DefUse {
    std::set<std::string> defs;
    std::set<std::string> may_defs;
    std::set<std::string> uses;
    std::optional<std::string> callee;
    std::optional<std::string> assign_target;
};

inline bool is_assign_op(const Token &t) {
    if (t.kind != TokKind::Punct) return false;
    static const char *ops[] = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
    for (auto *o : ops)
        if (t.text == o) return true;
    return false;
}

inline bool punct_is(const Token &t, const char *s) {
    return t.kind == TokKind::Punct && t.text == s;
}

/// Walk backwards from `idx` (inclusive) over a postfix lvalue chain like
/// `p->q[i].r`; returns the index of the base identifier, or -1.
inline int lvalue_base_before(const std::vector<Token> &toks, int idx, int lo) {
    int j = idx;
    while (j >= lo) {
        const Token &t = toks[j];
        if (t.kind == TokKind::Ident) {
            if (j - 1 >= lo && (punct_is(toks[j - 1], "->") || punct_is(toks[j - 1], "."))) {
                j -= 2;
                continue;
            }
            return j;
        }
        if (punct_is(t, "]")) {
            int depth = 1;
            --j;
            while (j >= lo && depth > 0) {
                if (punct_is(toks[j], "]")) ++depth;
                if (punct_is(toks[j], "[")) --depth;
                --j;
            }
            continue;
        }
        if (punct_is(t, ")")) {
            int depth = 1;
            --j;
            while (j >= lo && depth > 0) {
                if (punct_is(toks[j], ")")) ++depth;
                if (punct_is(toks[j], "(")) --depth;
                --j;
            }
            continue;
        }
        return -1;
    }
    return -1;
}

/// Extract name-level defs/uses from the token range [lo, hi).
/// Pointer and member accesses resolve to their base identifier.
inline DefUse analyze_defs_uses(const std::vector<Token> &toks, int lo, int hi, bool decl_like) {
    DefUse du;
    enum Role { None, Callee, DefBase, TypeName };
    std::vector<Role> role(static_cast<size_t>(hi), None);

    auto is_word = [&](int i) { return toks[i].kind == TokKind::Ident && !is_c_keyword(toks[i].text); };

    // call targets: identifier directly followed by '('
    for (int i = lo; i < hi - 1; ++i) {
        if (is_word(i) && punct_is(toks[i + 1], "(")) {
            role[i] = Callee;
            if (!du.callee) du.callee = toks[i].text;
        }
    }

    // assignment targets
    bool saw_assign = false;
    for (int i = lo; i < hi; ++i) {
        if (!is_assign_op(toks[i])) continue;
        int base = lvalue_base_before(toks, i - 1, lo);
        if (base < 0) continue;
        bool decorated = base != i - 1;
        int k = base - 1;
        while (k >= lo && punct_is(toks[k], "*")) { // deref chain on the left
            decorated = true;
            --k;
        }
        const std::string &name = toks[base].text;
        if (role[base] == Callee) continue;
        du.defs.insert(name);
        if (decorated) du.may_defs.insert(name);
        if (decorated || toks[i].text != "=") du.uses.insert(name);
        role[base] = DefBase;
        if (!saw_assign) {
            du.assign_target = name;
            saw_assign = true;
        }
    }

    // increment / decrement
    for (int i = lo; i < hi; ++i) {
        if (!punct_is(toks[i], "++") && !punct_is(toks[i], "--")) continue;
        int base = -1;
        if (i - 1 >= lo) base = lvalue_base_before(toks, i - 1, lo);
        if (base < 0 && i + 1 < hi && is_word(i + 1)) base = i + 1;
        if (base < 0 || !is_word(base)) continue;
        const std::string &name = toks[base].text;
        du.defs.insert(name);
        du.uses.insert(name);
        if (base != i - 1 && base != i + 1) du.may_defs.insert(name);
        if (role[base] == None) role[base] = DefBase;
    }

    // unary & — address taken: use plus potential def
    for (int i = lo; i < hi - 1; ++i) {
        if (!punct_is(toks[i], "&")) continue;
        bool unary = i == lo;
        if (!unary) {
            const Token &p = toks[i - 1];
            unary = p.kind == TokKind::Punct
                        ? !(p.text == ")" || p.text == "]")
                        : p.kind == TokKind::Ident && is_c_keyword(p.text);
        }
        if (!unary) continue;
        if (is_word(i + 1)) {
            du.defs.insert(toks[i + 1].text);
            du.may_defs.insert(toks[i + 1].text);
            du.uses.insert(toks[i + 1].text);
        }
    }

    if (decl_like) {
        // mark type-name identifiers (identifier followed by another identifier or '*')
        for (int i = lo; i < hi - 1; ++i) {
            if (!is_word(i) || role[i] != None) continue;
            if (toks[i + 1].kind == TokKind::Ident || punct_is(toks[i + 1], "*")) role[i] = TypeName;
        }
        // declarators without initializer: last top-level identifier of each
        // comma group that carries no '='
        int depth = 0, last = -1;
        bool group_assigned = false;
        auto flush = [&]() {
            if (!group_assigned && last >= 0) {
                du.defs.insert(toks[last].text);
                role[last] = DefBase;
            }
            last = -1;
            group_assigned = false;
        };
        for (int i = lo; i < hi; ++i) {
            if (toks[i].kind == TokKind::Punct) {
                const std::string &p = toks[i].text;
                if (p == "(" || p == "[") ++depth;
                else if (p == ")" || p == "]") --depth;
                else if (p == "," && depth == 0) flush();
                else if (is_assign_op(toks[i]) && depth == 0) group_assigned = true;
                continue;
            }
            if (depth == 0 && !group_assigned && is_word(i) && role[i] != TypeName &&
                role[i] != Callee)
                last = i;
        }
        flush();
    }

    // everything else is a use; member names after '->' or '.' are not variables
    for (int i = lo; i < hi; ++i) {
        if (!is_word(i) || role[i] != None) continue;
        if (i > lo && (punct_is(toks[i - 1], "->") || punct_is(toks[i - 1], "."))) continue;
        du.uses.insert(toks[i].text);
    }
    return du;
}

} // namespace detail

// ---------------------------------------------------------------------------
// parse_function
// ---------------------------------------------------------------------------

namespace detail {

struct FnParser {
    const std::vector<Token> &toks;
    const std::string &src;
    std::vector<Statement> out;

    int match_forward(int open, const char *o, const char *c) const {
        int depth = 0;
        for (int i = open; i < static_cast<int>(toks.size()); ++i) {
            if (punct_is(toks[i], o)) ++depth;
            else if (punct_is(toks[i], c) && --depth == 0) return i;
        }
        throw MalformedFunction(std::string("unbalanced '") + o + "'");
    }

    std::string span_text(int lo, int hi) const { // [lo, hi)
        if (lo >= hi) return "";
        return src.substr(toks[lo].begin, toks[hi - 1].end - toks[lo].begin);
    }

    Statement &emit(StatementKind kind, int lo, int hi, std::optional<int> parent, int arm,
                    bool decl_like) {
        Statement st;
        st.id = static_cast<int>(out.size());
        st.kind = kind;
        st.line = lo < hi ? toks[lo].line : 1;
        st.end_line = lo < hi ? toks[hi - 1].line : st.line;
        st.text = span_text(lo, hi);
        st.control_parent = parent;
        st.arm = arm;
        auto du = analyze_defs_uses(toks, lo, hi, decl_like);
        st.defs = std::move(du.defs);
        st.uses = std::move(du.uses);
        st.may_defs = std::move(du.may_defs);
        st.callee = du.callee;
        st.assign_target = du.assign_target;
        if (st.callee && kind != StatementKind::Condition && kind != StatementKind::LoopHeader &&
            kind != StatementKind::Return)
            st.kind = StatementKind::Call;
        out.push_back(std::move(st));
        return out.back();
    }

    bool looks_like_decl(int lo, int hi) const {
        if (lo >= hi) return false;
        if (toks[lo].kind == TokKind::Ident && is_type_keyword(toks[lo].text)) return true;
        if (toks[lo].kind != TokKind::Ident || is_c_keyword(toks[lo].text)) return false;
        // typedef'd type: identifier followed by another identifier or by '*' then identifier
        int i = lo + 1;
        while (i < hi && punct_is(toks[i], "*")) ++i;
        return i > lo + 1 ? i < hi && toks[i].kind == TokKind::Ident
                          : i < hi && toks[i].kind == TokKind::Ident;
    }

    int find_semicolon(int from) const {
        int depth = 0;
        for (int i = from; i < static_cast<int>(toks.size()); ++i) {
            if (punct_is(toks[i], "(") || punct_is(toks[i], "[")) ++depth;
            else if (punct_is(toks[i], ")") || punct_is(toks[i], "]")) --depth;
            else if (punct_is(toks[i], ";") && depth == 0) return i;
            else if (punct_is(toks[i], "{") || punct_is(toks[i], "}")) break;
        }
        return -1;
    }

    // Parses statements in [i, end) where `end` points at the closing '}' of
    // the enclosing block (or one past the last token for single statements).
    int parse_one(int i, int end, std::optional<int> parent, int arm) {
        const Token &t = toks[i];
        if (t.kind == TokKind::Ident) {
            if (t.text == "goto") throw UnsupportedConstruct("goto", t.line);
            if (t.text == "if" || t.text == "while" || t.text == "switch") {
                int open = i + 1;
                if (open >= end || !punct_is(toks[open], "("))
                    throw MalformedFunction("'" + t.text + "' without condition at line " +
                                            std::to_string(t.line));
                int close = match_forward(open, "(", ")");
                StatementKind kind = t.text == "if" ? StatementKind::Condition
                                     : t.text == "while" ? StatementKind::LoopHeader
                                                         : StatementKind::Other;
                // switch bodies keep the surrounding control parent
                bool governs = kind != StatementKind::Other;
                int hdr = emit(kind, i, close + 1, parent, arm, false).id;
                int next = parse_body(close + 1, end, governs ? std::optional<int>(hdr) : parent,
                                      governs ? 0 : arm);
                if (t.text == "if" && next < end && toks[next].kind == TokKind::Ident &&
                    toks[next].text == "else")
                    next = parse_body(next + 1, end, hdr, 1);
                return next;
            }
            if (t.text == "for") {
                int open = i + 1;
                if (open >= end || !punct_is(toks[open], "("))
                    throw MalformedFunction("'for' without header at line " + std::to_string(t.line));
                int close = match_forward(open, "(", ")");
                int semi1 = -1, semi2 = -1, depth = 0;
                for (int k = open + 1; k < close; ++k) {
                    if (punct_is(toks[k], "(")) ++depth;
                    else if (punct_is(toks[k], ")")) --depth;
                    else if (punct_is(toks[k], ";") && depth == 0) {
                        if (semi1 < 0) semi1 = k;
                        else if (semi2 < 0) semi2 = k;
                    }
                }
                if (semi1 < 0 || semi2 < 0)
                    throw MalformedFunction("'for' header needs two ';' at line " +
                                            std::to_string(t.line));
                if (semi1 > open + 1)
                    emit(StatementKind::Assign, open + 1, semi1, parent, arm,
                         looks_like_decl(open + 1, semi1));
                int hdr = emit(StatementKind::LoopHeader, semi1 + 1, std::max(semi1 + 1, semi2),
                               parent, arm, false)
                              .id;
                if (out[hdr].text.empty()) { // for(;;): keep the header textual
                    out[hdr].text = "for (;;)";
                    out[hdr].line = t.line;
                    out[hdr].end_line = t.line;
                }
                if (semi2 + 1 < close)
                    emit(StatementKind::Assign, semi2 + 1, close, hdr, 0, false).is_for_step = true;
                return parse_body(close + 1, end, hdr, 0);
            }
            if (t.text == "do") { // best-effort: body flows to the trailing condition
                int next = parse_body(i + 1, end, parent, arm);
                if (next < end && toks[next].kind == TokKind::Ident && toks[next].text == "while") {
                    int open = next + 1;
                    int close = match_forward(open, "(", ")");
                    emit(StatementKind::LoopHeader, next, close + 1, parent, arm, false);
                    next = close + 1;
                    if (next < end && punct_is(toks[next], ";")) ++next;
                }
                return next;
            }
            if (t.text == "return") {
                int semi = find_semicolon(i);
                if (semi < 0) throw MalformedFunction("missing ';' after return at line " +
                                                      std::to_string(t.line));
                emit(StatementKind::Return, i, semi + 1, parent, arm, false);
                return semi + 1;
            }
            if (t.text == "case" || t.text == "default") { // skip labels
                int k = i;
                while (k < end && !punct_is(toks[k], ":")) ++k;
                return k + 1;
            }
        }
        if (punct_is(t, "{")) {
            int close = match_forward(i, "{", "}");
            int k = i + 1;
            while (k < close) k = parse_one(k, close, parent, arm);
            return close + 1;
        }
        if (punct_is(t, ";")) return i + 1; // empty statement

        int semi = find_semicolon(i);
        if (semi < 0) {
            // cannot segment further: sweep to the next ';', '{' or '}' as one
            // opaque statement with a best-effort use set
            int k = i;
            while (k < end && !punct_is(toks[k], ";") && !punct_is(toks[k], "{") &&
                   !punct_is(toks[k], "}"))
                ++k;
            Statement &st = emit(StatementKind::Other, i, std::max(k, i + 1), parent, arm, false);
            st.defs.clear();
            st.may_defs.clear();
            st.uses.clear();
            for (int j = i; j < std::max(k, i + 1); ++j)
                if (toks[j].kind == TokKind::Ident && !is_c_keyword(toks[j].text))
                    st.uses.insert(toks[j].text);
            return punct_is(toks[std::min(k, end - 1)], ";") ? k + 1 : k;
        }
        bool decl_like = looks_like_decl(i, semi);
        StatementKind kind = StatementKind::Other;
        if (decl_like) kind = StatementKind::Decl;
        else {
            for (int k = i; k < semi; ++k) {
                if (detail::is_assign_op(toks[k]) || punct_is(toks[k], "++") ||
                    punct_is(toks[k], "--")) {
                    kind = StatementKind::Assign;
                    break;
                }
            }
        }
        emit(kind, i, semi + 1, parent, arm, decl_like);
        return semi + 1;
    }

    // A body is either a braced block or a single statement.
    int parse_body(int i, int end, std::optional<int> parent, int arm) {
        if (i >= end) return i;
        if (punct_is(toks[i], "{")) {
            int close = match_forward(i, "{", "}");
            int k = i + 1;
            while (k < close) k = parse_one(k, close, parent, arm);
            return close + 1;
        }
        if (punct_is(toks[i], ";")) return i + 1; // empty body
        return parse_one(i, end, parent, arm);
    }
};

} // namespace detail

/// Parse one syntactically complete C-subset function into a statement model.
inline FunctionModel parse_function(const std::string &source,
                                    std::vector<std::string> *warnings = nullptr) {
    std::vector<std::string> warn_local;
    auto toks = lex(source, warnings ? warnings : &warn_local);
    if (toks.empty()) throw MalformedFunction("no tokens");

    // body = first top-level '{'
    int body_open = -1, paren = 0;
    for (int i = 0; i < static_cast<int>(toks.size()); ++i) {
        if (detail::punct_is(toks[i], "(")) ++paren;
        else if (detail::punct_is(toks[i], ")")) --paren;
        else if (detail::punct_is(toks[i], "{") && paren == 0) {
            body_open = i;
            break;
        }
    }
    if (body_open < 0) throw MalformedFunction("no body braces");

    // parameter list: balanced (...) group ending directly before the body
    if (body_open == 0 || !detail::punct_is(toks[body_open - 1], ")"))
        throw MalformedFunction("no parameter list before body");
    int close = body_open - 1, depth = 0, open = -1;
    for (int i = close; i >= 0; --i) {
        if (detail::punct_is(toks[i], ")")) ++depth;
        else if (detail::punct_is(toks[i], "(") && --depth == 0) {
            open = i;
            break;
        }
    }
    if (open <= 0 || toks[open - 1].kind != TokKind::Ident || is_c_keyword(toks[open - 1].text))
        throw MalformedFunction("cannot locate function name");

    FunctionModel f;
    f.name = toks[open - 1].text;
    f.signature = source.substr(toks[0].begin, toks[close].end - toks[0].begin);

    // parameter names: last identifier of each comma group, array brackets skipped
    int d = 0, last = -1;
    for (int i = open + 1; i < close; ++i) {
        const Token &t = toks[i];
        if (t.kind == TokKind::Punct) {
            if (t.text == "(" || t.text == "[") ++d;
            else if (t.text == ")" || t.text == "]") --d;
            else if (t.text == "," && d == 0) {
                if (last >= 0) f.params.push_back(toks[last].text);
                last = -1;
            }
            continue;
        }
        if (d == 0 && t.kind == TokKind::Ident && !is_c_keyword(t.text)) last = i;
    }
    if (last >= 0) f.params.push_back(toks[last].text);

    detail::FnParser parser{toks, source, {}};
    int body_close = parser.match_forward(body_open, "{", "}");
    int k = body_open + 1;
    while (k < body_close) k = parser.parse_one(k, body_close, std::nullopt, 0);
    f.statements = std::move(parser.out);
    f.source_span = {toks.front().line, toks[body_close].line};

    size_t pos = 0;
    while (true) {
        size_t nl = source.find('\n', pos);
        f.source_lines.push_back(source.substr(pos, nl == std::string::npos ? nl : nl - pos));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return f;
}

/// Split a translation unit into top-level function definition chunks.
/// Declarations, globals and typedefs are skipped.
inline std::vector<std::string> split_functions(const std::string &source) {
    auto toks = lex(source);
    std::vector<std::string> chunks;
    int paren = 0;
    size_t chunk_start = 0;
    for (int i = 0; i < static_cast<int>(toks.size()); ++i) {
        const Token &t = toks[i];
        if (detail::punct_is(t, "(")) ++paren;
        else if (detail::punct_is(t, ")")) --paren;
        else if (detail::punct_is(t, ";") && paren == 0) {
            chunk_start = t.end; // a top-level ';' ends a non-function chunk
        } else if (detail::punct_is(t, "{") && paren == 0) {
            bool is_fn = i > 0 && detail::punct_is(toks[i - 1], ")");
            int depth = 0, j = i;
            for (; j < static_cast<int>(toks.size()); ++j) {
                if (detail::punct_is(toks[j], "{")) ++depth;
                else if (detail::punct_is(toks[j], "}") && --depth == 0) break;
            }
            if (j >= static_cast<int>(toks.size())) break; // unbalanced; give up on the rest
            if (is_fn) {
                size_t lo = chunk_start;
                while (lo < source.size() &&
                       (source[lo] == '\n' || source[lo] == ' ' || source[lo] == '\t'))
                    ++lo;
                chunks.push_back(source.substr(lo, toks[j].end - lo));
            }
            chunk_start = toks[j].end;
            i = j;
        }
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// control flow + reaching definitions
// ---------------------------------------------------------------------------

/// Execution-order successor sets used by the reaching-definitions pass.
/// Returns, condition arms, loop back-edges and for-steps follow the shape
/// recorded by parse_function.
inline std::vector<std::set<int>> cfg_successors(const FunctionModel &f) {
    const auto &sts = f.statements;
    const int n = static_cast<int>(sts.size());
    std::vector<std::set<int>> succ(static_cast<size_t>(n));
    std::map<int, std::vector<int>> kids; // parent id (-1 = top) -> children in order
    for (const auto &s : sts) kids[s.control_parent.value_or(-1)].push_back(s.id);

    auto add = [&](int a, int b) { succ[static_cast<size_t>(a)].insert(b); };

    // wire(id) connects the subtree under statement id; returns its exit nodes
    auto wire = [&](auto &&self, int id) -> std::set<int> {
        const Statement &st = sts[static_cast<size_t>(id)];
        if (st.kind == StatementKind::Return) return {};
        auto it = kids.find(id);
        if (st.kind != StatementKind::Condition && st.kind != StatementKind::LoopHeader)
            return {id};
        std::vector<int> arm0, arm1;
        int step = -1;
        if (it != kids.end()) {
            for (int c : it->second) {
                if (sts[static_cast<size_t>(c)].is_for_step) step = c;
                else if (sts[static_cast<size_t>(c)].arm == 1) arm1.push_back(c);
                else arm0.push_back(c);
            }
        }
        auto wire_seq = [&](const std::vector<int> &seq) -> std::set<int> {
            std::set<int> ex;
            for (size_t i = 0; i < seq.size(); ++i) {
                if (i > 0)
                    for (int e : ex) add(e, seq[i]);
                ex = self(self, seq[i]);
            }
            return ex;
        };
        if (st.kind == StatementKind::LoopHeader) {
            std::set<int> body_exits;
            if (!arm0.empty()) {
                add(id, arm0.front());
                body_exits = wire_seq(arm0);
            } else {
                body_exits = {id};
            }
            if (step >= 0) {
                for (int e : body_exits)
                    if (e != id || arm0.empty()) add(e, step);
                add(step, id);
            } else {
                for (int e : body_exits) add(e, id);
            }
            return {id};
        }
        // condition
        std::set<int> exits;
        if (!arm0.empty()) {
            add(id, arm0.front());
            auto e = wire_seq(arm0);
            exits.insert(e.begin(), e.end());
        } else {
            exits.insert(id);
        }
        if (!arm1.empty()) {
            add(id, arm1.front());
            auto e = wire_seq(arm1);
            exits.insert(e.begin(), e.end());
        } else {
            exits.insert(id);
        }
        return exits;
    };

    auto &top = kids[-1];
    std::set<int> ex;
    for (size_t i = 0; i < top.size(); ++i) {
        if (i > 0)
            for (int e : ex) succ[static_cast<size_t>(e)].insert(top[i]);
        ex = wire(wire, top[i]);
    }
    return succ;
}

/// Build the statement-level program dependence graph: data edges from
/// reaching definitions over identifier names, control edges from each
/// condition/loop-header to the statements of its syntactic body.
inline Pdg build_pdg(const FunctionModel &f) {
    Pdg g;
    g.function = f;
    const auto &sts = f.statements;
    const int n = static_cast<int>(sts.size());
    for (const auto &s : sts) g.nodes.insert(s.id);
    for (const auto &s : sts)
        if (s.control_parent) g.control_edges.insert({*s.control_parent, s.id});

    if (n == 0) return g;
    auto succ = cfg_successors(f);

    // reaching definitions: IN[v] = set of (var, def-site) pairs
    using DefSet = std::set<std::pair<std::string, int>>;
    std::vector<DefSet> in(static_cast<size_t>(n)), out_set(static_cast<size_t>(n));

    auto transfer = [&](int id, const DefSet &in_defs) {
        const Statement &s = sts[static_cast<size_t>(id)];
        DefSet r;
        for (const auto &d : in_defs) {
            bool killed = s.defs.count(d.first) > 0 && s.may_defs.count(d.first) == 0;
            if (!killed) r.insert(d);
        }
        for (const auto &v : s.defs) r.insert({v, id});
        return r;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int id = 0; id < n; ++id) {
            auto next = transfer(id, in[static_cast<size_t>(id)]);
            if (next != out_set[static_cast<size_t>(id)]) {
                out_set[static_cast<size_t>(id)] = std::move(next);
                changed = true;
            }
            for (int s2 : succ[static_cast<size_t>(id)]) {
                auto &dst = in[static_cast<size_t>(s2)];
                size_t before = dst.size();
                dst.insert(out_set[static_cast<size_t>(id)].begin(),
                           out_set[static_cast<size_t>(id)].end());
                if (dst.size() != before) changed = true;
            }
        }
    }

    for (int id = 0; id < n; ++id) {
        const Statement &s = sts[static_cast<size_t>(id)];
        for (const auto &d : in[static_cast<size_t>(id)])
            if (s.uses.count(d.first)) g.data_edges.insert({d.second, id});
    }
    return g;
}

/// Intra-file call graph over the given functions. Calls whose callee is not
/// among them are external and omitted.
inline CallGraph build_call_graph(const std::vector<FunctionModel> &fs) {
    CallGraph cg;
    std::set<std::string> names;
    for (const auto &f : fs) names.insert(f.name);
    for (const auto &f : fs) {
        for (const auto &s : f.statements) {
            if (!s.callee || names.count(*s.callee) == 0) continue;
            cg.edges.insert({f.name, *s.callee, s.id});
            if (s.assign_target) cg.returns_into.insert({*s.callee, *s.assign_target, s.id});
        }
    }
    return cg;
}

} // namespace vulnassess
