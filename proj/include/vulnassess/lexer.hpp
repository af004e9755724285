#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace vulnassess {

enum class TokKind { Ident, Number, Str, Chr, Punct };

struct Token {
    TokKind kind;
    std::string text; // verbatim for idents/numbers/puncts; raw literal for Str/Chr
    int line;         // 1-based
    size_t begin;     // byte offset into the source
    size_t end;       // one past the last byte
};

/// Tokenize a C-subset source fragment. Comments are skipped, preprocessor
/// lines (leading '#') are dropped whole; each dropped line is reported
/// through `warnings` when given.
inline std::vector<Token> lex(std::string_view src, std::vector<std::string> *warnings = nullptr) {
    static constexpr std::array<std::string_view, 12> three = {
        "<<=", ">>=", "...", "", "", "", "", "", "", "", "", ""};
    static constexpr std::array<std::string_view, 19> two = {
        "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
        "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^="};

    std::vector<Token> out;
    int line = 1;
    bool at_line_start = true;
    size_t i = 0;
    const size_t n = src.size();

    auto peek = [&](size_t k) -> char { return i + k < n ? src[i + k] : '\0'; };

    while (i < n) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            at_line_start = true;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        // line comment
        if (c == '/' && peek(1) == '/') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        // block comment
        if (c == '/' && peek(1) == '*') {
            i += 2;
            while (i < n && !(src[i] == '*' && peek(1) == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            i = i + 2 <= n ? i + 2 : n;
            continue;
        }
        // preprocessor line (input is assumed preprocessed; skip and warn)
        if (c == '#' && at_line_start) {
            int start_line = line;
            while (i < n) {
                if (src[i] == '\\' && peek(1) == '\n') { // continuation
                    i += 2;
                    ++line;
                    continue;
                }
                if (src[i] == '\n') break;
                ++i;
            }
            if (warnings)
                warnings->push_back("skipped preprocessor line " + std::to_string(start_line));
            continue;
        }
        at_line_start = false;

        size_t begin = i;
        if (c == '"' || c == '\'') {
            char quote = c;
            ++i;
            while (i < n && src[i] != quote) {
                if (src[i] == '\\' && i + 1 < n) ++i;
                if (src[i] == '\n') ++line;
                ++i;
            }
            if (i < n) ++i; // closing quote
            out.push_back({quote == '"' ? TokKind::Str : TokKind::Chr,
                           std::string(src.substr(begin, i - begin)), line, begin, i});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            out.push_back({TokKind::Ident, std::string(src.substr(begin, i - begin)), line, begin, i});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '.' ||
                             ((src[i] == '+' || src[i] == '-') &&
                              (src[i - 1] == 'e' || src[i - 1] == 'E'))))
                ++i;
            out.push_back({TokKind::Number, std::string(src.substr(begin, i - begin)), line, begin, i});
            continue;
        }
        // punctuation: longest match first
        bool matched = false;
        for (auto t : three) {
            if (!t.empty() && src.substr(i, 3) == t) {
                out.push_back({TokKind::Punct, std::string(t), line, begin, i + 3});
                i += 3;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        for (auto t : two) {
            if (src.substr(i, 2) == t) {
                out.push_back({TokKind::Punct, std::string(t), line, begin, i + 2});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        out.push_back({TokKind::Punct, std::string(1, c), line, begin, i + 1});
        ++i;
    }
    return out;
}

/// C keywords plus literal-like identifiers; these never count as variables.
inline bool is_c_keyword(std::string_view s) {
    static const std::vector<std::string_view> kw = {
        "auto",     "break",   "case",     "char",   "const",    "continue", "default",
        "do",       "double",  "else",     "enum",   "extern",   "float",    "for",
        "goto",     "if",      "inline",   "int",    "long",     "register", "restrict",
        "return",   "short",   "signed",   "sizeof", "static",   "struct",   "switch",
        "typedef",  "union",   "unsigned", "void",   "volatile", "while",    "_Bool",
        "bool",     "true",    "false",    "NULL",   "nullptr"};
    for (auto k : kw)
        if (k == s) return true;
    return false;
}

inline bool is_type_keyword(std::string_view s) {
    static const std::vector<std::string_view> kw = {
        "void",   "char",     "short",  "int",   "long",  "float",  "double",
        "signed", "unsigned", "struct", "union", "enum",  "const",  "static",
        "register", "volatile", "extern", "_Bool", "bool", "inline"};
    for (auto k : kw)
        if (k == s) return true;
    return false;
}

} // namespace vulnassess
