#include "pushq/sql_parser.hpp"

#include <cctype>
#include <cstdlib>
#include <string>
#include <vector>

#include "pushq/value.hpp"

namespace pushq {

namespace {

enum class Tok : uint8_t {
    Ident,
    Number,
    String,
    Plus,
    Minus,
    Star,
    Comma,
    LParen,
    RParen,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    End,
};

struct Token {
    Tok kind;
    std::string_view lexeme;  // raw text; string literals keep their quotes
    std::size_t pos;
    bool is_float = false;
};

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            if (i_ >= src_.size()) {
                out.push_back({Tok::End, {}, i_});
                return out;
            }
            char c = src_[i_];
            std::size_t start = i_;
            if (c == '\'') {
                out.push_back({Tok::String, lex_string(), start});
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back(lex_number());
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i_;
                while (j < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                    ++j;
                out.push_back({Tok::Ident, src_.substr(i_, j - i_), start});
                i_ = j;
            } else {
                out.push_back(lex_operator());
            }
        }
    }

  private:
    void skip_ws() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    }

    std::string_view lex_string() {
        std::size_t start = i_;
        ++i_;  // opening quote
        while (i_ < src_.size()) {
            if (src_[i_] == '\'') {
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '\'') {
                    i_ += 2;
                    continue;
                }
                ++i_;
                return src_.substr(start, i_ - start);
            }
            ++i_;
        }
        throw SyntaxError(start, "unterminated string literal");
    }

    Token lex_number() {
        std::size_t start = i_;
        bool is_float = false;
        while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
        if (i_ + 1 < src_.size() && src_[i_] == '.' &&
            std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
            is_float = true;
            ++i_;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
        }
        if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
            std::size_t j = i_ + 1;
            if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
            if (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) {
                is_float = true;
                i_ = j;
                while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
            }
        }
        return {Tok::Number, src_.substr(start, i_ - start), start, is_float};
    }

    Token lex_operator() {
        std::size_t start = i_;
        char c = src_[i_];
        auto one = [&](Tok k) {
            ++i_;
            return Token{k, src_.substr(start, 1), start};
        };
        switch (c) {
            case '+': return one(Tok::Plus);
            case '-': return one(Tok::Minus);
            case '*': return one(Tok::Star);
            case ',': return one(Tok::Comma);
            case '(': return one(Tok::LParen);
            case ')': return one(Tok::RParen);
            case '=': return one(Tok::Eq);
            case '<':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
                    i_ += 2;
                    return {Tok::Ne, src_.substr(start, 2), start};
                }
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
                    i_ += 2;
                    return {Tok::Le, src_.substr(start, 2), start};
                }
                return one(Tok::Lt);
            case '>':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
                    i_ += 2;
                    return {Tok::Ge, src_.substr(start, 2), start};
                }
                return one(Tok::Gt);
            case '!':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '=') {
                    i_ += 2;
                    return {Tok::Ne, src_.substr(start, 2), start};
                }
                break;
        }
        throw SyntaxError(start, std::string("unexpected character '") + c + "'");
    }

    std::string_view src_;
    std::size_t i_ = 0;
};

bool is_positional(std::string_view ident) {
    if (ident.size() < 2 || ident[0] != '_') return false;
    for (std::size_t i = 1; i < ident.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(ident[i]))) return false;
    return true;
}

std::string unescape_string(std::string_view quoted) {
    std::string out;
    out.reserve(quoted.size());
    for (std::size_t i = 1; i + 1 < quoted.size(); ++i) {
        if (quoted[i] == '\'' && quoted[i + 1] == '\'') ++i;
        out.push_back(quoted[i]);
    }
    return out;
}

class Parser {
  public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    SelectQuery run() {
        reject_unsupported_keywords();
        expect_keyword("SELECT");
        SelectQuery q;
        q.projections = parse_projections();
        expect_keyword("FROM");
        parse_table();
        if (at_keyword("WHERE")) {
            ++i_;
            q.where = parse_expr();
        }
        if (cur().kind != Tok::End)
            throw SyntaxError(cur().pos, "unexpected trailing input");
        return q;
    }

  private:
    const Token& cur() const { return toks_[i_]; }
    const Token& peek(std::size_t n = 1) const {
        return toks_[std::min(i_ + n, toks_.size() - 1)];
    }

    bool at_keyword(std::string_view kw) const {
        return cur().kind == Tok::Ident && upper(cur().lexeme) == kw;
    }

    void expect_keyword(std::string_view kw) {
        if (!at_keyword(kw))
            throw SyntaxError(cur().pos, "expected " + std::string(kw));
        ++i_;
    }

    void expect(Tok k, const char* what) {
        if (cur().kind != k) throw SyntaxError(cur().pos, std::string("expected ") + what);
        ++i_;
    }

    // The rejected constructs are refused wherever their tokens appear, so
    // even malformed inputs containing them report UnsupportedFeature.
    void reject_unsupported_keywords() const {
        bool first = true;
        for (const auto& t : toks_) {
            if (t.kind != Tok::Ident) {
                continue;
            }
            std::string kw = upper(t.lexeme);
            if (kw == "GROUP" || kw == "ORDER" || kw == "LIMIT" || kw == "JOIN" ||
                kw == "HAVING")
                throw UnsupportedFeature("the dialect does not support " + kw);
            if (kw == "SELECT" && !first)
                throw UnsupportedFeature("the dialect does not support subqueries");
            first = false;
        }
    }

    static std::optional<AggFunc> agg_keyword(std::string_view kw) {
        if (kw == "SUM") return AggFunc::Sum;
        if (kw == "MIN") return AggFunc::Min;
        if (kw == "MAX") return AggFunc::Max;
        if (kw == "COUNT") return AggFunc::Count;
        if (kw == "AVG") return AggFunc::Avg;
        return std::nullopt;
    }

    bool at_aggregate() const {
        return cur().kind == Tok::Ident && agg_keyword(upper(cur().lexeme)) &&
               peek().kind == Tok::LParen;
    }

    std::vector<Expr> parse_projections() {
        std::vector<Expr> out;
        if (cur().kind == Tok::Star) {
            ++i_;
            out.push_back(Expr::star());
            return out;
        }
        bool any_agg = false, any_plain = false;
        while (true) {
            if (at_aggregate()) {
                out.push_back(parse_aggregate());
                any_agg = true;
            } else {
                out.push_back(parse_expr());
                any_plain = true;
            }
            if (cur().kind != Tok::Comma) break;
            ++i_;
        }
        if (any_agg && any_plain)
            throw UnsupportedFeature("aggregates cannot be mixed with plain projections");
        return out;
    }

    Expr parse_aggregate() {
        AggFunc f = *agg_keyword(upper(cur().lexeme));
        ++i_;
        expect(Tok::LParen, "(");
        std::optional<Expr> arg;
        if (cur().kind == Tok::Star) {
            if (f != AggFunc::Count)
                throw SyntaxError(cur().pos, "* argument is only valid for COUNT");
            ++i_;
        } else {
            arg = parse_expr();
        }
        expect(Tok::RParen, ")");
        return Expr::aggregate(f, std::move(arg));
    }

    void parse_table() {
        if (cur().kind != Tok::Ident || upper(cur().lexeme) != "S3OBJECT")
            throw SyntaxError(cur().pos, "expected table S3Object");
        ++i_;
        if (cur().kind == Tok::Comma)
            throw UnsupportedFeature("the dialect does not support joins");
    }

    Expr parse_expr() { return parse_or(); }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (at_keyword("OR")) {
            ++i_;
            lhs = Expr::binary(BinOp::Or, std::move(lhs), parse_and());
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (at_keyword("AND")) {
            ++i_;
            lhs = Expr::binary(BinOp::And, std::move(lhs), parse_not());
        }
        return lhs;
    }

    Expr parse_not() {
        if (at_keyword("NOT")) {
            ++i_;
            return Expr::negate(parse_not());
        }
        return parse_comparison();
    }

    Expr parse_comparison() {
        Expr lhs = parse_additive();
        BinOp op;
        switch (cur().kind) {
            case Tok::Eq: op = BinOp::Eq; break;
            case Tok::Ne: op = BinOp::Ne; break;
            case Tok::Lt: op = BinOp::Lt; break;
            case Tok::Le: op = BinOp::Le; break;
            case Tok::Gt: op = BinOp::Gt; break;
            case Tok::Ge: op = BinOp::Ge; break;
            default: return lhs;
        }
        ++i_;
        return Expr::binary(op, std::move(lhs), parse_additive());
    }

    Expr parse_additive() {
        Expr lhs = parse_multiplicative();
        while (cur().kind == Tok::Plus || cur().kind == Tok::Minus) {
            BinOp op = cur().kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
            ++i_;
            lhs = Expr::binary(op, std::move(lhs), parse_multiplicative());
        }
        return lhs;
    }

    Expr parse_multiplicative() {
        Expr lhs = parse_unary();
        while (cur().kind == Tok::Star || at_keyword("MOD")) {
            BinOp op = cur().kind == Tok::Star ? BinOp::Mul : BinOp::Mod;
            ++i_;
            lhs = Expr::binary(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    Expr parse_unary() {
        if (cur().kind == Tok::Minus) {
            std::size_t pos = cur().pos;
            ++i_;
            if (cur().kind == Tok::Number) return parse_number(true);
            (void)pos;
            return Expr::binary(BinOp::Sub, Expr::lit(int64_t{0}), parse_unary());
        }
        return parse_primary();
    }

    Expr parse_number(bool negative) {
        const Token& t = cur();
        ++i_;
        if (t.is_float) {
            double d = 0;
            if (!parse_double(t.lexeme, d))
                throw SyntaxError(t.pos, "malformed number");
            return Expr::lit(negative ? -d : d);
        }
        int64_t v = 0;
        if (!parse_int64(t.lexeme, v))
            throw SyntaxError(t.pos, "malformed number");
        return Expr::lit(negative ? -v : v);
    }

    Expr parse_primary() {
        const Token& t = cur();
        switch (t.kind) {
            case Tok::Number: return parse_number(false);
            case Tok::String: {
                ++i_;
                return Expr::lit(unescape_string(t.lexeme));
            }
            case Tok::LParen: {
                ++i_;
                Expr e = parse_expr();
                expect(Tok::RParen, ")");
                return e;
            }
            case Tok::Ident: break;
            default: throw SyntaxError(t.pos, "expected an expression");
        }

        std::string kw = upper(t.lexeme);
        if (kw == "CAST") return parse_cast();
        if (kw == "SUBSTRING") return parse_substring();
        if (kw == "CASE") return parse_case();
        if (agg_keyword(kw) && peek().kind == Tok::LParen)
            throw UnsupportedFeature("aggregates are only allowed as top-level projections");
        if (kw == "SELECT" || kw == "FROM" || kw == "WHERE" || kw == "AS" || kw == "AND" ||
            kw == "OR" || kw == "NOT" || kw == "WHEN" || kw == "THEN" || kw == "ELSE" ||
            kw == "END" || kw == "MOD" || kw == "S3OBJECT")
            throw SyntaxError(t.pos, "expected an expression");
        ++i_;
        if (is_positional(t.lexeme)) {
            int64_t n = 0;
            parse_int64(t.lexeme.substr(1), n);
            if (n < 1) throw SyntaxError(t.pos, "positional columns start at _1");
            return Expr::ordinal(n);
        }
        return Expr::column(std::string(t.lexeme));
    }

    Expr parse_cast() {
        ++i_;
        expect(Tok::LParen, "(");
        Expr inner = parse_expr();
        expect_keyword("AS");
        CastType to;
        if (at_keyword("INT") || at_keyword("INTEGER"))
            to = CastType::Int;
        else if (at_keyword("DECIMAL") || at_keyword("FLOAT"))
            to = CastType::Decimal;
        else
            throw SyntaxError(cur().pos, "expected INT or DECIMAL");
        ++i_;
        expect(Tok::RParen, ")");
        return Expr::cast(to, std::move(inner));
    }

    Expr parse_substring() {
        ++i_;
        expect(Tok::LParen, "(");
        Expr str = parse_expr();
        expect(Tok::Comma, ",");
        Expr start = parse_expr();
        expect(Tok::Comma, ",");
        Expr len = parse_expr();
        expect(Tok::RParen, ")");
        return Expr::substring(std::move(str), std::move(start), std::move(len));
    }

    Expr parse_case() {
        ++i_;
        expect_keyword("WHEN");
        Expr when = parse_expr();
        expect_keyword("THEN");
        Expr then = parse_expr();
        std::optional<Expr> otherwise;
        if (at_keyword("ELSE")) {
            ++i_;
            otherwise = parse_expr();
        }
        expect_keyword("END");
        return Expr::case_when(std::move(when), std::move(then), std::move(otherwise));
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

}  // namespace

SelectQuery parse_select(std::string_view sql) {
    Lexer lexer(sql);
    Parser parser(lexer.run());
    return parser.run();
}

}  // namespace pushq
