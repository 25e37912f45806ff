#pragma once

#include <cctype>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dlecorr/syntax.hpp"

namespace dlecorr {

// Recursive-descent parser for the term and meta-formula grammar.
//
//   term    := infix
//   infix   := arg (('/\' | '\/' | '->' | '<-' | '>-' | '-<') arg)*
//              ('/\' and '\/' associate to the right; the four residual
//               arrows are non-associative, parenthesize when nesting)
//   arg     := 'top' | 'bot' | ident | ident '(' term (','? term)* ')'
//            | '#'ident | '*'ident | 'k(' term ')' | 'l(' term ')' | '(' term ')'
//   ineq    := term ('<=' | '!<=') term
//   meta    := quantifier* impl
//   impl    := or ('==>' or)?
//   or      := and ('||' and)*
//   and     := atom ('&&' atom)*
//   atom    := '~~' atom | '(' meta ')' | ineq
//   quantifier := ('A'|'E') ident ':' ('nom'|'conom') '.'
//               | ('A'|'E') '[' ident (',' ident)* '>'ident term ']' '.'

namespace detail {

struct Token {
  enum Kind { Ident, Nom, Conom, LParen, RParen, Comma, Meet, Join, Arrow, LArrow, RSub, Sub, Le, NotLe, AndM, OrM,
              NotM, ImpM, Colon, Dot, LBrack, RBrack, Gt, End } kind;
  std::string text;
  size_t pos;
};

class Lexer {
public:
  explicit Lexer(const std::string& s) : s_(&s) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.pos); }

private:
  static bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_' || c == '#'; }

  void next() {
    while (i_ < s_->size() && std::isspace((unsigned char)(*s_)[i_])) ++i_;
    size_t p = i_;
    if (i_ >= s_->size()) {
      tok_ = {Token::End, "", p};
      return;
    }
    auto two = s_->substr(i_, 2);
    auto three = s_->substr(i_, 3);
    if (three == "!<=") {
      i_ += 3;
      tok_ = {Token::NotLe, three, p};
      return;
    }
    if (three == "==>") {
      i_ += 3;
      tok_ = {Token::ImpM, three, p};
      return;
    }
    if (two == "/\\") {
      i_ += 2;
      tok_ = {Token::Meet, two, p};
      return;
    }
    if (two == "\\/") {
      i_ += 2;
      tok_ = {Token::Join, two, p};
      return;
    }
    if (two == "->") {
      i_ += 2;
      tok_ = {Token::Arrow, two, p};
      return;
    }
    if (two == "<-") {
      i_ += 2;
      tok_ = {Token::LArrow, two, p};
      return;
    }
    if (two == ">-") {
      i_ += 2;
      tok_ = {Token::RSub, two, p};
      return;
    }
    if (two == "-<") {
      i_ += 2;
      tok_ = {Token::Sub, two, p};
      return;
    }
    if (two == "<=") {
      i_ += 2;
      tok_ = {Token::Le, two, p};
      return;
    }
    if (two == "&&") {
      i_ += 2;
      tok_ = {Token::AndM, two, p};
      return;
    }
    if (two == "||") {
      i_ += 2;
      tok_ = {Token::OrM, two, p};
      return;
    }
    if (two == "~~") {
      i_ += 2;
      tok_ = {Token::NotM, two, p};
      return;
    }
    char c = (*s_)[i_];
    switch (c) {
      case '(': ++i_; tok_ = {Token::LParen, "(", p}; return;
      case ')': ++i_; tok_ = {Token::RParen, ")", p}; return;
      case ',': ++i_; tok_ = {Token::Comma, ",", p}; return;
      case ':': ++i_; tok_ = {Token::Colon, ":", p}; return;
      case '.': ++i_; tok_ = {Token::Dot, ".", p}; return;
      case '[': ++i_; tok_ = {Token::LBrack, "[", p}; return;
      case ']': ++i_; tok_ = {Token::RBrack, "]", p}; return;
      case '>': ++i_; tok_ = {Token::Gt, ">", p}; return;
      case '#':
      case '*': {
        ++i_;
        if (i_ >= s_->size() || !ident_start((*s_)[i_])) throw ParseError("expected variable name", i_);
        size_t b = i_;
        while (i_ < s_->size() && (std::isalnum((unsigned char)(*s_)[i_]) || (*s_)[i_] == '_')) ++i_;
        tok_ = {c == '#' ? Token::Nom : Token::Conom, s_->substr(b, i_ - b), p};
        return;
      }
      default:
        if (ident_start(c)) {
          size_t b = i_;
          while (i_ < s_->size() && ident_char((*s_)[i_])) ++i_;
          tok_ = {Token::Ident, s_->substr(b, i_ - b), p};
          return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", p);
    }
  }

  const std::string* s_;
  size_t i_ = 0;
  Token tok_;
};

class Parser {
public:
  Parser(const std::string& text, SigPtr sig) : text_(text), lex_(text_), sig_(std::move(sig)) {}

  Term parse_term_all() {
    Term t = term();
    expect_end();
    return t;
  }

  Inequality parse_ineq_all() {
    Term l = term();
    if (lex_.peek().kind != Token::Le) lex_.fail("expected '<='");
    lex_.take();
    Term r = term();
    expect_end();
    return {l, r};
  }

  Meta parse_meta_all() {
    Meta m = meta();
    expect_end();
    return m;
  }

  // term | inequality | meta, auto-detected
  std::variant<Term, Inequality, Meta> parse_any() {
    try {
      Meta m = meta();
      expect_end();
      if (m->kind == MetaKind::Ineq) return m->ineq;
      return m;
    } catch (const ParseError&) {
      lex_ = Lexer(text_);
      Term t = term();
      expect_end();
      return t;
    }
  }

  Term term() {
    Term l = arg();
    Token t = lex_.peek();
    switch (t.kind) {
      case Token::Meet:
        lex_.take();
        return mk_meet(l, term_meetjoin(Token::Meet));
      case Token::Join:
        lex_.take();
        return mk_join(l, term_meetjoin(Token::Join));
      case Token::Arrow:
      case Token::LArrow:
      case Token::RSub:
      case Token::Sub: {
        lex_.take();
        Term r = arg();
        return mk_app(&sig_->get(t.text), {l, r});
      }
      default:
        return l;
    }
  }

private:
  // right-associated meet/join chains: a /\ b /\ c = a /\ (b /\ c)
  Term term_meetjoin(Token::Kind op) {
    Term l = arg();
    if (lex_.peek().kind == op) {
      lex_.take();
      Term r = term_meetjoin(op);
      return op == Token::Meet ? mk_meet(l, r) : mk_join(l, r);
    }
    return l;
  }

  Term arg() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::LParen: {
        Term inner = term();
        if (lex_.peek().kind != Token::RParen) lex_.fail("expected ')'");
        lex_.take();
        return inner;
      }
      case Token::Nom:
        return mk_nom(t.text);
      case Token::Conom:
        return mk_conom(t.text);
      case Token::Ident: {
        if (t.text == "top") return mk_top();
        if (t.text == "bot") return mk_bot();
        if (t.text == "k" || t.text == "l") {
          if (lex_.peek().kind == Token::LParen) {
            lex_.take();
            Term inner = term();
            if (lex_.peek().kind != Token::RParen) lex_.fail("expected ')'");
            lex_.take();
            try {
              return t.text == "k" ? mk_kappa(inner) : mk_lambda(inner);
            } catch (const SortError& e) {
              throw ParseError(e.what(), t.pos);
            }
          }
        }
        const Connective* c = sig_->find(t.text);
        if (c) {
          std::vector<Term> args;
          if (lex_.peek().kind == Token::LParen) {
            lex_.take();
            if (lex_.peek().kind != Token::RParen) {
              args.push_back(term());
              while (lex_.peek().kind == Token::Comma ||
                     (lex_.peek().kind != Token::RParen && lex_.peek().kind != Token::End)) {
                if (lex_.peek().kind == Token::Comma) lex_.take();
                if (lex_.peek().kind == Token::RParen) break;
                args.push_back(term());
              }
            }
            if (lex_.peek().kind != Token::RParen) lex_.fail("expected ')'");
            lex_.take();
          }
          if ((int)args.size() != c->arity)
            throw ParseError("ArityError: connective '" + c->name + "' expects " + std::to_string(c->arity) +
                                 " arguments, got " + std::to_string(args.size()),
                             t.pos);
          return mk_app(c, std::move(args));
        }
        // plain proposition variable (reject names that look like they were
        // meant to be connectives)
        if (lex_.peek().kind == Token::LParen)
          throw ParseError("UnknownConnective: '" + t.text + "'", t.pos);
        return mk_prop(t.text);
      }
      default:
        throw ParseError("expected a term", t.pos);
    }
  }

  Meta meta() {
    Token t = lex_.peek();
    if (t.kind == Token::Ident && (t.text == "A" || t.text == "E")) {
      // could be a quantifier: A x:nom. / A[vars >conn restrictor].
      // or an identifier that happens to be named A — disambiguate on the
      // following token.
      Lexer save = lex_;
      lex_.take();
      bool forall = t.text == "A";
      if (lex_.peek().kind == Token::Ident) {
        std::string v = lex_.take().text;
        if (lex_.peek().kind == Token::Colon) {
          lex_.take();
          Token s = lex_.take();
          if (s.kind != Token::Ident || (s.text != "nom" && s.text != "conom")) lex_.fail("expected 'nom' or 'conom'");
          if (lex_.peek().kind != Token::Dot) lex_.fail("expected '.'");
          lex_.take();
          VarSort sort = s.text == "nom" ? VarSort::Nominal : VarSort::Conominal;
          return mk_quant(forall ? MetaKind::Forall : MetaKind::Exists, sort, v, meta());
        }
        lex_ = save;  // not a quantifier
      } else if (lex_.peek().kind == Token::LBrack) {
        lex_.take();
        std::vector<std::string> vars;
        for (;;) {
          Token v = lex_.take();
          if (v.kind != Token::Ident) lex_.fail("expected bound variable name");
          vars.push_back(v.text);
          if (lex_.peek().kind == Token::Comma) {
            lex_.take();
            continue;
          }
          break;
        }
        if (lex_.peek().kind != Token::Gt) lex_.fail("expected '>'");
        lex_.take();
        Token cn = lex_.take();
        if (cn.kind != Token::Ident) lex_.fail("expected connective name after '>'");
        const Connective* c = sig_->find(cn.text);
        if (!c) throw ParseError("UnknownConnective: '" + cn.text + "'", cn.pos);
        if ((int)vars.size() != c->arity)
          throw ParseError("restricted quantifier binds " + std::to_string(vars.size()) + " variables but '" +
                               c->name + "' has arity " + std::to_string(c->arity),
                           cn.pos);
        Term restrictor = term();
        if (!is_pure_atom(restrictor)) throw ParseError("restrictor must be a pure atom", cn.pos);
        if (lex_.peek().kind != Token::RBrack) lex_.fail("expected ']'");
        lex_.take();
        if (lex_.peek().kind != Token::Dot) lex_.fail("expected '.'");
        lex_.take();
        return mk_rquant(forall ? MetaKind::RForall : MetaKind::RExists, vars, c, restrictor, meta());
      } else {
        lex_ = save;
      }
    }
    return impl();
  }

  Meta impl() {
    Meta l = disj();
    if (lex_.peek().kind == Token::ImpM) {
      lex_.take();
      Meta r = lex_.peek().kind == Token::Ident && (lex_.peek().text == "A" || lex_.peek().text == "E") ? meta() : disj();
      return mk_mimp(l, r);
    }
    return l;
  }

  Meta disj() {
    std::vector<Meta> kids{conj()};
    while (lex_.peek().kind == Token::OrM) {
      lex_.take();
      kids.push_back(conj());
    }
    return mk_mor(std::move(kids));
  }

  Meta conj() {
    std::vector<Meta> kids{matom()};
    while (lex_.peek().kind == Token::AndM) {
      lex_.take();
      kids.push_back(matom());
    }
    return mk_mand(std::move(kids));
  }

  Meta matom() {
    if (lex_.peek().kind == Token::NotM) {
      lex_.take();
      return mk_mnot(matom());
    }
    if (lex_.peek().kind == Token::LParen) {
      // Parenthesized meta formula or parenthesized term starting an
      // inequality; parse a meta and, if it closed on an inequality with a
      // pending term operator, fall back to term parsing.
      Lexer save = lex_;
      lex_.take();
      try {
        Meta inner = meta();
        if (lex_.peek().kind == Token::RParen) {
          Lexer save2 = lex_;
          lex_.take();
          // '(meta)' followed by a term operator means it was a term paren
          auto k = lex_.peek().kind;
          if (k != Token::Meet && k != Token::Join && k != Token::Arrow && k != Token::LArrow && k != Token::RSub &&
              k != Token::Sub && k != Token::Le && k != Token::NotLe)
            return inner;
          lex_ = save;
        } else {
          lex_ = save;
        }
      } catch (const ParseError&) {
        lex_ = save;
      }
    }
    if (lex_.peek().kind == Token::Ident && (lex_.peek().text == "A" || lex_.peek().text == "E")) {
      return meta();
    }
    Term l = term();
    Token op = lex_.take();
    if (op.kind == Token::Le) return mk_ineq(l, term());
    if (op.kind == Token::NotLe) return mk_negineq(l, term());
    throw ParseError("expected '<=' or '!<='", op.pos);
  }

  void expect_end() {
    if (lex_.peek().kind != Token::End) lex_.fail("trailing input");
  }

  std::string text_;
  Lexer lex_;
  SigPtr sig_;
};

}  // namespace detail

inline Term parse_term(const std::string& text, const SigPtr& sig) {
  return detail::Parser(text, sig).parse_term_all();
}

inline Inequality parse_ineq(const std::string& text, const SigPtr& sig) {
  return detail::Parser(text, sig).parse_ineq_all();
}

inline Meta parse_meta(const std::string& text, const SigPtr& sig) {
  return detail::Parser(text, sig).parse_meta_all();
}

inline std::variant<Term, Inequality, Meta> parse(const std::string& text, const SigPtr& sig) {
  return detail::Parser(text, sig).parse_any();
}

}  // namespace dlecorr
