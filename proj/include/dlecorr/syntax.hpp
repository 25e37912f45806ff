#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "dlecorr/signature.hpp"

namespace dlecorr {

enum class VarSort { Nominal, Conominal };

inline VarSort other(VarSort s) { return s == VarSort::Nominal ? VarSort::Conominal : VarSort::Nominal; }

// ------------------------------------------------------------------ terms

enum class TermKind { PropVar, Nominal, Conominal, Top, Bot, Meet, Join, App, Kappa, Lambda, Hole };

class TermNode;
using Term = std::shared_ptr<const TermNode>;

class TermNode {
public:
  TermKind kind;
  std::string name;          // PropVar/Nominal/Conominal
  const Connective* conn{};  // App
  std::vector<Term> args;    // Meet/Join (2), App (arity), Kappa/Lambda (1)
  int hole{};                // Hole

  TermNode(TermKind k, std::string n, const Connective* c, std::vector<Term> a, int h = 0)
      : kind(k), name(std::move(n)), conn(c), args(std::move(a)), hole(h) {}
};

inline Term mk_prop(const std::string& n) { return std::make_shared<TermNode>(TermKind::PropVar, n, nullptr, std::vector<Term>{}); }
inline Term mk_nom(const std::string& n) { return std::make_shared<TermNode>(TermKind::Nominal, n, nullptr, std::vector<Term>{}); }
inline Term mk_conom(const std::string& n) { return std::make_shared<TermNode>(TermKind::Conominal, n, nullptr, std::vector<Term>{}); }
inline Term mk_top() { return std::make_shared<TermNode>(TermKind::Top, "", nullptr, std::vector<Term>{}); }
inline Term mk_bot() { return std::make_shared<TermNode>(TermKind::Bot, "", nullptr, std::vector<Term>{}); }
inline Term mk_meet(Term a, Term b) { return std::make_shared<TermNode>(TermKind::Meet, "", nullptr, std::vector<Term>{std::move(a), std::move(b)}); }
inline Term mk_join(Term a, Term b) { return std::make_shared<TermNode>(TermKind::Join, "", nullptr, std::vector<Term>{std::move(a), std::move(b)}); }
inline Term mk_hole(int i) { return std::make_shared<TermNode>(TermKind::Hole, "", nullptr, std::vector<Term>{}, i); }

// nominal-sorted: Nominal or Lambda(...); conominal-sorted: Conominal or Kappa(...)
inline bool nominal_sorted(const Term& t) { return t->kind == TermKind::Nominal || t->kind == TermKind::Lambda; }
inline bool conominal_sorted(const Term& t) { return t->kind == TermKind::Conominal || t->kind == TermKind::Kappa; }

// kappa(lambda(x)) = x and lambda(kappa(x)) = x (kappa/lambda are mutually
// inverse order isomorphisms); constructors normalize eagerly.
inline Term mk_kappa(Term a) {
  if (!nominal_sorted(a)) throw SortError("kappa applied to a non-nominal-sorted term");
  if (a->kind == TermKind::Lambda) return a->args[0];
  return std::make_shared<TermNode>(TermKind::Kappa, "", nullptr, std::vector<Term>{std::move(a)});
}
inline Term mk_lambda(Term a) {
  if (!conominal_sorted(a)) throw SortError("lambda applied to a non-conominal-sorted term");
  if (a->kind == TermKind::Kappa) return a->args[0];
  return std::make_shared<TermNode>(TermKind::Lambda, "", nullptr, std::vector<Term>{std::move(a)});
}
inline Term mk_app(const Connective* c, std::vector<Term> args) {
  if ((int)args.size() != c->arity)
    throw Error("ArityError", "connective '" + c->name + "' expects " + std::to_string(c->arity) + " arguments, got " +
                                  std::to_string(args.size()));
  return std::make_shared<TermNode>(TermKind::App, "", c, std::move(args));
}

inline bool term_eq(const Term& a, const Term& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind || a->name != b->name || a->conn != b->conn || a->hole != b->hole ||
      a->args.size() != b->args.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!term_eq(a->args[i], b->args[i])) return false;
  return true;
}

// Structural ordering, used for canonical AC-sorting and map keys.
inline int term_cmp(const Term& a, const Term& b) {
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (a->name != b->name) return a->name < b->name ? -1 : 1;
  std::string ca = a->conn ? a->conn->name : "";
  std::string cb = b->conn ? b->conn->name : "";
  if (ca != cb) return ca < cb ? -1 : 1;
  if (a->hole != b->hole) return a->hole < b->hole ? -1 : 1;
  if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (int c = term_cmp(a->args[i], b->args[i])) return c;
  return 0;
}

struct TermLess {
  bool operator()(const Term& a, const Term& b) const { return term_cmp(a, b) < 0; }
};

// `pure` iff it contains no PropVar.
inline bool is_pure(const Term& t) {
  if (t->kind == TermKind::PropVar) return false;
  for (auto& a : t->args)
    if (!is_pure(a)) return false;
  return true;
}

// A pure atom in the x <= y sense of flat inequalities: a (co)nominal
// possibly under one kappa/lambda.
inline bool is_pure_atom(const Term& t) {
  if (t->kind == TermKind::Nominal || t->kind == TermKind::Conominal) return true;
  if (t->kind == TermKind::Kappa || t->kind == TermKind::Lambda)
    return t->args[0]->kind == TermKind::Nominal || t->args[0]->kind == TermKind::Conominal;
  return false;
}

// The (co)nominal name under an optional kappa/lambda wrapper.
inline std::optional<std::string> atom_core(const Term& t) {
  if (t->kind == TermKind::Nominal || t->kind == TermKind::Conominal) return t->name;
  if ((t->kind == TermKind::Kappa || t->kind == TermKind::Lambda) &&
      (t->args[0]->kind == TermKind::Nominal || t->args[0]->kind == TermKind::Conominal))
    return t->args[0]->name;
  return std::nullopt;
}

template <typename F>
void for_each_node(const Term& t, F&& f) {
  f(t);
  for (auto& a : t->args) for_each_node(a, f);
}

inline void collect_vars(const Term& t, std::set<std::string>& props, std::set<std::string>& noms,
                         std::set<std::string>& conoms) {
  for_each_node(t, [&](const Term& n) {
    if (n->kind == TermKind::PropVar) props.insert(n->name);
    if (n->kind == TermKind::Nominal) noms.insert(n->name);
    if (n->kind == TermKind::Conominal) conoms.insert(n->name);
  });
}

inline std::set<std::string> prop_vars(const Term& t) {
  std::set<std::string> p, n, c;
  collect_vars(t, p, n, c);
  return p;
}

inline bool occurs(const Term& t, TermKind kind, const std::string& name) {
  bool found = false;
  for_each_node(t, [&](const Term& n) {
    if (n->kind == kind && n->name == name) found = true;
  });
  return found;
}

// ------------------------------------------------------------- inequality

struct Inequality {
  Term lhs, rhs;
};

inline bool ineq_eq(const Inequality& a, const Inequality& b) { return term_eq(a.lhs, b.lhs) && term_eq(a.rhs, b.rhs); }

// ---------------------------------------------------------- meta formulas

enum class MetaKind { Ineq, NegIneq, MAnd, MOr, MNot, MImp, Forall, Exists, RForall, RExists };

class MetaNode;
using Meta = std::shared_ptr<const MetaNode>;

class MetaNode {
public:
  MetaKind kind;
  Inequality ineq;               // Ineq / NegIneq
  std::vector<Meta> kids;        // MAnd/MOr (n-ary), MNot (1), MImp (2)
  VarSort sort{};                // Forall/Exists
  std::string var;               // Forall/Exists
  std::vector<std::string> rvars;  // RForall/RExists, in connective coordinate order
  const Connective* rconn{};       // RForall/RExists
  Term restrictor;                 // RForall/RExists: a pure atom
  Meta body;                       // quantifiers
};

inline Meta mk_ineq(Term l, Term r) {
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::Ineq;
  m->ineq = {std::move(l), std::move(r)};
  return m;
}
inline Meta mk_negineq(Term l, Term r) {
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::NegIneq;
  m->ineq = {std::move(l), std::move(r)};
  return m;
}
inline Meta mk_mand(std::vector<Meta> kids) {
  if (kids.size() == 1) return kids[0];
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::MAnd;
  m->kids = std::move(kids);
  return m;
}
inline Meta mk_mor(std::vector<Meta> kids) {
  if (kids.size() == 1) return kids[0];
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::MOr;
  m->kids = std::move(kids);
  return m;
}
inline Meta mk_mnot(Meta k) {
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::MNot;
  m->kids = {std::move(k)};
  return m;
}
inline Meta mk_mimp(Meta a, Meta b) {
  auto m = std::make_shared<MetaNode>();
  m->kind = MetaKind::MImp;
  m->kids = {std::move(a), std::move(b)};
  return m;
}
inline Meta mk_quant(MetaKind k, VarSort s, const std::string& v, Meta body) {
  auto m = std::make_shared<MetaNode>();
  m->kind = k;
  m->sort = s;
  m->var = v;
  m->body = std::move(body);
  return m;
}
inline Meta mk_rquant(MetaKind k, std::vector<std::string> vars, const Connective* conn, Term restrictor, Meta body) {
  auto m = std::make_shared<MetaNode>();
  m->kind = k;
  m->rvars = std::move(vars);
  m->rconn = conn;
  m->restrictor = std::move(restrictor);
  m->body = std::move(body);
  return m;
}

// Sort of the variable in coordinate i (0-based) of a restricted quantifier
// on connective h: for h in F*, positive coordinates bind nominals; for G*,
// positive coordinates bind conominals.
inline VarSort bound_sort(const Connective& h, int i) {
  bool pos = h.order_type[i] == Pol::Pos;
  if (h.family == Family::F) return pos ? VarSort::Nominal : VarSort::Conominal;
  return pos ? VarSort::Conominal : VarSort::Nominal;
}

// Sort of a restrictor of a restricted quantifier on h: NL for F*, CNL for G*.
inline VarSort restrictor_sort(const Connective& h) {
  return h.family == Family::F ? VarSort::Nominal : VarSort::Conominal;
}

// ------------------------------------------------------------ substitution

using TermSubst = std::map<std::string, Term>;  // PropVar names only
struct PureSubst {
  std::map<std::string, Term> nominal;    // nominal name -> nominal-sorted term
  std::map<std::string, Term> conominal;  // conominal name -> conominal-sorted term
};

inline Term substitute(const Term& t, const TermSubst& props, const PureSubst* pure = nullptr) {
  switch (t->kind) {
    case TermKind::PropVar: {
      auto it = props.find(t->name);
      return it == props.end() ? t : it->second;
    }
    case TermKind::Nominal:
      if (pure) {
        auto it = pure->nominal.find(t->name);
        if (it != pure->nominal.end()) return it->second;
      }
      return t;
    case TermKind::Conominal:
      if (pure) {
        auto it = pure->conominal.find(t->name);
        if (it != pure->conominal.end()) return it->second;
      }
      return t;
    // sort discipline is enforced where it matters: the kappa/lambda
    // constructors reject arguments of the wrong sort
    case TermKind::Kappa:
      return mk_kappa(substitute(t->args[0], props, pure));
    case TermKind::Lambda:
      return mk_lambda(substitute(t->args[0], props, pure));
    case TermKind::Meet:
      return mk_meet(substitute(t->args[0], props, pure), substitute(t->args[1], props, pure));
    case TermKind::Join:
      return mk_join(substitute(t->args[0], props, pure), substitute(t->args[1], props, pure));
    case TermKind::App: {
      std::vector<Term> args;
      args.reserve(t->args.size());
      for (auto& a : t->args) args.push_back(substitute(a, props, pure));
      return mk_app(t->conn, std::move(args));
    }
    default:
      return t;
  }
}

inline Inequality substitute(const Inequality& i, const TermSubst& props, const PureSubst* pure = nullptr) {
  return {substitute(i.lhs, props, pure), substitute(i.rhs, props, pure)};
}

// --------------------------------------------------- polarity of positions

// Propagates root_sign through order types; returns one entry per occurrence
// of `var` (PropVar), left to right.
inline void polarity_walk(const Term& t, Pol sign, const std::string& var, std::vector<Pol>& out) {
  switch (t->kind) {
    case TermKind::PropVar:
      if (t->name == var) out.push_back(sign);
      return;
    case TermKind::Meet:
    case TermKind::Join:
      polarity_walk(t->args[0], sign, var, out);
      polarity_walk(t->args[1], sign, var, out);
      return;
    case TermKind::App:
      for (size_t i = 0; i < t->args.size(); ++i)
        polarity_walk(t->args[i], t->conn->order_type[i] == Pol::Pos ? sign : flip(sign), var, out);
      return;
    case TermKind::Kappa:
    case TermKind::Lambda:
      // kappa/lambda are order isomorphisms on their sorts
      polarity_walk(t->args[0], sign, var, out);
      return;
    default:
      return;
  }
}

inline std::vector<Pol> polarity_of_occurrences(Pol root_sign, const Term& t, const std::string& var) {
  std::vector<Pol> out;
  polarity_walk(t, root_sign, var, out);
  return out;
}

// Sign of every occurrence of a *pure* variable (nominal or conominal) in an
// inequality, using the +lhs/-rhs convention.
inline void pure_polarity_walk(const Term& t, Pol sign, TermKind kind, const std::string& var, std::vector<Pol>& out) {
  if (t->kind == kind && t->name == var) {
    out.push_back(sign);
    return;
  }
  switch (t->kind) {
    case TermKind::Meet:
    case TermKind::Join:
      pure_polarity_walk(t->args[0], sign, kind, var, out);
      pure_polarity_walk(t->args[1], sign, kind, var, out);
      return;
    case TermKind::App:
      for (size_t i = 0; i < t->args.size(); ++i)
        pure_polarity_walk(t->args[i], t->conn->order_type[i] == Pol::Pos ? sign : flip(sign), kind, var, out);
      return;
    case TermKind::Kappa:
    case TermKind::Lambda:
      pure_polarity_walk(t->args[0], sign, kind, var, out);
      return;
    default:
      return;
  }
}

inline std::vector<Pol> pure_polarities_in_ineq(const Inequality& iq, TermKind kind, const std::string& var) {
  std::vector<Pol> out;
  pure_polarity_walk(iq.lhs, Pol::Pos, kind, var, out);
  pure_polarity_walk(iq.rhs, Pol::Neg, kind, var, out);
  return out;
}

// ------------------------------------------------------------------- flip

// j !<= a  iff  a <= k(j);   a !<= m  iff  l(m) <= a.
// Nominal-sorted left side takes precedence when both rules apply.
inline Inequality flip_neg(const Inequality& neg) {
  if (nominal_sorted(neg.lhs)) return {neg.rhs, mk_kappa(neg.lhs)};
  if (conominal_sorted(neg.rhs)) return {mk_lambda(neg.rhs), neg.lhs};
  throw Error("NotFlippable", "neither side of the negated inequality is nominal- or conominal-sorted");
}

// ------------------------------------------- restricted quantifier rewrite

// Restricting inequality of a restricted quantifier: j <= f(vars) for F*,
// g(vars) <= m for G*, with each coordinate holding the bound variable of the
// matching sort.
inline Inequality restricting_ineq(const Connective* h, const std::vector<std::string>& vars, const Term& restrictor) {
  std::vector<Term> args;
  for (int i = 0; i < h->arity; ++i)
    args.push_back(bound_sort(*h, i) == VarSort::Nominal ? mk_nom(vars[i]) : mk_conom(vars[i]));
  Term app = mk_app(h, std::move(args));
  if (h->family == Family::F) return {restrictor, app};
  return {app, restrictor};
}

inline Meta expand_restricted(const Meta& m) {
  switch (m->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq:
      return m;
    case MetaKind::MAnd: {
      std::vector<Meta> kids;
      for (auto& k : m->kids) kids.push_back(expand_restricted(k));
      return mk_mand(std::move(kids));
    }
    case MetaKind::MOr: {
      std::vector<Meta> kids;
      for (auto& k : m->kids) kids.push_back(expand_restricted(k));
      return mk_mor(std::move(kids));
    }
    case MetaKind::MNot:
      return mk_mnot(expand_restricted(m->kids[0]));
    case MetaKind::MImp:
      return mk_mimp(expand_restricted(m->kids[0]), expand_restricted(m->kids[1]));
    case MetaKind::Forall:
    case MetaKind::Exists:
      return mk_quant(m->kind, m->sort, m->var, expand_restricted(m->body));
    case MetaKind::RForall:
    case MetaKind::RExists: {
      Inequality r = restricting_ineq(m->rconn, m->rvars, m->restrictor);
      Meta body = expand_restricted(m->body);
      Meta inner = m->kind == MetaKind::RForall ? mk_mimp(mk_ineq(r.lhs, r.rhs), body)
                                                : mk_mand({mk_ineq(r.lhs, r.rhs), body});
      for (auto it = m->rvars.rbegin(); it != m->rvars.rend(); ++it) {
        int idx = int(m->rvars.rend() - it) - 1;
        VarSort s = bound_sort(*m->rconn, idx);
        inner = mk_quant(m->kind == MetaKind::RForall ? MetaKind::Forall : MetaKind::Exists, s, *it, inner);
      }
      return inner;
    }
  }
  return m;
}

// Greedy inverse of expand_restricted: folds a run of plain quantifiers whose
// body starts with the matching restricting inequality back into a restricted
// quantifier. The restricting inequality must be the implication antecedent
// (forall) or the first conjunct (exists).
inline Meta contract_restricted(const Meta& m) {
  switch (m->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq:
      return m;
    case MetaKind::MAnd: {
      std::vector<Meta> kids;
      for (auto& k : m->kids) kids.push_back(contract_restricted(k));
      return mk_mand(std::move(kids));
    }
    case MetaKind::MOr: {
      std::vector<Meta> kids;
      for (auto& k : m->kids) kids.push_back(contract_restricted(k));
      return mk_mor(std::move(kids));
    }
    case MetaKind::MNot:
      return mk_mnot(contract_restricted(m->kids[0]));
    case MetaKind::MImp:
      return mk_mimp(contract_restricted(m->kids[0]), contract_restricted(m->kids[1]));
    case MetaKind::RForall:
    case MetaKind::RExists:
      return mk_rquant(m->kind, m->rvars, m->rconn, m->restrictor, contract_restricted(m->body));
    case MetaKind::Forall:
    case MetaKind::Exists: {
      MetaKind qkind = m->kind;
      std::vector<std::pair<VarSort, std::string>> run;
      Meta cur = m;
      while (cur->kind == qkind) {
        run.emplace_back(cur->sort, cur->var);
        cur = cur->body;
      }
      Meta head, rest;
      if (qkind == MetaKind::Forall && cur->kind == MetaKind::MImp) {
        head = cur->kids[0];
        rest = cur->kids[1];
      } else if (qkind == MetaKind::Exists && cur->kind == MetaKind::MAnd && cur->kids.size() >= 2) {
        head = cur->kids[0];
        rest = mk_mand(std::vector<Meta>(cur->kids.begin() + 1, cur->kids.end()));
      }
      if (head && head->kind == MetaKind::Ineq) {
        const Inequality& iq = head->ineq;
        const Term& app = iq.rhs->kind == TermKind::App ? iq.rhs : iq.lhs;
        const Term& rst = iq.rhs->kind == TermKind::App ? iq.lhs : iq.rhs;
        bool fside = iq.rhs->kind == TermKind::App;
        if (app->kind == TermKind::App && is_pure_atom(rst) && (app->conn->family == Family::F) == fside &&
            (int)run.size() >= app->conn->arity) {
          size_t off = run.size() - app->conn->arity;
          bool ok = true;
          std::vector<std::string> vs;
          for (int i = 0; i < app->conn->arity && ok; ++i) {
            const Term& a = app->args[i];
            VarSort need = bound_sort(*app->conn, i);
            bool isvar = (need == VarSort::Nominal && a->kind == TermKind::Nominal) ||
                         (need == VarSort::Conominal && a->kind == TermKind::Conominal);
            ok = isvar && run[off + i].second == a->name && run[off + i].first == need;
            if (ok) vs.push_back(a->name);
          }
          if (ok) {
            auto c = atom_core(rst);
            for (auto& v : vs)
              if (c && *c == v) ok = false;
          }
          if (ok) {
            Meta folded = mk_rquant(qkind == MetaKind::Forall ? MetaKind::RForall : MetaKind::RExists, vs, app->conn,
                                    rst, contract_restricted(rest));
            for (size_t i = off; i-- > 0;) folded = mk_quant(qkind, run[i].first, run[i].second, folded);
            return folded;
          }
        }
      }
      return mk_quant(m->sort == VarSort::Nominal ? qkind : qkind, m->sort, m->var, contract_restricted(m->body));
    }
  }
  return m;
}

// ------------------------------------------------------- meta utilities

inline bool meta_eq(const Meta& a, const Meta& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq:
      return ineq_eq(a->ineq, b->ineq);
    case MetaKind::MAnd:
    case MetaKind::MOr:
    case MetaKind::MNot:
    case MetaKind::MImp: {
      if (a->kids.size() != b->kids.size()) return false;
      for (size_t i = 0; i < a->kids.size(); ++i)
        if (!meta_eq(a->kids[i], b->kids[i])) return false;
      return true;
    }
    case MetaKind::Forall:
    case MetaKind::Exists:
      return a->sort == b->sort && a->var == b->var && meta_eq(a->body, b->body);
    case MetaKind::RForall:
    case MetaKind::RExists:
      return a->rvars == b->rvars && a->rconn == b->rconn && term_eq(a->restrictor, b->restrictor) &&
             meta_eq(a->body, b->body);
  }
  return false;
}

template <typename F>
void meta_for_each_ineq(const Meta& m, F&& f) {
  switch (m->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq:
      f(m->ineq, m->kind == MetaKind::NegIneq);
      return;
    case MetaKind::MAnd:
    case MetaKind::MOr:
    case MetaKind::MNot:
    case MetaKind::MImp:
      for (auto& k : m->kids) meta_for_each_ineq(k, f);
      return;
    case MetaKind::Forall:
    case MetaKind::Exists:
      meta_for_each_ineq(m->body, f);
      return;
    case MetaKind::RForall:
    case MetaKind::RExists:
      meta_for_each_ineq(m->body, f);
      return;
  }
}

// Free pure variables of a meta formula (quantified names removed).
inline void meta_free_pure(const Meta& m, std::set<std::string>& noms, std::set<std::string>& conoms) {
  switch (m->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq: {
      std::set<std::string> p;
      collect_vars(m->ineq.lhs, p, noms, conoms);
      collect_vars(m->ineq.rhs, p, noms, conoms);
      return;
    }
    case MetaKind::MAnd:
    case MetaKind::MOr:
    case MetaKind::MNot:
    case MetaKind::MImp:
      for (auto& k : m->kids) meta_free_pure(k, noms, conoms);
      return;
    case MetaKind::Forall:
    case MetaKind::Exists: {
      std::set<std::string> n2, c2;
      meta_free_pure(m->body, n2, c2);
      (m->sort == VarSort::Nominal ? n2 : c2).erase(m->var);
      noms.insert(n2.begin(), n2.end());
      conoms.insert(c2.begin(), c2.end());
      return;
    }
    case MetaKind::RForall:
    case MetaKind::RExists: {
      std::set<std::string> n2, c2;
      meta_free_pure(m->body, n2, c2);
      for (size_t i = 0; i < m->rvars.size(); ++i)
        (bound_sort(*m->rconn, (int)i) == VarSort::Nominal ? n2 : c2).erase(m->rvars[i]);
      noms.insert(n2.begin(), n2.end());
      conoms.insert(c2.begin(), c2.end());
      std::set<std::string> p;
      collect_vars(m->restrictor, p, noms, conoms);
      return;
    }
  }
}

// ----------------------------------------------- alpha/AC golden equality

namespace detail {

// Flattened canonical skeleton with De-Bruijn-free variable placeholders:
// we compare by trying variable bijections (test-scale formulas only).
inline void collect_all_vars(const Term& t, std::vector<std::pair<TermKind, std::string>>& vars,
                             std::set<std::pair<TermKind, std::string>>& seen) {
  for_each_node(t, [&](const Term& n) {
    if (n->kind == TermKind::PropVar || n->kind == TermKind::Nominal || n->kind == TermKind::Conominal) {
      auto key = std::make_pair(n->kind, n->name);
      if (seen.insert(key).second) vars.push_back(key);
    }
  });
}

inline bool ac_eq(const Term& a, const Term& b, const std::map<std::string, std::string>& pmap,
                  const std::map<std::string, std::string>& nmap, const std::map<std::string, std::string>& cmap);

inline void ac_flatten(const Term& t, TermKind k, std::vector<Term>& out) {
  if (t->kind == k) {
    ac_flatten(t->args[0], k, out);
    ac_flatten(t->args[1], k, out);
  } else {
    out.push_back(t);
  }
}

inline bool ac_multiset_match(std::vector<Term>& as, std::vector<Term>& bs, const std::map<std::string, std::string>& pmap,
                              const std::map<std::string, std::string>& nmap,
                              const std::map<std::string, std::string>& cmap) {
  if (as.size() != bs.size()) return false;
  if (as.empty()) return true;
  Term a = as.back();
  as.pop_back();
  for (size_t i = 0; i < bs.size(); ++i) {
    if (ac_eq(a, bs[i], pmap, nmap, cmap)) {
      std::vector<Term> rest = bs;
      rest.erase(rest.begin() + i);
      if (ac_multiset_match(as, rest, pmap, nmap, cmap)) {
        as.push_back(a);
        return true;
      }
    }
  }
  as.push_back(a);
  return false;
}

inline bool ac_eq(const Term& a, const Term& b, const std::map<std::string, std::string>& pmap,
                  const std::map<std::string, std::string>& nmap, const std::map<std::string, std::string>& cmap) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::PropVar: {
      auto it = pmap.find(a->name);
      return it != pmap.end() && it->second == b->name;
    }
    case TermKind::Nominal: {
      auto it = nmap.find(a->name);
      return it != nmap.end() && it->second == b->name;
    }
    case TermKind::Conominal: {
      auto it = cmap.find(a->name);
      return it != cmap.end() && it->second == b->name;
    }
    case TermKind::Meet:
    case TermKind::Join: {
      std::vector<Term> as, bs;
      ac_flatten(a, a->kind, as);
      ac_flatten(b, b->kind, bs);
      return ac_multiset_match(as, bs, pmap, nmap, cmap);
    }
    case TermKind::App: {
      if (a->conn != b->conn) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!ac_eq(a->args[i], b->args[i], pmap, nmap, cmap)) return false;
      return true;
    }
    case TermKind::Kappa:
    case TermKind::Lambda:
      return ac_eq(a->args[0], b->args[0], pmap, nmap, cmap);
    default:
      return true;
  }
}

inline bool try_bijections(std::vector<std::pair<TermKind, std::string>>& av,
                           std::vector<std::pair<TermKind, std::string>>& bv, size_t idx,
                           std::map<std::string, std::string>& pmap, std::map<std::string, std::string>& nmap,
                           std::map<std::string, std::string>& cmap, std::set<std::string>& usedp,
                           std::set<std::string>& usedn, std::set<std::string>& usedc,
                           const std::function<bool()>& check) {
  if (idx == av.size()) return check();
  auto [kind, name] = av[idx];
  for (auto& [bk, bn] : bv) {
    if (bk != kind) continue;
    auto& used = kind == TermKind::PropVar ? usedp : kind == TermKind::Nominal ? usedn : usedc;
    auto& map = kind == TermKind::PropVar ? pmap : kind == TermKind::Nominal ? nmap : cmap;
    if (used.count(bn)) continue;
    map[name] = bn;
    used.insert(bn);
    if (try_bijections(av, bv, idx + 1, pmap, nmap, cmap, usedp, usedn, usedc, check)) return true;
    map.erase(name);
    used.erase(bn);
  }
  return false;
}

}  // namespace detail

namespace detail {

struct VarMaps {
  std::map<std::string, std::string> pmap, nmap, cmap;
};

inline bool meta_ac_eq(const Meta& a, const Meta& b, VarMaps& m);

inline bool meta_multiset_match(std::vector<Meta> as, std::vector<Meta> bs, VarMaps& m) {
  if (as.size() != bs.size()) return false;
  if (as.empty()) return true;
  Meta a = as.back();
  as.pop_back();
  for (size_t i = 0; i < bs.size(); ++i) {
    VarMaps save = m;
    if (meta_ac_eq(a, bs[i], m)) {
      std::vector<Meta> rest = bs;
      rest.erase(rest.begin() + i);
      if (meta_multiset_match(as, rest, m)) return true;
    }
    m = save;
  }
  return false;
}

inline void meta_ac_flatten(const Meta& m, MetaKind k, std::vector<Meta>& out) {
  if (m->kind == k) {
    for (auto& kid : m->kids) meta_ac_flatten(kid, k, out);
  } else {
    out.push_back(m);
  }
}

inline bool meta_ac_eq(const Meta& a, const Meta& b, VarMaps& m) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case MetaKind::Ineq:
    case MetaKind::NegIneq:
      return ac_eq(a->ineq.lhs, b->ineq.lhs, m.pmap, m.nmap, m.cmap) &&
             ac_eq(a->ineq.rhs, b->ineq.rhs, m.pmap, m.nmap, m.cmap);
    case MetaKind::MAnd:
    case MetaKind::MOr: {
      std::vector<Meta> as, bs;
      meta_ac_flatten(a, a->kind, as);
      meta_ac_flatten(b, b->kind, bs);
      return meta_multiset_match(std::move(as), std::move(bs), m);
    }
    case MetaKind::MNot:
      return meta_ac_eq(a->kids[0], b->kids[0], m);
    case MetaKind::MImp:
      return meta_ac_eq(a->kids[0], b->kids[0], m) && meta_ac_eq(a->kids[1], b->kids[1], m);
    case MetaKind::Forall:
    case MetaKind::Exists: {
      if (a->sort != b->sort) return false;
      auto& map = a->sort == VarSort::Nominal ? m.nmap : m.cmap;
      auto old = map.find(a->var);
      std::optional<std::string> saved;
      if (old != map.end()) saved = old->second;
      map[a->var] = b->var;
      bool ok = meta_ac_eq(a->body, b->body, m);
      if (saved)
        map[a->var] = *saved;
      else
        map.erase(a->var);
      return ok;
    }
    case MetaKind::RForall:
    case MetaKind::RExists: {
      if (a->rconn != b->rconn || a->rvars.size() != b->rvars.size()) return false;
      if (!ac_eq(a->restrictor, b->restrictor, m.pmap, m.nmap, m.cmap)) return false;
      VarMaps save = m;
      for (size_t i = 0; i < a->rvars.size(); ++i) {
        auto& map = bound_sort(*a->rconn, (int)i) == VarSort::Nominal ? m.nmap : m.cmap;
        map[a->rvars[i]] = b->rvars[i];
      }
      bool ok = meta_ac_eq(a->body, b->body, m);
      if (!ok) m = save;
      return ok;
    }
  }
  return false;
}

}  // namespace detail

// Alpha/AC equality of closed meta formulas: quantified variables are
// renamed positionally, meet/join and the meta conjunction/disjunction are
// compared as multisets.
inline bool alpha_ac_equal(const Meta& a, const Meta& b) {
  detail::VarMaps m;
  // free variables must agree by name
  std::set<std::string> n1, c1, n2, c2;
  meta_free_pure(a, n1, c1);
  meta_free_pure(b, n2, c2);
  if (n1 != n2 || c1 != c2) return false;
  for (auto& v : n1) m.nmap[v] = v;
  for (auto& v : c1) m.cmap[v] = v;
  std::set<std::string> props;
  meta_for_each_ineq(a, [&](const Inequality& iq, bool) {
    std::set<std::string> nn, cc;
    collect_vars(iq.lhs, props, nn, cc);
    collect_vars(iq.rhs, props, nn, cc);
  });
  for (auto& p : props) m.pmap[p] = p;
  return detail::meta_ac_eq(a, b, m);
}

// Universally closes a meta formula over its free pure variables, in order
// of first occurrence (restrictor terms included).
inline Meta forall_close(const Meta& m) {
  std::set<std::string> noms, conoms;
  meta_free_pure(m, noms, conoms);
  std::vector<std::pair<VarSort, std::string>> order;
  std::set<std::string> seen;
  auto scan_term = [&](const Term& t) {
    for_each_node(t, [&](const Term& n) {
      if (n->kind == TermKind::Nominal && noms.count(n->name) && seen.insert("#" + n->name).second)
        order.emplace_back(VarSort::Nominal, n->name);
      if (n->kind == TermKind::Conominal && conoms.count(n->name) && seen.insert("*" + n->name).second)
        order.emplace_back(VarSort::Conominal, n->name);
    });
  };
  std::function<void(const Meta&)> walk = [&](const Meta& x) {
    switch (x->kind) {
      case MetaKind::Ineq:
      case MetaKind::NegIneq:
        scan_term(x->ineq.lhs);
        scan_term(x->ineq.rhs);
        return;
      case MetaKind::MAnd:
      case MetaKind::MOr:
      case MetaKind::MNot:
      case MetaKind::MImp:
        for (auto& k : x->kids) walk(k);
        return;
      case MetaKind::Forall:
      case MetaKind::Exists:
        walk(x->body);
        return;
      case MetaKind::RForall:
      case MetaKind::RExists:
        scan_term(x->restrictor);
        walk(x->body);
        return;
    }
  };
  walk(m);
  Meta out = m;
  for (auto it = order.rbegin(); it != order.rend(); ++it) out = mk_quant(MetaKind::Forall, it->first, it->second, out);
  return out;
}

// Equality modulo renaming of prop/nominal/conominal variables and modulo
// associativity+commutativity of meet/join. Intended for golden tests.
inline bool alpha_ac_equal(const Inequality& a, const Inequality& b) {
  std::vector<std::pair<TermKind, std::string>> av, bv;
  std::set<std::pair<TermKind, std::string>> sa, sb;
  detail::collect_all_vars(a.lhs, av, sa);
  detail::collect_all_vars(a.rhs, av, sa);
  detail::collect_all_vars(b.lhs, bv, sb);
  detail::collect_all_vars(b.rhs, bv, sb);
  if (av.size() != bv.size()) return false;
  std::map<std::string, std::string> pmap, nmap, cmap;
  std::set<std::string> up, un, uc;
  return detail::try_bijections(av, bv, 0, pmap, nmap, cmap, up, un, uc, [&]() {
    return detail::ac_eq(a.lhs, b.lhs, pmap, nmap, cmap) && detail::ac_eq(a.rhs, b.rhs, pmap, nmap, cmap);
  });
}

}  // namespace dlecorr
