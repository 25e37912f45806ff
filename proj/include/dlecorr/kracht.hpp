#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlecorr/alba.hpp"

namespace dlecorr {

// rho: wraps a pure atom into its kappa/lambda counterpart (involutive, the
// constructors normalize kappa(lambda(x)) and lambda(kappa(x)) away).
inline Term rho(const Term& atom) {
  if (nominal_sorted(atom)) return mk_kappa(atom);
  if (conominal_sorted(atom)) return mk_lambda(atom);
  throw SortError("rho applies to pure atoms only");
}

// ------------------------------------------------------------- structure

struct QuantifierEntry {
  enum class Kind { Pivotal, Alias, Type1, Type2 } kind;
  std::vector<std::pair<std::string, VarSort>> vars;
  const Connective* rconn = nullptr;  // Type1/Type2 only
  Term restrictor;                    // Type1/Type2 only: a pure atom
};

struct KrachtDisjunct {
  enum class Kind { Flat, And, Or, Exists, Forall } kind;
  Inequality flat;                    // Flat
  std::vector<KrachtDisjunct> kids;   // And/Or/Exists/Forall
  std::vector<std::string> rvars;     // Exists/Forall
  const Connective* rconn = nullptr;  // Exists/Forall
  Term restrictor;                    // Exists/Forall
  Term main;                          // the main pure variable (possibly rho-wrapped)

  Meta to_meta() const {
    switch (kind) {
      case Kind::Flat:
        return mk_ineq(flat.lhs, flat.rhs);
      case Kind::And:
      case Kind::Or: {
        std::vector<Meta> ks;
        for (auto& k : kids) ks.push_back(k.to_meta());
        return kind == Kind::And ? mk_mand(std::move(ks)) : mk_mor(std::move(ks));
      }
      case Kind::Exists:
      case Kind::Forall: {
        std::vector<Meta> ks;
        for (auto& k : kids) ks.push_back(k.to_meta());
        Meta body = kind == Kind::Exists ? mk_mand(std::move(ks)) : mk_mor(std::move(ks));
        return mk_rquant(kind == Kind::Exists ? MetaKind::RExists : MetaKind::RForall, rvars, rconn, restrictor,
                         body);
      }
    }
    return nullptr;
  }
};

struct KrachtForm {
  SigPtr sig;
  std::string pivot_j, pivot_m;
  std::vector<QuantifierEntry> prefix;  // pivotal and alias entries first, then restricted
  std::vector<Inequality> antecedent;   // alias inequalities (atom <= atom)
  std::vector<KrachtDisjunct> disjuncts;
  std::vector<std::string> polarity_violations;  // non-fatal diagnostics

  Meta to_meta() const {
    std::vector<Meta> hyp;
    for (auto& a : antecedent) hyp.push_back(mk_ineq(a.lhs, a.rhs));
    hyp.push_back(mk_negineq(mk_nom(pivot_j), mk_conom(pivot_m)));
    std::vector<Meta> djs;
    for (auto& d : disjuncts) djs.push_back(d.to_meta());
    Meta body = mk_mimp(mk_mand(std::move(hyp)), mk_mor(std::move(djs)));
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
      if (it->kind == QuantifierEntry::Kind::Type1 || it->kind == QuantifierEntry::Kind::Type2) {
        std::vector<std::string> vs;
        for (auto& [n, s] : it->vars) vs.push_back(n);
        body = mk_rquant(MetaKind::RForall, vs, it->rconn, it->restrictor, body);
      } else {
        for (auto v = it->vars.rbegin(); v != it->vars.rend(); ++v)
          body = mk_quant(MetaKind::Forall, v->second, v->first, body);
      }
    }
    return body;
  }
};

// ------------------------------------------------------------- validation

namespace detail {

[[noreturn]] inline void not_kracht(const std::string& reason, const std::string& msg) {
  throw KrachtError("NotKracht(" + reason + ")", msg);
}

inline bool is_flat_side(const Term& t) {
  if (is_pure_atom(t)) return true;
  if (t->kind == TermKind::App) {
    for (auto& a : t->args)
      if (!is_pure_atom(a)) return false;
    return is_pure(t);
  }
  if (t->kind == TermKind::Meet || t->kind == TermKind::Join)
    return is_pure_atom(t->args[0]) && is_pure_atom(t->args[1]) && is_pure(t);
  return false;
}

// Collects (kind, name, sign) for every pure-variable occurrence in a term,
// +lhs/-rhs signing handled by the caller through `sign`.
inline void pure_occurrences(const Term& t, Pol sign, std::vector<std::tuple<TermKind, std::string, Pol>>& out) {
  switch (t->kind) {
    case TermKind::Nominal:
    case TermKind::Conominal:
      out.emplace_back(t->kind, t->name, sign);
      return;
    case TermKind::Kappa:
    case TermKind::Lambda:
      pure_occurrences(t->args[0], sign, out);
      return;
    case TermKind::Meet:
    case TermKind::Join:
      pure_occurrences(t->args[0], sign, out);
      pure_occurrences(t->args[1], sign, out);
      return;
    case TermKind::App:
      for (size_t i = 0; i < t->args.size(); ++i)
        pure_occurrences(t->args[i], t->conn->order_type[i] == Pol::Pos ? sign : flip(sign), out);
      return;
    default:
      return;
  }
}

struct DisjunctParser {
  const SigPtr& sig;
  std::vector<std::string>* violations;

  // expected: the main pure variable this node must have (atom, possibly
  // rho-wrapped); nullopt at the top level of inference.
  KrachtDisjunct parse(const Meta& m, std::optional<Term> expected) {
    switch (m->kind) {
      case MetaKind::Ineq: {
        const Inequality& iq = m->ineq;
        if (!is_flat_side(iq.lhs) || !is_flat_side(iq.rhs))
          not_kracht("non-flat-inequality", print(iq) + " is not flat");
        KrachtDisjunct d;
        d.kind = KrachtDisjunct::Kind::Flat;
        d.flat = iq;
        d.main = infer_flat_main(iq, expected);
        check_polarities(d);
        return d;
      }
      case MetaKind::MAnd:
      case MetaKind::MOr: {
        KrachtDisjunct d;
        d.kind = m->kind == MetaKind::MAnd ? KrachtDisjunct::Kind::And : KrachtDisjunct::Kind::Or;
        std::optional<Term> exp = expected;
        for (auto& k : m->kids) {
          KrachtDisjunct kd = parse(k, exp);
          if (!exp) exp = kd.main;  // same-main combination
          d.kids.push_back(std::move(kd));
        }
        d.main = *exp;
        return d;
      }
      case MetaKind::RExists: {
        // (E u ... >h w) AND-combination of kids with mains among u
        KrachtDisjunct d;
        d.kind = KrachtDisjunct::Kind::Exists;
        d.rvars = m->rvars;
        d.rconn = m->rconn;
        d.restrictor = m->restrictor;
        d.main = m->restrictor;
        if (expected && !term_eq(*expected, d.main))
          not_kracht("main-variable", "existential restrictor " + print(d.main) + " does not match the main " +
                                          print(*expected));
        if (restrictor_sort(*m->rconn) == VarSort::Nominal ? !nominal_sorted(d.main) : !conominal_sorted(d.main))
          not_kracht("restrictor-sort", "restrictor " + print(d.main) + " has the wrong sort for " + m->rconn->name);
        std::vector<Meta> kids = m->body->kind == MetaKind::MAnd ? m->body->kids : std::vector<Meta>{m->body};
        for (auto& k : kids) {
          // each conjunct's main is one of the bound variables, bare
          KrachtDisjunct kd = parse_bound_child(k, m->rvars, *m->rconn, false);
          d.kids.push_back(std::move(kd));
        }
        return d;
      }
      case MetaKind::RForall: {
        // (A u ... >h rho(w)) OR-combination of kids with mains rho(u)
        KrachtDisjunct d;
        d.kind = KrachtDisjunct::Kind::Forall;
        d.rvars = m->rvars;
        d.rconn = m->rconn;
        d.restrictor = m->restrictor;
        d.main = rho(m->restrictor);
        if (expected && !term_eq(*expected, d.main))
          not_kracht("main-variable", "universal restrictor " + print(m->restrictor) + " does not match the main " +
                                          print(*expected));
        std::vector<Meta> kids = m->body->kind == MetaKind::MOr ? m->body->kids : std::vector<Meta>{m->body};
        for (auto& k : kids) {
          KrachtDisjunct kd = parse_bound_child(k, m->rvars, *m->rconn, true);
          d.kids.push_back(std::move(kd));
        }
        return d;
      }
      default:
        not_kracht("disjunct-grammar", "unexpected connective in a Kracht disjunct: " + print(m));
    }
  }

  KrachtDisjunct parse_bound_child(const Meta& k, const std::vector<std::string>& rvars, const Connective& rconn,
                                   bool wrapped) {
    for (size_t i = 0; i < rvars.size(); ++i) {
      Term atom = bound_sort(rconn, (int)i) == VarSort::Nominal ? mk_nom(rvars[i]) : mk_conom(rvars[i]);
      Term main = wrapped ? rho(atom) : atom;
      try {
        return parse(k, main);
      } catch (const KrachtError&) {
        continue;
      }
    }
    not_kracht("main-variable", "no bound variable is the main of " + print(k));
  }

  Term infer_flat_main(const Inequality& iq, const std::optional<Term>& expected) {
    auto display_matches = [&](const Term& side) { return expected && term_eq(side, *expected); };
    if (expected) {
      if (display_matches(iq.lhs) || display_matches(iq.rhs)) {
        // the main must not occur on the other side
        const Term& other = display_matches(iq.lhs) ? iq.rhs : iq.lhs;
        auto core = atom_core(*expected);
        if (core) {
          std::vector<std::tuple<TermKind, std::string, Pol>> occ;
          pure_occurrences(other, Pol::Pos, occ);
          for (auto& [k, n, s] : occ)
            if (n == *core) not_kracht("main-variable", *core + " occurs on both sides of " + print(iq));
        }
        return *expected;
      }
      not_kracht("main-variable", print(*expected) + " is not on display in " + print(iq));
    }
    // top level: the main has shape rho(u)
    bool lw = iq.lhs->kind == TermKind::Kappa || iq.lhs->kind == TermKind::Lambda;
    bool rw = iq.rhs->kind == TermKind::Kappa || iq.rhs->kind == TermKind::Lambda;
    if (lw && is_pure_atom(iq.lhs) && !rw) return iq.lhs;
    if (rw && is_pure_atom(iq.rhs) && !lw) return iq.rhs;
    not_kracht("non-rho-main", "cannot identify a rho-shaped main variable in " + print(iq));
  }

  // Non-main nominals must occur negatively, conominals positively, in the
  // +lhs/-rhs signing (the parity-free reading that the compaction lemmas
  // need; violations are diagnostics, not errors, unless strict).
  void check_polarities(const KrachtDisjunct& d) {
    auto core = atom_core(d.main);
    std::vector<std::tuple<TermKind, std::string, Pol>> occ;
    pure_occurrences(d.flat.lhs, Pol::Pos, occ);
    pure_occurrences(d.flat.rhs, Pol::Neg, occ);
    bool main_seen = false;
    for (auto& [k, n, s] : occ) {
      if (core && n == *core && !main_seen) {
        main_seen = true;  // the display occurrence
        continue;
      }
      if (k == TermKind::Nominal && s != Pol::Neg)
        violations->push_back("nominal " + n + " occurs positively in " + print(d.flat));
      if (k == TermKind::Conominal && s != Pol::Pos)
        violations->push_back("conominal " + n + " occurs negatively in " + print(d.flat));
    }
  }
};

}  // namespace detail

// Parses and checks a closed meta formula as a Kracht formula. The disjunct
// polarity condition is recorded as a diagnostic unless `strict_polarity`.
inline KrachtForm validate_kracht(const Meta& input, const SigPtr& sig, bool strict_polarity = false) {
  KrachtForm kf;
  kf.sig = sig;
  // 1. peel the quantifier prefix
  Meta cur = input;
  struct RawQuant {
    bool restricted;
    std::vector<std::pair<std::string, VarSort>> vars;
    const Connective* conn = nullptr;
    Term restrictor;
  };
  std::vector<RawQuant> raw;
  for (;;) {
    if (cur->kind == MetaKind::Forall) {
      raw.push_back({false, {{cur->var, cur->sort}}, nullptr, nullptr});
      cur = cur->body;
    } else if (cur->kind == MetaKind::RForall) {
      RawQuant q{true, {}, cur->rconn, cur->restrictor};
      for (size_t i = 0; i < cur->rvars.size(); ++i) q.vars.emplace_back(cur->rvars[i], bound_sort(*cur->rconn, (int)i));
      raw.push_back(q);
      cur = cur->body;
    } else {
      break;
    }
  }
  if (cur->kind != MetaKind::MImp) detail::not_kracht("no-antecedent", "expected an implication after the prefix");
  Meta ante = cur->kids[0], cons = cur->kids[1];

  // 2. antecedent: alias inequalities plus exactly one pivotal
  std::vector<Meta> hyp = ante->kind == MetaKind::MAnd ? ante->kids : std::vector<Meta>{ante};
  std::optional<Inequality> pivotal;
  for (auto& h : hyp) {
    if (h->kind == MetaKind::NegIneq) {
      if (pivotal) detail::not_kracht("multi-pivotal", "more than one negated inequality in the antecedent");
      if (h->ineq.lhs->kind != TermKind::Nominal || h->ineq.rhs->kind != TermKind::Conominal)
        detail::not_kracht("pivotal-shape", "the pivotal inequality must be a bare j !<= m");
      pivotal = h->ineq;
    } else if (h->kind == MetaKind::Ineq) {
      const Inequality& iq = h->ineq;
      bool nn = iq.lhs->kind == TermKind::Nominal && iq.rhs->kind == TermKind::Nominal;
      bool cc = iq.lhs->kind == TermKind::Conominal && iq.rhs->kind == TermKind::Conominal;
      if (!nn && !cc) detail::not_kracht("antecedent-shape", print(iq) + " is not an alias inequality");
      kf.antecedent.push_back(iq);
    } else {
      detail::not_kracht("antecedent-shape", "unexpected antecedent member " + print(h));
    }
  }
  if (!pivotal) detail::not_kracht("no-pivotal", "the antecedent has no negated inequality");
  kf.pivot_j = pivotal->lhs->name;
  kf.pivot_m = pivotal->rhs->name;

  // 3. disjuncts
  detail::DisjunctParser dp{sig, &kf.polarity_violations};
  std::vector<Meta> djs = cons->kind == MetaKind::MOr ? cons->kids : std::vector<Meta>{cons};
  for (auto& d : djs) kf.disjuncts.push_back(dp.parse(d, std::nullopt));
  if (strict_polarity && !kf.polarity_violations.empty())
    detail::not_kracht("polarity-violation", kf.polarity_violations.front());

  // 4. variable usage across the formula
  std::set<std::string> in_cons_nom, in_cons_conom;
  {
    std::vector<std::tuple<TermKind, std::string, Pol>> occ;
    std::function<void(const KrachtDisjunct&)> walk = [&](const KrachtDisjunct& d) {
      if (d.kind == KrachtDisjunct::Kind::Flat) {
        detail::pure_occurrences(d.flat.lhs, Pol::Pos, occ);
        detail::pure_occurrences(d.flat.rhs, Pol::Neg, occ);
      }
      if (d.restrictor) detail::pure_occurrences(d.restrictor, Pol::Pos, occ);
      for (auto& k : d.kids) walk(k);
    };
    for (auto& d : kf.disjuncts) walk(d);
    for (auto& [k, n, s] : occ) (k == TermKind::Nominal ? in_cons_nom : in_cons_conom).insert(n);
  }
  std::set<std::string> in_ante_nom, in_ante_conom;
  for (auto& a : kf.antecedent) {
    std::vector<std::tuple<TermKind, std::string, Pol>> occ;
    detail::pure_occurrences(a.lhs, Pol::Pos, occ);
    detail::pure_occurrences(a.rhs, Pol::Neg, occ);
    for (auto& [k, n, s] : occ) (k == TermKind::Nominal ? in_ante_nom : in_ante_conom).insert(n);
  }
  // restrictor usage in the prefix
  std::map<std::string, int> restrictor_uses;
  for (auto& q : raw)
    if (q.restricted) {
      auto c = atom_core(q.restrictor);
      if (c) ++restrictor_uses[*c];
    }

  // bound variables inside disjuncts (not inherently universal)
  std::set<std::string> inner_bound;
  {
    std::function<void(const KrachtDisjunct&)> walk = [&](const KrachtDisjunct& d) {
      for (auto& v : d.rvars) inner_bound.insert(v);
      for (auto& k : d.kids) walk(k);
    };
    for (auto& d : kf.disjuncts) walk(d);
  }

  // alias counting: right sides of nominal alias inequalities, left sides of
  // conominal ones
  std::map<std::string, int> alias_count;
  for (auto& a : kf.antecedent) {
    if (a.rhs->kind == TermKind::Nominal) ++alias_count[a.rhs->name];
    if (a.lhs->kind == TermKind::Conominal) ++alias_count[a.lhs->name];
  }

  // 5. classify prefix entries
  for (auto& q : raw) {
    QuantifierEntry e;
    e.vars = q.vars;
    e.rconn = q.conn;
    e.restrictor = q.restrictor;
    if (!q.restricted) {
      const auto& [name, sort] = q.vars[0];
      bool is_pivot = (sort == VarSort::Nominal && name == kf.pivot_j) ||
                      (sort == VarSort::Conominal && name == kf.pivot_m);
      if (is_pivot) {
        e.kind = QuantifierEntry::Kind::Pivotal;
      } else {
        if (alias_count[name] != 1)
          detail::not_kracht("alias-violation",
                             "plain variable " + name + " must appear in exactly one alias inequality");
        e.kind = QuantifierEntry::Kind::Alias;
      }
    } else {
      bool any_cons = false, any_ante = false, any_restrictor = false;
      for (auto& [name, sort] : q.vars) {
        bool cons = (sort == VarSort::Nominal ? in_cons_nom : in_cons_conom).count(name) > 0;
        bool antec = (sort == VarSort::Nominal ? in_ante_nom : in_ante_conom).count(name) > 0;
        bool restr = restrictor_uses.count(name) > 0;
        any_cons |= cons;
        any_ante |= antec;
        any_restrictor |= restr;
      }
      if (any_cons && !any_ante) {
        e.kind = QuantifierEntry::Kind::Type1;
      } else if (!any_cons && (any_ante || any_restrictor)) {
        e.kind = QuantifierEntry::Kind::Type2;
      } else if (!any_cons && !any_ante && !any_restrictor) {
        e.kind = QuantifierEntry::Kind::Type1;  // dead quantifier; refine drops it
      } else {
        detail::not_kracht("quantifier-type-violation",
                           "restricted variables must be of type 1 or type 2");
      }
    }
    kf.prefix.push_back(e);
  }

  // 6. non-main consequent variables are inherently universal
  std::set<std::string> prefix_vars;
  for (auto& e : kf.prefix)
    for (auto& [n, s] : e.vars) prefix_vars.insert(n);
  {
    std::function<void(const KrachtDisjunct&)> walk = [&](const KrachtDisjunct& d) {
      if (d.kind == KrachtDisjunct::Kind::Flat) {
        std::vector<std::tuple<TermKind, std::string, Pol>> occ;
        detail::pure_occurrences(d.flat.lhs, Pol::Pos, occ);
        detail::pure_occurrences(d.flat.rhs, Pol::Neg, occ);
        for (auto& [k, n, s] : occ)
          if (!prefix_vars.count(n) && !inner_bound.count(n))
            detail::not_kracht("non-inherently-universal-atom-var", "variable " + n + " is not bound");
      }
      for (auto& k : d.kids) walk(k);
    };
    for (auto& d : kf.disjuncts) walk(d);
  }
  return kf;
}

// --------------------------------------------------------------- refine

// Refined Kracht formula: pivotal variables occur in the consequent only as
// rho-mains of flat disjuncts, aliases all occur in the consequent, dead
// type-1 quantifiers are dropped. Idempotent.
inline KrachtForm refine(const KrachtForm& input) {
  KrachtForm kf = input;
  FreshNames fresh;
  fresh.reserve(mk_nom(kf.pivot_j));
  {
    Meta m = kf.to_meta();
    meta_for_each_ineq(m, [&](const Inequality& iq, bool) {
      fresh.reserve(iq);
    });
  }
  // (a) pivotal occurrences in disjuncts: quantifier-restrictor positions and
  // non-main flat positions get a fresh alias; rho-main flats keep the pivot.
  auto uses_pivot = [&](const Term& atom, const std::string& pj, const std::string& pm) {
    auto c = atom_core(atom);
    return c && (*c == pj || *c == pm);
  };
  bool need_j = false, need_m = false;
  std::function<void(const KrachtDisjunct&, bool)> scan = [&](const KrachtDisjunct& d, bool top) {
    if (d.kind == KrachtDisjunct::Kind::Flat) {
      // non-main occurrences
      std::vector<std::tuple<TermKind, std::string, Pol>> occ;
      detail::pure_occurrences(d.flat.lhs, Pol::Pos, occ);
      detail::pure_occurrences(d.flat.rhs, Pol::Neg, occ);
      auto core = atom_core(d.main);
      bool main_seen = false;
      for (auto& [k, n, s] : occ) {
        if (core && n == *core && !main_seen) {
          main_seen = true;
          continue;
        }
        if (k == TermKind::Nominal && n == kf.pivot_j) need_j = true;
        if (k == TermKind::Conominal && n == kf.pivot_m) need_m = true;
      }
      return;
    }
    if (d.restrictor && uses_pivot(d.restrictor, kf.pivot_j, kf.pivot_m)) {
      auto c = atom_core(d.restrictor);
      (*c == kf.pivot_j ? need_j : need_m) = true;
    }
    for (auto& k : d.kids) scan(k, false);
  };
  for (auto& d : kf.disjuncts) scan(d, true);

  auto replace_atom_core = [](Term t, TermKind kind, const std::string& from, const Term& to,
                              const Term* keep_main) -> Term {
    std::function<Term(const Term&)> go = [&](const Term& x) -> Term {
      if (x->kind == kind && x->name == from) return to;
      if (x->args.empty()) return x;
      std::vector<Term> args;
      for (auto& a : x->args) args.push_back(go(a));
      switch (x->kind) {
        case TermKind::Meet: return mk_meet(args[0], args[1]);
        case TermKind::Join: return mk_join(args[0], args[1]);
        case TermKind::Kappa: return mk_kappa(args[0]);
        case TermKind::Lambda: return mk_lambda(args[0]);
        case TermKind::App: return mk_app(x->conn, args);
        default: return x;
      }
    };
    (void)keep_main;
    return go(t);
  };

  auto apply_alias = [&](bool for_j) {
    std::string pivot = for_j ? kf.pivot_j : kf.pivot_m;
    TermKind kind = for_j ? TermKind::Nominal : TermKind::Conominal;
    std::string alias = for_j ? fresh.nominal() : fresh.conominal();
    Term alias_atom = for_j ? Term(mk_nom(alias)) : Term(mk_conom(alias));
    Term pivot_atom = for_j ? Term(mk_nom(pivot)) : Term(mk_conom(pivot));
    // alias inequality: j <= h for nominals, o <= m for conominals
    kf.antecedent.push_back(for_j ? Inequality{pivot_atom, alias_atom} : Inequality{alias_atom, pivot_atom});
    QuantifierEntry e;
    e.kind = QuantifierEntry::Kind::Alias;
    e.vars = {{alias, for_j ? VarSort::Nominal : VarSort::Conominal}};
    // insert after the last plain entry
    size_t pos = 0;
    for (size_t i = 0; i < kf.prefix.size(); ++i)
      if (kf.prefix[i].kind == QuantifierEntry::Kind::Pivotal || kf.prefix[i].kind == QuantifierEntry::Kind::Alias)
        pos = i + 1;
    kf.prefix.insert(kf.prefix.begin() + pos, e);
    // replace consequent occurrences, keeping rho-main flats on the pivot
    std::function<void(KrachtDisjunct&)> rw = [&](KrachtDisjunct& d) {
      if (d.kind == KrachtDisjunct::Kind::Flat) {
        auto core = atom_core(d.main);
        bool main_is_pivot = core && *core == pivot &&
                             (d.main->kind == TermKind::Kappa || d.main->kind == TermKind::Lambda);
        // replace in the non-main side always; in the main side only when the
        // main itself is not the pivot's rho-atom
        bool lhs_is_main = term_eq(d.flat.lhs, d.main);
        Term nl = d.flat.lhs, nr = d.flat.rhs;
        if (lhs_is_main) {
          nr = replace_atom_core(nr, kind, pivot, alias_atom, nullptr);
          if (!main_is_pivot) nl = replace_atom_core(nl, kind, pivot, alias_atom, nullptr);
        } else {
          nl = replace_atom_core(nl, kind, pivot, alias_atom, nullptr);
          if (!main_is_pivot) nr = replace_atom_core(nr, kind, pivot, alias_atom, nullptr);
        }
        d.flat = {nl, nr};
        if (!main_is_pivot) d.main = replace_atom_core(d.main, kind, pivot, alias_atom, nullptr);
        return;
      }
      if (d.restrictor) d.restrictor = replace_atom_core(d.restrictor, kind, pivot, alias_atom, nullptr);
      if (d.main) d.main = replace_atom_core(d.main, kind, pivot, alias_atom, nullptr);
      for (auto& k : d.kids) rw(k);
    };
    for (auto& d : kf.disjuncts) rw(d);
  };
  if (need_j) apply_alias(true);
  if (need_m) apply_alias(false);

  // (b) aliases absent from the consequent: drop the alias inequality and
  // the quantifier. (c) dead type-1 quantifiers: drop.
  std::set<std::string> used;
  {
    std::function<void(const KrachtDisjunct&)> walk = [&](const KrachtDisjunct& d) {
      if (d.kind == KrachtDisjunct::Kind::Flat) {
        std::vector<std::tuple<TermKind, std::string, Pol>> occ;
        detail::pure_occurrences(d.flat.lhs, Pol::Pos, occ);
        detail::pure_occurrences(d.flat.rhs, Pol::Neg, occ);
        for (auto& [k, n, s] : occ) used.insert(n);
      }
      if (d.restrictor) {
        auto c = atom_core(d.restrictor);
        if (c) used.insert(*c);
      }
      for (auto& k : d.kids) walk(k);
    };
    for (auto& d : kf.disjuncts) walk(d);
  }
  // restrictors of kept restricted quantifiers count as usage, processed
  // right to left so chained type-2 restrictors stay alive
  std::vector<QuantifierEntry> kept_restricted;
  for (auto it = kf.prefix.rbegin(); it != kf.prefix.rend(); ++it) {
    if (it->kind == QuantifierEntry::Kind::Type1 || it->kind == QuantifierEntry::Kind::Type2) {
      bool alive = false;
      for (auto& [n, s] : it->vars) alive |= used.count(n) > 0;
      // type-2 variables also live through the antecedent
      for (auto& [n, s] : it->vars)
        for (auto& a : kf.antecedent) {
          auto lc = atom_core(a.lhs), rc = atom_core(a.rhs);
          if ((lc && *lc == n) || (rc && *rc == n)) alive = true;
        }
      if (alive) {
        auto c = atom_core(it->restrictor);
        if (c) used.insert(*c);
        kept_restricted.push_back(*it);
      }
    }
  }
  std::vector<QuantifierEntry> prefix2;
  for (auto& e : kf.prefix) {
    if (e.kind == QuantifierEntry::Kind::Pivotal) {
      prefix2.push_back(e);
      continue;
    }
    if (e.kind == QuantifierEntry::Kind::Alias) {
      const std::string& n = e.vars[0].first;
      if (used.count(n)) {
        prefix2.push_back(e);
      } else {
        // drop the alias inequality too
        std::vector<Inequality> keep;
        for (auto& a : kf.antecedent) {
          auto lc = atom_core(a.lhs), rc = atom_core(a.rhs);
          bool is_this = (a.rhs->kind == TermKind::Nominal && rc && *rc == n) ||
                         (a.lhs->kind == TermKind::Conominal && lc && *lc == n);
          if (!is_this) keep.push_back(a);
        }
        kf.antecedent = keep;
      }
      continue;
    }
    bool alive = false;
    for (auto& kq : kept_restricted)
      if (kq.vars == e.vars && kq.restrictor == e.restrictor) alive = true;
    if (alive) prefix2.push_back(e);
  }
  kf.prefix = prefix2;
  return kf;
}

// -------------------------------------------- Table 2 stripping (one step)

// The four flattening rows with restricted quantifiers, applied to an
// inequality with a pure atom on display against an operator application.
inline Meta strip_flat(const Inequality& iq, const SigPtr& sig, FreshNames& fresh) {
  bool lhs_atom = is_pure_atom(iq.lhs);
  bool rhs_atom = is_pure_atom(iq.rhs);
  auto mk_children = [&](const Connective* h, const std::vector<Term>& args, bool existential,
                         std::vector<std::string>& vars) {
    std::vector<Meta> kids;
    for (int i = 0; i < h->arity; ++i) {
      VarSort s = bound_sort(*h, i);
      std::string v = s == VarSort::Nominal ? fresh.nominal() : fresh.conominal();
      vars.push_back(v);
      Term atom = s == VarSort::Nominal ? mk_nom(v) : mk_conom(v);
      if (existential) {
        kids.push_back(s == VarSort::Nominal ? mk_ineq(atom, args[i]) : mk_ineq(args[i], atom));
      } else {
        kids.push_back(s == VarSort::Nominal ? mk_ineq(args[i], mk_kappa(atom)) : mk_ineq(mk_lambda(atom), args[i]));
      }
    }
    return kids;
  };
  if (lhs_atom && iq.rhs->kind == TermKind::App) {
    const Connective* h = iq.rhs->conn;
    std::vector<std::string> vars;
    if (h->family == Family::F) {
      // j <= f(...) : existential row
      auto kids = mk_children(h, iq.rhs->args, true, vars);
      return mk_rquant(MetaKind::RExists, vars, h, iq.lhs, mk_mand(std::move(kids)));
    }
    // j <= g(...) : universal row restricted by kappa(j)
    auto kids = mk_children(h, iq.rhs->args, false, vars);
    return mk_rquant(MetaKind::RForall, vars, h, rho(iq.lhs), mk_mor(std::move(kids)));
  }
  if (rhs_atom && iq.lhs->kind == TermKind::App) {
    const Connective* h = iq.lhs->conn;
    std::vector<std::string> vars;
    if (h->family == Family::G) {
      // g(...) <= m : existential row
      auto kids = mk_children(h, iq.lhs->args, true, vars);
      return mk_rquant(MetaKind::RExists, vars, h, iq.rhs, mk_mand(std::move(kids)));
    }
    // f(...) <= m : universal row restricted by lambda(m)
    auto kids = mk_children(h, iq.lhs->args, false, vars);
    return mk_rquant(MetaKind::RForall, vars, h, rho(iq.rhs), mk_mor(std::move(kids)));
  }
  throw RuleError("NotStrippable", "no operator on display in " + print(iq));
}

// ------------------------------------------------- inductive to Kracht

namespace detail {

struct AnteStrip {
  std::vector<Inequality> aliases;
  std::vector<QuantifierEntry> type2;
  std::vector<QuantifierEntry> type1;
};

// Decomposes j' <= phi' (or psi' <= m') into alias inequalities, type-2
// existential chains and type-1 restricting quantifiers, per the antecedent
// stripping lemma.
inline void strip_ante(const Term& displayed, const Term& t, bool nominal_side, const SigPtr& sig, FreshNames& fresh,
                       AnteStrip& out, Trace* trace) {
  if (is_pure_atom(t)) {
    out.aliases.push_back(nominal_side ? Inequality{displayed, t} : Inequality{t, displayed});
    return;
  }
  if (nominal_side && t->kind == TermKind::Meet) {
    strip_ante(displayed, t->args[0], true, sig, fresh, out, trace);
    strip_ante(displayed, t->args[1], true, sig, fresh, out, trace);
    return;
  }
  if (!nominal_side && t->kind == TermKind::Join) {
    strip_ante(displayed, t->args[0], false, sig, fresh, out, trace);
    strip_ante(displayed, t->args[1], false, sig, fresh, out, trace);
    return;
  }
  if (t->kind != TermKind::App)
    throw RuleError("InternalShapeError", "unexpected antecedent skeleton node " + print(t));
  const Connective* h = t->conn;
  if ((nominal_side && h->family != Family::F) || (!nominal_side && h->family != Family::G))
    throw RuleError("InternalShapeError", "skeleton family mismatch at " + print(t));
  bool all_atoms = true;
  for (auto& a : t->args)
    if (!is_pure_atom(a)) all_atoms = false;
  if (all_atoms) {
    // type-1 restricted quantifier binding the slot variables directly
    QuantifierEntry e;
    e.kind = QuantifierEntry::Kind::Type1;
    e.rconn = h;
    e.restrictor = displayed;
    for (int i = 0; i < h->arity; ++i) {
      auto c = atom_core(t->args[i]);
      if (!c) throw RuleError("InternalShapeError", "restricting coordinate is not a variable in " + print(t));
      e.vars.emplace_back(*c, bound_sort(*h, i));
    }
    if (trace)
      trace->add("antecedent-strip", print(nominal_side ? Inequality{displayed, t} : Inequality{t, displayed}),
                 "restricted quantifier over " + h->name, "flattening with restricted quantifiers");
    out.type1.push_back(e);
    return;
  }
  // type-2 existential chain: fresh bound variables for every coordinate
  QuantifierEntry e;
  e.kind = QuantifierEntry::Kind::Type2;
  e.rconn = h;
  e.restrictor = displayed;
  std::vector<Term> bound_atoms;
  for (int i = 0; i < h->arity; ++i) {
    VarSort s = bound_sort(*h, i);
    std::string v = s == VarSort::Nominal ? fresh.nominal() : fresh.conominal();
    e.vars.emplace_back(v, s);
    bound_atoms.push_back(s == VarSort::Nominal ? Term(mk_nom(v)) : Term(mk_conom(v)));
  }
  if (trace)
    trace->add("antecedent-strip", print(nominal_side ? Inequality{displayed, t} : Inequality{t, displayed}),
               "existential chain over " + h->name, "flattening with restricted quantifiers");
  out.type2.push_back(e);
  for (int i = 0; i < h->arity; ++i) {
    bool child_nominal = bound_sort(*h, i) == VarSort::Nominal;
    strip_ante(bound_atoms[i], t->args[i], child_nominal, sig, fresh, out, trace);
  }
}

// Strips a consequent inequality with a rho-main on display into a Kracht
// disjunct, preferring splitting over quantifier introduction.
inline KrachtDisjunct strip_disjunct(const Term& main, const Term& t, bool main_nominal_sorted, const SigPtr& sig,
                                     FreshNames& fresh, Trace* trace) {
  auto flat = [&](const Term& side) {
    KrachtDisjunct d;
    d.kind = KrachtDisjunct::Kind::Flat;
    d.flat = main_nominal_sorted ? Inequality{main, side} : Inequality{side, main};
    d.main = main;
    return d;
  };
  if (detail::is_flat_side(t)) {
    // one operator layer over atoms (or a bare atom): already flat
    if (is_pure_atom(t) || t->kind == TermKind::App) return flat(t);
  }
  if (t->kind == TermKind::Meet || t->kind == TermKind::Join) {
    bool split_and = main_nominal_sorted ? t->kind == TermKind::Meet : t->kind == TermKind::Join;
    KrachtDisjunct d;
    d.kind = split_and ? KrachtDisjunct::Kind::And : KrachtDisjunct::Kind::Or;
    d.main = main;
    d.kids.push_back(strip_disjunct(main, t->args[0], main_nominal_sorted, sig, fresh, trace));
    d.kids.push_back(strip_disjunct(main, t->args[1], main_nominal_sorted, sig, fresh, trace));
    if (trace)
      trace->add(split_and ? "consequent-split" : "consequent-choice",
                 print(main_nominal_sorted ? Inequality{main, t} : Inequality{t, main}), "two disjunct children",
                 split_and ? "splitting" : "join/meet primality of the main variable");
    return d;
  }
  if (t->kind != TermKind::App) throw RuleError("NotStrippable", "cannot strip " + print(t));
  const Connective* h = t->conn;
  bool existential = main_nominal_sorted == (h->family == Family::F);
  KrachtDisjunct d;
  d.kind = existential ? KrachtDisjunct::Kind::Exists : KrachtDisjunct::Kind::Forall;
  d.rconn = h;
  d.restrictor = existential ? main : rho(main);
  d.main = main;
  for (int i = 0; i < h->arity; ++i) {
    VarSort s = bound_sort(*h, i);
    std::string v = s == VarSort::Nominal ? fresh.nominal() : fresh.conominal();
    d.rvars.push_back(v);
    Term atom = s == VarSort::Nominal ? Term(mk_nom(v)) : Term(mk_conom(v));
    Term child_main = existential ? atom : rho(atom);
    bool child_nominal = nominal_sorted(child_main);
    d.kids.push_back(strip_disjunct(child_main, t->args[i], child_nominal, sig, fresh, trace));
  }
  if (trace)
    trace->add("consequent-strip", print(main_nominal_sorted ? Inequality{main, t} : Inequality{t, main}),
               std::string(existential ? "existential" : "universal") + " restricted quantifier over " + h->name,
               "flattening with restricted quantifiers");
  return d;
}

}  // namespace detail

// The full forward transformation: slot-variable ALBA output, contrapositive,
// pivotal insertion, consequent and antecedent stripping, refinement.
inline KrachtForm inductive_to_kracht(const Inequality& input, const SigPtr& sig, Trace* trace = nullptr) {
  SlotSystem ss = build_slot_system(input, sig, trace);
  FreshNames fresh;
  fresh.reserve(input);
  for (auto& v : ss.slot_vars) fresh.reserve(mk_prop(v));

  KrachtForm kf;
  kf.sig = sig;

  // contrapositive: constraints become disjuncts with rho-mains
  struct PendingDisjunct {
    Term main;
    Term body;
    bool main_nominal;
  };
  std::vector<PendingDisjunct> pend;
  for (size_t i = 0, ci = 0; i < ss.witness.slots.size(); ++i) {
    const Slot& s = ss.witness.slots[i];
    if (s.kind == Slot::Kind::UniformPos) {
      // i <= gamma ~> gamma <= kappa(i)
      const Inequality& c = ss.constraints[ci++];
      pend.push_back({mk_kappa(c.lhs), c.rhs, false});
    } else if (s.kind == Slot::Kind::UniformNeg) {
      const Inequality& c = ss.constraints[ci++];
      pend.push_back({mk_lambda(c.rhs), c.lhs, true});
    }
  }
  if (trace) {
    std::string djs;
    for (auto& p : pend)
      djs += (djs.empty() ? "" : " || ") +
             print(p.main_nominal ? Inequality{p.main, p.body} : Inequality{p.body, p.main});
    trace->add("contrapositive", "slot system", djs.empty() ? "(empty consequent)" : djs,
               "negated constraints become disjuncts");
  }

  // pivotal insertion: reuse bare slot atoms, otherwise fresh pivot plus
  // antecedent stripping
  const Term& phi = ss.skeleton_instance.lhs;
  const Term& psi = ss.skeleton_instance.rhs;
  detail::AnteStrip as;
  if (phi->kind == TermKind::Nominal) {
    kf.pivot_j = phi->name;
  } else {
    kf.pivot_j = fresh.nominal();
    detail::strip_ante(mk_nom(kf.pivot_j), phi, true, sig, fresh, as, trace);
  }
  if (psi->kind == TermKind::Conominal) {
    kf.pivot_m = psi->name;
  } else {
    kf.pivot_m = fresh.conominal();
    detail::strip_ante(mk_conom(kf.pivot_m), psi, false, sig, fresh, as, trace);
  }
  if (trace)
    trace->add("pivotal-insertion", print(ss.skeleton_instance),
               "#" + kf.pivot_j + " !<= *" + kf.pivot_m + " and the stripped antecedent",
               "approximation of the negated skeleton instance");
  kf.antecedent = as.aliases;

  // consequent stripping
  for (auto& p : pend)
    kf.disjuncts.push_back(detail::strip_disjunct(p.main, p.body, p.main_nominal, sig, fresh, trace));

  // prefix: pivots, aliases (slot variables and alias targets), then type-2
  // in dependency order, then type-1
  std::set<std::string> in_prefix;
  auto add_plain = [&](const std::string& n, VarSort s, QuantifierEntry::Kind k) {
    if (in_prefix.count(n)) return;
    in_prefix.insert(n);
    QuantifierEntry e;
    e.kind = k;
    e.vars = {{n, s}};
    kf.prefix.push_back(e);
  };
  add_plain(kf.pivot_j, VarSort::Nominal, QuantifierEntry::Kind::Pivotal);
  add_plain(kf.pivot_m, VarSort::Conominal, QuantifierEntry::Kind::Pivotal);
  for (auto& a : kf.antecedent) {
    // the alias is the nominal on the right / conominal on the left
    if (a.rhs->kind == TermKind::Nominal) add_plain(a.rhs->name, VarSort::Nominal, QuantifierEntry::Kind::Alias);
    if (a.lhs->kind == TermKind::Conominal) add_plain(a.lhs->name, VarSort::Conominal, QuantifierEntry::Kind::Alias);
  }
  for (auto& e : as.type2) {
    for (auto& [n, s] : e.vars) in_prefix.insert(n);
    kf.prefix.push_back(e);
  }
  for (auto& e : as.type1) {
    for (auto& [n, s] : e.vars) in_prefix.insert(n);
    kf.prefix.push_back(e);
  }
  kf = refine(kf);
  if (trace) trace->add("kracht-assembled", print(input), print(kf.to_meta()), "refined Kracht formula");
  // self-check: the constructed formula validates
  return validate_kracht(kf.to_meta(), sig);
}

}  // namespace dlecorr
