#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlecorr/classifier.hpp"
#include "dlecorr/print.hpp"
#include "dlecorr/trace.hpp"

namespace dlecorr {

// ---------------------------------------------------------- quasi systems

// A quasi-inequality: meta-conjunction of inequalities implying one.
struct QuasiSystem {
  std::vector<Inequality> ante;
  Inequality concl;

  // meta-grammar text (parseable, so trace steps can be oracle-checked)
  std::string show() const {
    std::string s;
    for (size_t i = 0; i < ante.size(); ++i) s += (i ? " && " : "") + print(ante[i]);
    s += (ante.empty() ? "" : " ==> ") + print(concl);
    return s;
  }

  // Universally quantifies all pure variables, in order of first occurrence.
  Meta to_meta() const {
    std::vector<Meta> hyps;
    for (auto& a : ante) hyps.push_back(mk_ineq(a.lhs, a.rhs));
    Meta body = hyps.empty() ? mk_ineq(concl.lhs, concl.rhs)
                             : mk_mimp(mk_mand(std::move(hyps)), mk_ineq(concl.lhs, concl.rhs));
    std::vector<std::pair<VarSort, std::string>> order;
    std::set<std::string> seen;
    auto scan = [&](const Term& t) {
      for_each_node(t, [&](const Term& n) {
        if (n->kind == TermKind::Nominal && seen.insert("#" + n->name).second)
          order.emplace_back(VarSort::Nominal, n->name);
        if (n->kind == TermKind::Conominal && seen.insert("*" + n->name).second)
          order.emplace_back(VarSort::Conominal, n->name);
      });
    };
    for (auto& a : ante) {
      scan(a.lhs);
      scan(a.rhs);
    }
    scan(concl.lhs);
    scan(concl.rhs);
    for (auto it = order.rbegin(); it != order.rend(); ++it) body = mk_quant(MetaKind::Forall, it->first, it->second, body);
    return body;
  }
};

// ------------------------------------------------------------ fresh names

class FreshNames {
public:
  void reserve(const Term& t) {
    for_each_node(t, [&](const Term& n) {
      if (n->kind == TermKind::PropVar || n->kind == TermKind::Nominal || n->kind == TermKind::Conominal)
        used_.insert(n->name);
    });
  }
  void reserve(const Inequality& iq) {
    reserve(iq.lhs);
    reserve(iq.rhs);
  }

  std::string nominal() { return next("j", jc_); }
  std::string conominal() { return next("n", nc_); }
  std::string prop(const std::string& stem) {
    if (!used_.count(stem)) {
      used_.insert(stem);
      return stem;
    }
    int c = 1;
    return next(stem, c);
  }

private:
  std::string next(const std::string& stem, int& c) {
    for (;;) {
      std::string cand = stem + std::to_string(++c);
      if (!used_.count(cand)) {
        used_.insert(cand);
        return cand;
      }
    }
  }
  std::set<std::string> used_;
  int jc_ = 0, nc_ = 0;
};

// ------------------------------------------------------------ preprocessing

namespace detail {

// Lattice-constant simplification (normality identities).
inline std::optional<Term> simplify_step(const Term& t) {
  auto istop = [](const Term& x) { return x->kind == TermKind::Top; };
  auto isbot = [](const Term& x) { return x->kind == TermKind::Bot; };
  switch (t->kind) {
    case TermKind::Meet:
      if (istop(t->args[0])) return t->args[1];
      if (istop(t->args[1])) return t->args[0];
      if (isbot(t->args[0]) || isbot(t->args[1])) return mk_bot();
      break;
    case TermKind::Join:
      if (isbot(t->args[0])) return t->args[1];
      if (isbot(t->args[1])) return t->args[0];
      if (istop(t->args[0]) || istop(t->args[1])) return mk_top();
      break;
    case TermKind::App: {
      const Connective* c = t->conn;
      for (int i = 0; i < c->arity; ++i) {
        bool pos = c->order_type[i] == Pol::Pos;
        if (c->family == Family::F && ((pos && isbot(t->args[i])) || (!pos && istop(t->args[i])))) return mk_bot();
        if (c->family == Family::G && ((pos && istop(t->args[i])) || (!pos && isbot(t->args[i])))) return mk_top();
      }
      break;
    }
    default:
      break;
  }
  return std::nullopt;
}

// One leftmost-outermost distribution step on a signed term; the lattice
// distributions are sign-directed (meet over join at +, join over meet at -)
// and the connective distributions are algebra identities applied anywhere.
inline std::optional<Term> distribute_step(const Term& t, Pol sign) {
  if (auto s = simplify_step(t)) return s;
  if (t->kind == TermKind::Meet && sign == Pol::Pos) {
    for (int i = 0; i < 2; ++i)
      if (t->args[i]->kind == TermKind::Join) {
        const Term& j = t->args[i];
        const Term& c = t->args[1 - i];
        Term l = i == 0 ? mk_meet(j->args[0], c) : mk_meet(c, j->args[0]);
        Term r = i == 0 ? mk_meet(j->args[1], c) : mk_meet(c, j->args[1]);
        return mk_join(l, r);
      }
  }
  if (t->kind == TermKind::Join && sign == Pol::Neg) {
    for (int i = 0; i < 2; ++i)
      if (t->args[i]->kind == TermKind::Meet) {
        const Term& m = t->args[i];
        const Term& c = t->args[1 - i];
        Term l = i == 0 ? mk_join(m->args[0], c) : mk_join(c, m->args[0]);
        Term r = i == 0 ? mk_join(m->args[1], c) : mk_join(c, m->args[1]);
        return mk_meet(l, r);
      }
  }
  if (t->kind == TermKind::App) {
    const Connective* cn = t->conn;
    for (int i = 0; i < cn->arity; ++i) {
      bool pos = cn->order_type[i] == Pol::Pos;
      const Term& a = t->args[i];
      auto dist = [&](const Term& x, const Term& y, bool to_join) {
        std::vector<Term> l = t->args, r = t->args;
        l[i] = x;
        r[i] = y;
        Term la = mk_app(cn, l), ra = mk_app(cn, r);
        return to_join ? mk_join(la, ra) : mk_meet(la, ra);
      };
      if (cn->family == Family::F) {
        if (pos && a->kind == TermKind::Join) return dist(a->args[0], a->args[1], true);
        if (!pos && a->kind == TermKind::Meet) return dist(a->args[0], a->args[1], true);
      } else {
        if (pos && a->kind == TermKind::Meet) return dist(a->args[0], a->args[1], false);
        if (!pos && a->kind == TermKind::Join) return dist(a->args[0], a->args[1], false);
      }
    }
  }
  // recurse
  auto child_sign = [&](size_t i) {
    return t->kind == TermKind::App ? (t->conn->order_type[i] == Pol::Pos ? sign : flip(sign)) : sign;
  };
  for (size_t i = 0; i < t->args.size(); ++i) {
    if (auto r = distribute_step(t->args[i], child_sign(i))) {
      std::vector<Term> args = t->args;
      args[i] = *r;
      switch (t->kind) {
        case TermKind::Meet: return mk_meet(args[0], args[1]);
        case TermKind::Join: return mk_join(args[0], args[1]);
        case TermKind::Kappa: return mk_kappa(args[0]);
        case TermKind::Lambda: return mk_lambda(args[0]);
        case TermKind::App: return mk_app(t->conn, args);
        default: break;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Exhaustive preprocessing: distribution (1a-1d), splitting, monotone and
// antitone variable elimination, to a fixpoint.
inline std::vector<Inequality> preprocess(const Inequality& input, Trace* trace = nullptr) {
  std::deque<Inequality> work{input};
  std::vector<Inequality> done;
  int fuel = 20000;
  while (!work.empty()) {
    if (--fuel < 0) throw RuleError("PreprocessDiverged", "preprocessing did not reach a fixpoint");
    Inequality iq = work.front();
    work.pop_front();
    if (auto l = detail::distribute_step(iq.lhs, Pol::Pos)) {
      Inequality nw{*l, iq.rhs};
      if (trace) trace->add("distribute", print(iq), print(nw), "preprocessing 1a-1d");
      work.push_front(nw);
      continue;
    }
    if (auto r = detail::distribute_step(iq.rhs, Pol::Neg)) {
      Inequality nw{iq.lhs, *r};
      if (trace) trace->add("distribute", print(iq), print(nw), "preprocessing 1a-1d");
      work.push_front(nw);
      continue;
    }
    if (iq.lhs->kind == TermKind::Join) {
      if (trace)
        trace->add("split", print(iq), print(Inequality{iq.lhs->args[0], iq.rhs}) + " && " +
                                            print(Inequality{iq.lhs->args[1], iq.rhs}),
                   "splitting rule");
      work.push_front({iq.lhs->args[1], iq.rhs});
      work.push_front({iq.lhs->args[0], iq.rhs});
      continue;
    }
    if (iq.rhs->kind == TermKind::Meet) {
      if (trace)
        trace->add("split", print(iq), print(Inequality{iq.lhs, iq.rhs->args[0]}) + " && " +
                                            print(Inequality{iq.lhs, iq.rhs->args[1]}),
                   "splitting rule");
      work.push_front({iq.lhs, iq.rhs->args[1]});
      work.push_front({iq.lhs, iq.rhs->args[0]});
      continue;
    }
    // monotone/antitone variable elimination
    bool eliminated = false;
    for (const std::string& v : variables_in_order(iq)) {
      std::vector<Pol> signs;
      for (auto& o : occurrences(iq))
        if (o.var == v) signs.push_back(o.sign);
      bool all_pos = true, all_neg = true;
      for (Pol s : signs) (s == Pol::Pos ? all_neg : all_pos) = false;
      if (all_pos || all_neg) {
        TermSubst sub{{v, all_pos ? mk_top() : mk_bot()}};
        Inequality nw = substitute(iq, sub);
        if (trace)
          trace->add("uniform-elimination", print(iq), print(nw),
                     std::string("variable ") + v + " uniform, set to " + (all_pos ? "top" : "bot"));
        work.push_front(nw);
        eliminated = true;
        break;
      }
    }
    if (eliminated) continue;
    done.push_back(iq);
  }
  return done;
}

inline Term fill_holes(const Term& t, const std::vector<Term>& by_slot) {
  switch (t->kind) {
    case TermKind::Hole:
      return by_slot[t->hole];
    case TermKind::Meet:
      return mk_meet(fill_holes(t->args[0], by_slot), fill_holes(t->args[1], by_slot));
    case TermKind::Join:
      return mk_join(fill_holes(t->args[0], by_slot), fill_holes(t->args[1], by_slot));
    case TermKind::Kappa:
      return mk_kappa(fill_holes(t->args[0], by_slot));
    case TermKind::Lambda:
      return mk_lambda(fill_holes(t->args[0], by_slot));
    case TermKind::App: {
      std::vector<Term> args;
      for (auto& a : t->args) args.push_back(fill_holes(a, by_slot));
      return mk_app(t->conn, args);
    }
    default:
      return t;
  }
}

// ----------------------------------------------------------- rule stepping

// Residuation along a PIA path. `pia_on_rhs` tracks which side of <= the
// remaining PIA material sits on (true: u <= phi, false: phi <= u).
struct SolveState {
  Inequality iq;
  bool pia_on_rhs;
  const Term& pia() const { return pia_on_rhs ? iq.rhs : iq.lhs; }
};

namespace detail {

// The residuation-relevant shape of a connective: base connectives that were
// identified with a generated residual behave exactly like that residual.
inline const Connective* effective_form(const SigPtr& sig, const Connective* c) {
  const Connective* eff = sig->identified_form(c->name);
  return eff ? eff : c;
}

inline const Connective* need_residual(const SigPtr& sig, const Connective* c, int coord0) {
  int thr = coord0 + 1;
  const Connective* eff = effective_form(sig, c);
  if (eff->origin == Connective::Origin::Residual && thr == eff->coord) {
    const Connective* p = sig->find(eff->parent);
    if (p) return p;
  }
  const Connective* r = sig->resolved_residual(c->name, thr);
  if (!r)
    throw RuleError("RuleNotApplicable",
                    "no residual of '" + c->name + "' in coordinate " + std::to_string(thr) + " is available");
  return r;
}

}  // namespace detail

// One residuation / splitting step toward child `coord` of the PIA side.
// Splitting emits the sibling constraint into `extras`.
inline SolveState residuation_step(const SolveState& st, int coord, const SigPtr& sig,
                                   std::vector<SolveState>* extras, Trace* trace) {
  const Term& phi = st.pia();
  const Term& u = st.pia_on_rhs ? st.iq.lhs : st.iq.rhs;
  auto traced = [&](const SolveState& nw, const char* rule, const char* just) {
    if (trace) trace->add(rule, print(st.iq), print(nw.iq), just);
    return nw;
  };
  if (st.pia_on_rhs) {
    switch (phi->kind) {
      case TermKind::Meet: {  // u <= a /\ b : splitting
        SolveState nw{{u, phi->args[coord]}, true};
        if (extras) extras->push_back({{u, phi->args[1 - coord]}, true});
        return traced(nw, "split", "splitting in the quasi-inequality");
      }
      case TermKind::Join: {  // u <= a \/ b : join residuation
        Term comp = coord == 1 ? mk_app(&sig->get("-<"), {u, phi->args[0]})
                               : mk_app(&sig->get(">-"), {phi->args[1], u});
        return traced({{comp, phi->args[coord]}, true}, "residuation", "left residual of join");
      }
      case TermKind::App: {
        const Connective* g = phi->conn;
        const Connective* eff = detail::effective_form(sig, g);
        if (eff->origin == Connective::Origin::LatticeResidual) {
          // u <= a -> b and friends: residuate back to meet/join or mirror
          if (eff->name == "->") {
            if (coord == 1) return traced({{mk_meet(phi->args[0], u), phi->args[1]}, true}, "residuation", "meet residuation");
            return traced({{phi->args[0], mk_app(&sig->get("->"), {u, phi->args[1]})}, false}, "residuation",
                          "implication exchange");
          }
          if (eff->name == "<-") {
            if (coord == 0) return traced({{mk_meet(u, phi->args[1]), phi->args[0]}, true}, "residuation", "meet residuation");
            return traced({{phi->args[1], mk_app(&sig->get("->"), {u, phi->args[0]})}, false}, "residuation",
                          "implication exchange");
          }
          throw RuleError("RuleNotApplicable", "'" + g->name + "' cannot appear on the greater side of a PIA step");
        }
        if (g->family != Family::G)
          throw RuleError("RuleNotApplicable", "'" + g->name + "' is not residuable on the right of <=");
        const Connective* res = detail::need_residual(sig, g, coord);
        std::vector<Term> args = phi->args;
        args[coord] = u;
        Term comp = mk_app(res, args);
        if (g->order_type[coord] == Pol::Pos)
          return traced({{comp, phi->args[coord]}, true}, "residuation", "g-residuation, coordinate order type 1");
        return traced({{phi->args[coord], comp}, false}, "residuation", "g-residuation, coordinate order type d");
      }
      default:
        throw RuleError("RuleNotApplicable", "not a PIA step at " + print(phi));
    }
  } else {
    switch (phi->kind) {
      case TermKind::Join: {  // a \/ b <= u : splitting
        SolveState nw{{phi->args[coord], u}, false};
        if (extras) extras->push_back({{phi->args[1 - coord], u}, false});
        return traced(nw, "split", "splitting in the quasi-inequality");
      }
      case TermKind::Meet: {  // a /\ b <= u : meet residuation
        Term comp = coord == 1 ? mk_app(&sig->get("->"), {phi->args[0], u})
                               : mk_app(&sig->get("<-"), {u, phi->args[1]});
        return traced({{phi->args[coord], comp}, false}, "residuation", "right residual of meet");
      }
      case TermKind::App: {
        const Connective* f = phi->conn;
        const Connective* eff = detail::effective_form(sig, f);
        if (eff->origin == Connective::Origin::LatticeResidual) {
          if (eff->name == "-<") {
            // a -< b <= u : a <= b \/ u (coord 0) or a -< u <= b (coord 1)
            if (coord == 0) return traced({{phi->args[0], mk_join(phi->args[1], u)}, true}, "residuation", "join residuation");
            return traced({{mk_app(&sig->get("-<"), {phi->args[0], u}), phi->args[1]}, true}, "residuation",
                          "subtraction exchange");
          }
          if (eff->name == ">-") {
            // a >- b <= u : b <= u \/ a (coord 1) or u >- b <= a (coord 0)
            if (coord == 1) return traced({{phi->args[1], mk_join(u, phi->args[0])}, true}, "residuation", "join residuation");
            return traced({{mk_app(&sig->get(">-"), {u, phi->args[1]}), phi->args[0]}, true}, "residuation",
                          "subtraction exchange");
          }
          throw RuleError("RuleNotApplicable", "'" + f->name + "' cannot appear on the smaller side of a PIA step");
        }
        if (f->family != Family::F)
          throw RuleError("RuleNotApplicable", "'" + f->name + "' is not residuable on the left of <=");
        const Connective* res = detail::need_residual(sig, f, coord);
        std::vector<Term> args = phi->args;
        args[coord] = u;
        Term comp = mk_app(res, args);
        if (f->order_type[coord] == Pol::Pos)
          return traced({{phi->args[coord], comp}, false}, "residuation", "f-residuation, coordinate order type 1");
        return traced({{comp, phi->args[coord]}, true}, "residuation", "f-residuation, coordinate order type d");
      }
      default:
        throw RuleError("RuleNotApplicable", "not a PIA step at " + print(phi));
    }
  }
}

// Single-step residuation on a displayed inequality (coordinate 1-based);
// the public spec operation.
inline Inequality apply_residuation(const Inequality& iq, const SigPtr& sig, int coord = 1) {
  bool g_side = iq.rhs->kind == TermKind::App || iq.rhs->kind == TermKind::Meet || iq.rhs->kind == TermKind::Join;
  // prefer the side whose top connective admits the rule
  auto applicable = [&](const Term& t, bool on_rhs) {
    if (t->kind == TermKind::Meet) return !on_rhs || true;
    if (t->kind == TermKind::Join) return on_rhs || true;
    if (t->kind != TermKind::App) return false;
    return true;
  };
  SolveState st{iq, true};
  if (iq.rhs->kind == TermKind::App && iq.rhs->conn->family == Family::G) st = {iq, true};
  else if (iq.lhs->kind == TermKind::App && iq.lhs->conn->family == Family::F) st = {iq, false};
  else if (iq.rhs->kind == TermKind::Join || iq.rhs->kind == TermKind::App) st = {iq, true};
  else if (iq.lhs->kind == TermKind::Meet || iq.lhs->kind == TermKind::App) st = {iq, false};
  else if (iq.rhs->kind == TermKind::Meet || iq.lhs->kind == TermKind::Join)
    throw RuleError("RuleNotApplicable", "splitting, not residuation, applies to " + print(iq));
  else
    throw RuleError("RuleNotApplicable", "no residuation redex in " + print(iq));
  (void)applicable;
  (void)g_side;
  return residuation_step(st, coord - 1, sig, nullptr, nullptr).iq;
}

// Approximation rules: i <= f(...) or g(...) <= m against a displayed pure
// atom; introduces a fresh variable for coordinate `coord` and returns
// (residue, new constraint).
inline std::pair<Inequality, Inequality> apply_approximation(const Inequality& iq, const SigPtr& sig,
                                                             FreshNames& fresh, int coord = 1) {
  int c0 = coord - 1;
  if (is_pure_atom(iq.lhs) && iq.rhs->kind == TermKind::App && iq.rhs->conn->family == Family::F) {
    const Connective* f = iq.rhs->conn;
    std::vector<Term> args = iq.rhs->args;
    if (f->order_type[c0] == Pol::Pos) {
      Term j = mk_nom(fresh.nominal());
      Term sub = args[c0];
      args[c0] = j;
      return {{iq.lhs, mk_app(f, args)}, {j, sub}};
    }
    Term n = mk_conom(fresh.conominal());
    Term sub = args[c0];
    args[c0] = n;
    return {{iq.lhs, mk_app(f, args)}, {sub, n}};
  }
  if (is_pure_atom(iq.rhs) && iq.lhs->kind == TermKind::App && iq.lhs->conn->family == Family::G) {
    const Connective* g = iq.lhs->conn;
    std::vector<Term> args = iq.lhs->args;
    if (g->order_type[c0] == Pol::Pos) {
      Term n = mk_conom(fresh.conominal());
      Term sub = args[c0];
      args[c0] = n;
      return {{mk_app(g, args), iq.rhs}, {sub, n}};
    }
    Term j = mk_nom(fresh.nominal());
    Term sub = args[c0];
    args[c0] = j;
    return {{mk_app(g, args), iq.rhs}, {j, sub}};
  }
  throw RuleError("RuleNotApplicable", "not an approximation redex: " + print(iq));
}

// --------------------------------------------------------------- PIA solve

// Solves a PIA constraint for occurrences of `target`, returning the solved
// inequalities (target displayed) plus parametric leftovers from splits.
struct PiaSolution {
  std::vector<Inequality> solved;      // target on display
  std::vector<Inequality> parametric;  // split residues without the target
};

inline PiaSolution solve_pia(const Inequality& start, bool pia_on_rhs, const std::string& target, const SigPtr& sig,
                             Trace* trace = nullptr) {
  PiaSolution out;
  std::deque<SolveState> work{{start, pia_on_rhs}};
  int fuel = 5000;
  while (!work.empty()) {
    if (--fuel < 0) throw RuleError("SolveDiverged", "PIA solving did not terminate");
    SolveState st = work.front();
    work.pop_front();
    const Term& phi = st.pia();
    if (phi->kind == TermKind::PropVar && phi->name == target) {
      out.solved.push_back(st.iq);
      continue;
    }
    if (!occurs(phi, TermKind::PropVar, target)) {
      out.parametric.push_back(st.iq);
      continue;
    }
    // step toward the first child containing the target
    int coord = -1;
    for (size_t i = 0; i < phi->args.size(); ++i)
      if (occurs(phi->args[i], TermKind::PropVar, target)) {
        coord = (int)i;
        break;
      }
    if (coord < 0) throw RuleError("NotPIA", "cannot reach '" + target + "' in " + print(phi));
    std::vector<SolveState> extras;
    SolveState nw = residuation_step(st, coord, sig, &extras, trace);
    for (auto& e : extras) work.push_back(e);
    work.push_front(nw);
  }
  return out;
}

// LA / RA of a definite PIA with distinguished leaf `x`: the adjoint
// composition as a term over the placeholder variable u.
enum class LaRaSide { LA, RA };

inline Term la_ra(const Term& phi, LaRaSide side, const SigPtr& sig, const std::string& x = "x",
                  const std::string& u = "u") {
  Inequality start = side == LaRaSide::LA ? Inequality{mk_prop(u), phi} : Inequality{phi, mk_prop(u)};
  PiaSolution sol;
  try {
    sol = solve_pia(start, side == LaRaSide::LA, x, sig);
  } catch (const RuleError&) {
    throw RuleError("NotPIA", print(phi) + " is not a definite PIA for leaf " + x);
  }
  if (sol.solved.size() != 1 || !sol.parametric.empty())
    throw RuleError("NotPIA", print(phi) + " is not a definite PIA for leaf " + x);
  const Inequality& s = sol.solved[0];
  return s.lhs->kind == TermKind::PropVar && s.lhs->name == x ? s.rhs : s.lhs;
}

// ----------------------------------------------------------- Ackermann rule

// Eliminates `var` from the system by the right- or left-handed Ackermann
// rule, per the polarity of the eliminated variable (eps(var)=1: RAR with
// the join of lower bounds; eps(var)=d: LAR with the meet of upper bounds).
inline QuasiSystem ackermann_eliminate(const QuasiSystem& sys, const std::string& var, Pol eps_var, const SigPtr& sig,
                                       Trace* trace = nullptr) {
  (void)sig;
  std::vector<Term> bounds;
  std::vector<Inequality> rest;
  for (const Inequality& a : sys.ante) {
    if (eps_var == Pol::Pos && a.rhs->kind == TermKind::PropVar && a.rhs->name == var) {
      if (occurs(a.lhs, TermKind::PropVar, var))
        throw RuleError("NotInAckermannShape", var + " occurs in its own bound " + print(a));
      bounds.push_back(a.lhs);
      continue;
    }
    if (eps_var == Pol::Neg && a.lhs->kind == TermKind::PropVar && a.lhs->name == var) {
      if (occurs(a.rhs, TermKind::PropVar, var))
        throw RuleError("NotInAckermannShape", var + " occurs in its own bound " + print(a));
      bounds.push_back(a.rhs);
      continue;
    }
    rest.push_back(a);
  }
  // polarity side conditions on the remaining occurrences
  for (const Inequality& a : rest) {
    for (Pol s : pure_polarities_in_ineq(a, TermKind::PropVar, var)) {
      // hypotheses must be harder for the substituted extremal value:
      // RAR wants lhs-positive / rhs-negative, i.e. pair-sign Pos throughout;
      // LAR the opposite.
      if (eps_var == Pol::Pos && s != Pol::Pos)
        throw RuleError("NotInAckermannShape", "occurrence of " + var + " in " + print(a) + " has the wrong polarity");
      if (eps_var == Pol::Neg && s != Pol::Neg)
        throw RuleError("NotInAckermannShape", "occurrence of " + var + " in " + print(a) + " has the wrong polarity");
    }
  }
  for (Pol s : pure_polarities_in_ineq(sys.concl, TermKind::PropVar, var)) {
    if (eps_var == Pol::Pos && s != Pol::Neg)
      throw RuleError("NotInAckermannShape", "occurrence of " + var + " in the conclusion has the wrong polarity");
    if (eps_var == Pol::Neg && s != Pol::Pos)
      throw RuleError("NotInAckermannShape", "occurrence of " + var + " in the conclusion has the wrong polarity");
  }
  Term agg;
  if (bounds.empty()) {
    agg = eps_var == Pol::Pos ? mk_bot() : mk_top();
  } else {
    agg = bounds[0];
    for (size_t i = 1; i < bounds.size(); ++i) agg = eps_var == Pol::Pos ? mk_join(agg, bounds[i]) : mk_meet(agg, bounds[i]);
  }
  TermSubst sub{{var, agg}};
  QuasiSystem out;
  for (const Inequality& a : rest) out.ante.push_back(substitute(a, sub));
  out.concl = substitute(sys.concl, sub);
  if (trace)
    trace->add(eps_var == Pol::Pos ? "ackermann-RAR" : "ackermann-LAR", sys.show(), out.show(),
               "eliminate " + var + " with " + print(agg));
  return out;
}

// ---------------------------------------------------- first approximation

inline QuasiSystem first_approximation(const Inequality& iq, FreshNames& fresh, Trace* trace = nullptr) {
  Term i0 = mk_nom(fresh.nominal());
  Term m0 = mk_conom(fresh.conominal());
  QuasiSystem sys;
  sys.ante.push_back({i0, iq.lhs});
  sys.ante.push_back({iq.rhs, m0});
  sys.concl = {i0, m0};
  if (trace) trace->add("first-approximation", print(iq), sys.show(), "fresh nominal and conominal");
  return sys;
}

// ------------------------------------------------------- minimal valuations

struct MinimalValuation {
  std::string var;
  std::vector<Term> candidates;  // pure solved forms, one per PIA occurrence
  Term aggregate;                // join for eps=1 variables, meet for eps=d
};

namespace detail {

// Topological order of variables by omega (smaller first), ties by first
// occurrence.
inline std::vector<std::string> topo_vars(const Inequality& iq, const Witness& w) {
  std::vector<std::string> vars = variables_in_order(iq);
  std::vector<std::string> out;
  std::set<std::string> placed;
  while (out.size() < vars.size()) {
    bool progress = false;
    for (auto& v : vars) {
      if (placed.count(v)) continue;
      bool ready = true;
      for (auto& u : vars)
        if (!placed.count(u) && u != v && w.omega_lt(u, v)) ready = false;
      if (ready) {
        out.push_back(v);
        placed.insert(v);
        progress = true;
      }
    }
    if (!progress) throw ClassifyError("OmegaCycle", "dependency order is cyclic");
  }
  return out;
}

}  // namespace detail

// Builds the minimal valuations for a definite inductive inequality without
// uniform variables: per-slot adjoint solutions, aggregated by recursion on
// the dependency order. `slot_vars` optionally names the fresh variable used
// as u for each PIA slot (defaults j per positive slot, m per negative).
inline std::map<std::string, MinimalValuation> minimal_valuations(const Inequality& iq, const Witness& w,
                                                                  const SigPtr& sig,
                                                                  std::vector<std::string>* slot_var_names = nullptr,
                                                                  FreshNames* fresh_in = nullptr) {
  if (!w.definite) throw ClassifyError("NotDefiniteInductive", "witness is not definite");
  if (w.has_uniform) throw ClassifyError("NotDefiniteInductive", "inequality has uniform variables");
  FreshNames local;
  FreshNames& fresh = fresh_in ? *fresh_in : local;
  if (!fresh_in) fresh.reserve(iq);
  // assign slot variables
  std::vector<std::string> svars(w.slots.size());
  for (size_t i = 0; i < w.slots.size(); ++i) {
    const Slot& s = w.slots[i];
    bool nominal = s.kind == Slot::Kind::PiaPos || s.kind == Slot::Kind::UniformPos;
    svars[i] = nominal ? fresh.nominal() : fresh.conominal();
  }
  if (slot_var_names) *slot_var_names = svars;
  // solve each PIA slot symbolically toward its critical variable
  struct Solved {
    std::string var;
    Term composite;  // contains the slot pure variable and parameters
  };
  std::map<std::string, std::vector<Solved>> by_var;
  for (size_t i = 0; i < w.slots.size(); ++i) {
    const Slot& s = w.slots[i];
    if (s.kind != Slot::Kind::PiaPos && s.kind != Slot::Kind::PiaNeg) continue;
    if (s.critical_vars.size() != 1) throw ClassifyError("NotDefiniteInductive", "PIA slot with several critical variables");
    std::string cv = *s.critical_vars.begin();
    Term u = s.kind == Slot::Kind::PiaPos ? mk_nom(svars[i]) : mk_conom(svars[i]);
    Inequality start = s.kind == Slot::Kind::PiaPos ? Inequality{u, s.subtree} : Inequality{s.subtree, u};
    PiaSolution sol = solve_pia(start, s.kind == Slot::Kind::PiaPos, cv, sig);
    if (sol.solved.size() != 1 || !sol.parametric.empty())
      throw ClassifyError("NotDefiniteInductive", "PIA slot does not solve uniquely");
    const Inequality& solved = sol.solved[0];
    Term comp = solved.lhs->kind == TermKind::PropVar ? solved.rhs : solved.lhs;
    by_var[cv].push_back({cv, comp});
  }
  // aggregate by recursion on omega
  std::map<std::string, MinimalValuation> out;
  TermSubst aggregates;
  for (const std::string& v : detail::topo_vars(iq, w)) {
    auto it = by_var.find(v);
    if (it == by_var.end()) throw ClassifyError("NotDefiniteInductive", "variable " + v + " has no critical slot");
    MinimalValuation mv;
    mv.var = v;
    for (auto& s : it->second) mv.candidates.push_back(substitute(s.composite, aggregates));
    mv.aggregate = mv.candidates[0];
    for (size_t i = 1; i < mv.candidates.size(); ++i)
      mv.aggregate = w.eps.at(v) == Pol::Pos ? mk_join(mv.aggregate, mv.candidates[i]) : mk_meet(mv.aggregate, mv.candidates[i]);
    aggregates[v] = mv.aggregate;
    out[v] = mv;
  }
  return out;
}

// --------------------------------------------------------------- run_alba

struct AlbaRun {
  Inequality input;
  std::vector<Inequality> preprocessed;
  std::vector<QuasiSystem> systems;  // final purified systems, one per piece
  Trace trace;
  Meta output;
};

namespace detail {

inline bool subtree_contains_hole(const Term& t) {
  if (t->kind == TermKind::Hole) return true;
  for (auto& a : t->args)
    if (subtree_contains_hole(a)) return true;
  return false;
}

// Skeleton walk for the condensed single-pivot run: splits reuse the
// displayed variable, approximations introduce fresh ones; PIA and uniform
// subtrees become constraints.
struct WalkResult {
  std::vector<std::pair<Inequality, int>> pia;  // constraint + slot index
  std::vector<Inequality> uniform;
  std::vector<Inequality> residues;
};

inline void walk_skeleton(const Term& skel, const Witness& w, Term displayed, bool var_on_left, const SigPtr& sig,
                          FreshNames& fresh, WalkResult& out, Trace* trace, const QuasiSystem* whole) {
  (void)whole;
  // display skeleton terms with the slot subtrees restored in traces
  std::vector<Term> subs;
  for (auto& sl : w.slots) subs.push_back(sl.subtree);
  auto shown = [&](const Term& t) { return fill_holes(t, subs); };
  if (skel->kind == TermKind::Hole) {
    const Slot& s = w.slots[skel->hole];
    Inequality c = var_on_left ? Inequality{displayed, s.subtree} : Inequality{s.subtree, displayed};
    if (s.kind == Slot::Kind::PiaPos || s.kind == Slot::Kind::PiaNeg)
      out.pia.emplace_back(c, skel->hole);
    else
      out.uniform.push_back(c);
    return;
  }
  if (!subtree_contains_hole(skel)) {
    // inline constant skeleton material: keep as a residue constraint
    out.residues.push_back(var_on_left ? Inequality{displayed, skel} : Inequality{skel, displayed});
    return;
  }
  if (var_on_left) {
    switch (skel->kind) {
      case TermKind::Meet: {  // split, reusing the displayed variable
        if (trace)
          trace->add("split", print(Inequality{displayed, shown(skel)}),
                     print(Inequality{displayed, shown(skel->args[0])}) + " && " +
                         print(Inequality{displayed, shown(skel->args[1])}),
                     "splitting in the quasi-inequality");
        walk_skeleton(skel->args[0], w, displayed, true, sig, fresh, out, trace, whole);
        walk_skeleton(skel->args[1], w, displayed, true, sig, fresh, out, trace, whole);
        return;
      }
      case TermKind::App: {
        const Connective* f = skel->conn;
        if (f->family != Family::F)
          throw RuleError("InternalShapeError", "unexpected skeleton node " + print(skel) + " on the nominal side");
        std::vector<Term> residue_args = skel->args;
        std::vector<std::pair<int, Term>> todo;  // coordinate, fresh var
        for (int i = 0; i < f->arity; ++i) {
          if (!subtree_contains_hole(skel->args[i])) continue;
          bool pos = f->order_type[i] == Pol::Pos;
          Term v = pos ? Term(mk_nom(fresh.nominal())) : Term(mk_conom(fresh.conominal()));
          residue_args[i] = v;
          todo.emplace_back(i, v);
        }
        Inequality residue{displayed, mk_app(f, residue_args)};
        if (trace)
          trace->add("approximation", print(Inequality{displayed, shown(skel)}), print(residue),
                     "fresh variables for the inner coordinates");
        out.residues.push_back(residue);
        for (auto& [i, v] : todo)
          walk_skeleton(skel->args[i], w, v, f->order_type[i] == Pol::Pos, sig, fresh, out, trace, whole);
        return;
      }
      default:
        throw RuleError("InternalShapeError", "unexpected skeleton node " + print(skel) + " on the nominal side");
    }
  } else {
    switch (skel->kind) {
      case TermKind::Join: {
        if (trace)
          trace->add("split", print(Inequality{shown(skel), displayed}),
                     print(Inequality{shown(skel->args[0]), displayed}) + " && " +
                         print(Inequality{shown(skel->args[1]), displayed}),
                     "splitting in the quasi-inequality");
        walk_skeleton(skel->args[0], w, displayed, false, sig, fresh, out, trace, whole);
        walk_skeleton(skel->args[1], w, displayed, false, sig, fresh, out, trace, whole);
        return;
      }
      case TermKind::App: {
        const Connective* g = skel->conn;
        if (g->family != Family::G)
          throw RuleError("InternalShapeError", "unexpected skeleton node " + print(skel) + " on the conominal side");
        std::vector<Term> residue_args = skel->args;
        std::vector<std::pair<int, Term>> todo;
        for (int i = 0; i < g->arity; ++i) {
          if (!subtree_contains_hole(skel->args[i])) continue;
          bool pos = g->order_type[i] == Pol::Pos;
          Term v = pos ? Term(mk_conom(fresh.conominal())) : Term(mk_nom(fresh.nominal()));
          residue_args[i] = v;
          todo.emplace_back(i, v);
        }
        Inequality residue{mk_app(g, residue_args), displayed};
        if (trace)
          trace->add("approximation", print(Inequality{shown(skel), displayed}), print(residue),
                     "fresh variables for the inner coordinates");
        out.residues.push_back(residue);
        for (auto& [i, v] : todo)
          walk_skeleton(skel->args[i], w, v, g->order_type[i] != Pol::Pos, sig, fresh, out, trace, whole);
        return;
      }
      default:
        throw RuleError("InternalShapeError", "unexpected skeleton node " + print(skel) + " on the conominal side");
    }
  }
}

// ------------------------------------------------------------ contraction

// Reverse approximation / reverse first approximation on a purified system.
// Applied to a fixpoint in a deterministic order; every step corresponds to
// an inverse instance of the approximation rules or of the approximating
// corollaries and is oracle-checked in the tests.
inline bool contract_once(QuasiSystem& sys, Trace* trace) {
  auto count_in_term = [](const Term& t, TermKind k, const std::string& v) {
    int n = 0;
    for_each_node(t, [&](const Term& x) {
      if (x->kind == k && x->name == v) ++n;
    });
    return n;
  };
  auto occ_count = [&](TermKind k, const std::string& v) {
    int n = 0;
    for (auto& a : sys.ante) n += count_in_term(a.lhs, k, v) + count_in_term(a.rhs, k, v);
    n += count_in_term(sys.concl.lhs, k, v) + count_in_term(sys.concl.rhs, k, v);
    return n;
  };
  // P1: reverse first approximation on the conclusion's conominal:
  // [X <= m & ...] => i <= m  ~~>  [...] => i <= X   (m nowhere else)
  if (sys.concl.rhs->kind == TermKind::Conominal) {
    std::string m = sys.concl.rhs->name;
    if (occ_count(TermKind::Conominal, m) == 2) {
      for (size_t i = 0; i < sys.ante.size(); ++i) {
        const Inequality& a = sys.ante[i];
        if (a.rhs->kind == TermKind::Conominal && a.rhs->name == m) {
          QuasiSystem before = sys;
          Inequality nw{sys.concl.lhs, a.lhs};
          sys.ante.erase(sys.ante.begin() + i);
          sys.concl = nw;
          if (trace)
            trace->add("reverse-first-approximation", before.show(), sys.show(), "eliminate conominal " + m);
          return true;
        }
      }
    }
  }
  // P0: drop vacuous bound constraints (the variable occurs nowhere else)
  for (size_t i = 0; i < sys.ante.size(); ++i) {
    const Inequality& a = sys.ante[i];
    auto vac = [&](const Term& side, TermKind k) {
      return side->kind == k && occ_count(k, side->name) == 1;
    };
    if (vac(a.rhs, TermKind::Conominal) || vac(a.lhs, TermKind::Nominal)) {
      QuasiSystem before = sys;
      sys.ante.erase(sys.ante.begin() + i);
      if (trace) trace->add("drop-vacuous", before.show(), sys.show(), "bound variable occurs nowhere else");
      return true;
    }
  }
  // P2: reverse approximation. A conominal n with a defining lower bound
  // X <= n and exactly one other occurrence, positively in an antecedent or
  // negatively in the conclusion, contracts by substituting X. Dually for a
  // nominal j with defining j <= X.
  for (size_t i = 0; i < sys.ante.size(); ++i) {
    const Inequality& def = sys.ante[i];
    for (int nom = 0; nom < 2; ++nom) {
      TermKind k = nom ? TermKind::Nominal : TermKind::Conominal;
      const Term& side = nom ? def.lhs : def.rhs;
      const Term& bound = nom ? def.rhs : def.lhs;
      if (side->kind != k) continue;
      std::string v = side->name;
      if (count_in_term(bound, k, v) > 0) continue;
      if (occ_count(k, v) != 2) continue;
      // locate the other occurrence and check its polarity
      Pol want_ante = nom ? Pol::Neg : Pol::Pos;  // sign in an antecedent inequality
      bool applied = false;
      QuasiSystem before = sys;
      PureSubst ps;
      (nom ? ps.nominal : ps.conominal)[v] = bound;
      for (size_t a2 = 0; a2 < sys.ante.size() && !applied; ++a2) {
        if (a2 == i) continue;
        auto pols = pure_polarities_in_ineq(sys.ante[a2], k, v);
        if (pols.size() == 1 && pols[0] == want_ante) {
          sys.ante[a2] = substitute(sys.ante[a2], {}, &ps);
          applied = true;
        }
      }
      if (!applied) {
        // a proper occurrence inside the conclusion contracts too; the bare
        // pivotal sides are left to the reverse first approximation only
        bool bare_pivot = (sys.concl.lhs->kind == k && sys.concl.lhs->name == v) ||
                          (sys.concl.rhs->kind == k && sys.concl.rhs->name == v);
        auto pols = pure_polarities_in_ineq(sys.concl, k, v);
        if (!bare_pivot && pols.size() == 1 && pols[0] == flip(want_ante)) {
          sys.concl = substitute(sys.concl, {}, &ps);
          applied = true;
        }
      }
      if (applied) {
        sys.ante.erase(sys.ante.begin() + i);
        if (trace)
          trace->add("reverse-approximation", before.show(), sys.show(),
                     std::string("contract ") + (nom ? "nominal " : "conominal ") + v);
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

// Full forward run: preprocessing, first approximation with a single
// nominal/conominal pair, skeleton decomposition, adjunction/residuation on
// the PIA parts, Ackermann elimination in dependency order, and reverse
// approximation contraction of the internal variables.
inline AlbaRun run_alba(const Inequality& input, const SigPtr& sig) {
  AlbaRun run;
  run.input = input;
  run.preprocessed = preprocess(input, &run.trace);
  std::vector<Meta> pieces_meta;
  FreshNames fresh;
  fresh.reserve(input);
  for (const Inequality& piece : run.preprocessed) fresh.reserve(piece);
  for (const Inequality& piece : run.preprocessed) {
    auto ws = find_inductive(piece);
    if (ws.empty())
      throw ClassifyError("NotInductive", "ALBA reports failure on " + print(piece));
    const Witness& w = ws.front();
    QuasiSystem sys = first_approximation(piece, fresh, &run.trace);
    Term i0 = sys.concl.lhs, m0 = sys.concl.rhs;
    // skeleton decomposition of both initial inequalities
    detail::WalkResult wr;
    detail::walk_skeleton(w.skel_lhs, w, i0, true, sig, fresh, wr, &run.trace, &sys);
    detail::walk_skeleton(w.skel_rhs, w, m0, false, sig, fresh, wr, &run.trace, &sys);
    // adjunction/residuation on the PIA constraints
    std::vector<Inequality> system_ineqs = wr.residues;
    for (auto& u : wr.uniform) system_ineqs.push_back(u);
    for (auto& [c, slot] : wr.pia) {
      const Slot& s = w.slots[slot];
      if (s.critical_vars.empty()) {
        system_ineqs.push_back(c);
        continue;
      }
      // solve toward each critical variable in turn (definite slots have one)
      std::deque<Inequality> queue{c};
      for (const std::string& cv : s.critical_vars) {
        std::deque<Inequality> next;
        while (!queue.empty()) {
          Inequality cur = queue.front();
          queue.pop_front();
          bool on_rhs = occurs(cur.rhs, TermKind::PropVar, cv);
          if (!on_rhs && !occurs(cur.lhs, TermKind::PropVar, cv)) {
            next.push_back(cur);
            continue;
          }
          PiaSolution sol = solve_pia(cur, on_rhs, cv, sig, &run.trace);
          for (auto& siq : sol.solved) next.push_back(siq);
          for (auto& piq : sol.parametric) next.push_back(piq);
        }
        queue = std::move(next);
      }
      for (auto& siq : queue) system_ineqs.push_back(siq);
    }
    sys.ante = system_ineqs;
    sys.concl = {i0, m0};
    // Ackermann elimination in dependency order
    for (const std::string& v : detail::topo_vars(piece, w)) sys = ackermann_eliminate(sys, v, w.eps.at(v), sig, &run.trace);
    // purity
    for (auto& a : sys.ante)
      if (!is_pure(a.lhs) || !is_pure(a.rhs))
        throw RuleError("NotPure", "system not purified: " + sys.show());
    // contraction to the condensed output
    while (detail::contract_once(sys, &run.trace)) {
    }
    run.systems.push_back(sys);
    pieces_meta.push_back(sys.to_meta());
  }
  run.output = mk_mand(std::move(pieces_meta));
  return run;
}

// ------------------------------------------------- slot-variable form (Eq 10)

// The per-slot quasi-inequality: fresh variables for every slot, minimal
// valuations substituted into the uniform subtrees, skeleton instance as the
// conclusion. This is the shape the Kracht pipeline starts from.
struct SlotSystem {
  Witness witness;
  std::vector<std::string> slot_vars;        // per slot index
  std::vector<Inequality> constraints;       // i <= gamma_mv / delta_mv <= n
  Inequality skeleton_instance;              // (phi <= psi)[slot vars]
  Inequality piece;                          // the preprocessed inequality
};

inline SlotSystem build_slot_system(const Inequality& input, const SigPtr& sig, Trace* trace = nullptr) {
  auto pieces = preprocess(input, trace);
  if (pieces.size() != 1)
    throw ClassifyError("NotDefiniteInductive", "preprocessing splits the input into " +
                                                    std::to_string(pieces.size()) + " inequalities");
  const Inequality piece = pieces[0];
  auto ws = find_inductive(piece);
  if (ws.empty()) throw ClassifyError("NotInductive", "not an inductive inequality: " + print(piece));
  const Witness& w = ws.front();
  if (!w.definite) throw ClassifyError("NotDefiniteInductive", "not definite after preprocessing");
  if (w.has_uniform) throw ClassifyError("NotDefiniteInductive", "uniform variables remain");
  SlotSystem out;
  out.witness = w;
  out.piece = piece;
  FreshNames fresh;
  fresh.reserve(piece);
  auto mvs = minimal_valuations(piece, w, sig, &out.slot_vars, &fresh);
  TermSubst aggregates;
  for (auto& [v, mv] : mvs) aggregates[v] = mv.aggregate;
  std::vector<Term> atoms(w.slots.size());
  for (size_t i = 0; i < w.slots.size(); ++i) {
    const Slot& s = w.slots[i];
    bool nominal = s.kind == Slot::Kind::PiaPos || s.kind == Slot::Kind::UniformPos;
    atoms[i] = nominal ? mk_nom(out.slot_vars[i]) : mk_conom(out.slot_vars[i]);
    if (s.kind == Slot::Kind::UniformPos)
      out.constraints.push_back({atoms[i], substitute(s.subtree, aggregates)});
    if (s.kind == Slot::Kind::UniformNeg)
      out.constraints.push_back({substitute(s.subtree, aggregates), atoms[i]});
  }
  out.skeleton_instance = {fill_holes(w.skel_lhs, atoms), fill_holes(w.skel_rhs, atoms)};
  if (trace) {
    QuasiSystem q{out.constraints, out.skeleton_instance};
    trace->add("slot-system", print(piece), q.show(), "minimal valuations substituted");
  }
  return out;
}

}  // namespace dlecorr
