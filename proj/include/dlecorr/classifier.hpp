#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlecorr/syntax.hpp"

namespace dlecorr {

// Node classes of signed generation trees. In the distributive setting the
// lattice connectives carry several roles at once (+/\ is a Delta-adjoint,
// SLR and SRA; +\/ a Delta-adjoint and SRR); branch checking picks the role
// consistent with the segment.
enum NodeRole : uint8_t {
  kDelta = 1,
  kSLR = 2,
  kSRA = 4,
  kSRR = 8,
};

inline uint8_t roles_of(const Term& t, Pol sign) {
  switch (t->kind) {
    case TermKind::Meet:
      return sign == Pol::Pos ? (kDelta | kSLR | kSRA) : (kDelta | kSRR);
    case TermKind::Join:
      return sign == Pol::Pos ? (kDelta | kSRR) : (kDelta | kSLR | kSRA);
    case TermKind::App: {
      const Connective* c = t->conn;
      if (c->arity == 0) return kSLR | kSRA;  // constants: Skeleton and PIA leaves
      if (c->family == Family::F) return sign == Pol::Pos ? kSLR : (c->arity == 1 ? kSRA : kSRR);
      return sign == Pol::Pos ? (c->arity == 1 ? kSRA : kSRR) : kSLR;
    }
    default:
      return 0;  // leaves
  }
}

inline bool skeleton_capable(uint8_t r) { return r & (kDelta | kSLR); }
inline bool pia_capable(uint8_t r) { return r & (kSRA | kSRR); }

// --------------------------------------------------------- signed trees

struct SignedTree {
  Term term;
  Pol sign;
  uint8_t roles;
  std::vector<SignedTree> kids;
};

inline SignedTree classify_tree(const Term& t, Pol sign) {
  SignedTree st{t, sign, roles_of(t, sign), {}};
  switch (t->kind) {
    case TermKind::Meet:
    case TermKind::Join:
      st.kids.push_back(classify_tree(t->args[0], sign));
      st.kids.push_back(classify_tree(t->args[1], sign));
      break;
    case TermKind::App:
      for (size_t i = 0; i < t->args.size(); ++i)
        st.kids.push_back(classify_tree(t->args[i], t->conn->order_type[i] == Pol::Pos ? sign : flip(sign)));
      break;
    default:
      break;
  }
  return st;
}

inline const SignedTree& subtree_at(const SignedTree& st, const std::vector<int>& path) {
  const SignedTree* cur = &st;
  for (int i : path) cur = &cur->kids[i];
  return *cur;
}

// Nodes along the path strictly above the leaf, listed leaf to root.
inline std::vector<const SignedTree*> nodes_above(const SignedTree& st, const std::vector<int>& leaf_path) {
  std::vector<const SignedTree*> v;
  const SignedTree* cur = &st;
  std::vector<const SignedTree*> down{cur};
  for (int i : leaf_path) {
    cur = &cur->kids[i];
    down.push_back(cur);
  }
  for (size_t i = down.size() - 1; i-- > 0;) v.push_back(down[i]);
  return v;
}

// A branch is good iff it splits into a PIA segment from the leaf followed by
// a Skeleton segment: equivalently, every node at or below the highest
// PIA-only node must be PIA-capable.
inline bool is_good_branch(const SignedTree& st, const std::vector<int>& leaf_path) {
  auto ups = nodes_above(st, leaf_path);
  int h = -1;
  for (int i = (int)ups.size() - 1; i >= 0; --i)
    if (!skeleton_capable(ups[i]->roles)) {
      h = i;
      break;
    }
  for (int i = 0; i <= h; ++i)
    if (!pia_capable(ups[i]->roles)) return false;
  return true;
}

// ----------------------------------------------------------- occurrences

struct Occurrence {
  bool on_lhs;
  std::vector<int> path;
  std::string var;
  Pol sign;
};

inline void collect_occurrences(const Term& t, Pol sign, bool on_lhs, std::vector<int>& path,
                                std::vector<Occurrence>& out) {
  if (t->kind == TermKind::PropVar) {
    out.push_back({on_lhs, path, t->name, sign});
    return;
  }
  auto child_sign = [&](size_t i) {
    if (t->kind == TermKind::App) return t->conn->order_type[i] == Pol::Pos ? sign : flip(sign);
    return sign;
  };
  for (size_t i = 0; i < t->args.size(); ++i) {
    path.push_back((int)i);
    collect_occurrences(t->args[i], child_sign(i), on_lhs, path, out);
    path.pop_back();
  }
}

inline std::vector<Occurrence> occurrences(const Inequality& iq) {
  std::vector<Occurrence> out;
  std::vector<int> path;
  collect_occurrences(iq.lhs, Pol::Pos, true, path, out);
  collect_occurrences(iq.rhs, Pol::Neg, false, path, out);
  return out;
}

inline std::vector<std::string> variables_in_order(const Inequality& iq) {
  std::vector<std::string> vars;
  std::set<std::string> seen;
  for (auto& o : occurrences(iq))
    if (seen.insert(o.var).second) vars.push_back(o.var);
  return vars;
}

using Eps = std::map<std::string, Pol>;  // 1 = Pos, d = Neg

inline bool is_critical(const Occurrence& o, const Eps& eps) { return eps.at(o.var) == o.sign; }

// ---------------------------------------------------------- decomposition

// Slots of the skeleton/PIA decomposition: maximal PIA subtrees containing
// criticals (alpha/beta by sign) and maximal critical-free subtrees
// (gamma/delta by sign).
struct Slot {
  enum class Kind { PiaPos, PiaNeg, UniformPos, UniformNeg } kind;
  bool on_lhs;
  std::vector<int> path;
  Term subtree;
  std::set<std::string> critical_vars;  // PIA slots
};

struct Witness {
  Eps eps;
  std::set<std::pair<std::string, std::string>> omega;  // transitive closure of <
  bool definite = true;
  bool vss = true;
  bool sahlqvist = true;
  bool has_uniform = false;
  std::vector<Slot> slots;
  Term skel_lhs, skel_rhs;  // skeleton with Hole(i) nodes marking slot i

  bool omega_lt(const std::string& a, const std::string& b) const { return omega.count({a, b}) > 0; }
};

// For an inequality uniform in p the chosen eps never marks p's occurrences
// critical at the opposite sign: uniformity means all occurrences share one
// sign s, and criticality simply follows eps(p) == s.

namespace detail {

inline bool subtree_has_critical(const Term& t, Pol sign, const Eps& eps) {
  if (t->kind == TermKind::PropVar) return eps.at(t->name) == sign;
  for (size_t i = 0; i < t->args.size(); ++i) {
    Pol cs = t->kind == TermKind::App ? (t->conn->order_type[i] == Pol::Pos ? sign : flip(sign)) : sign;
    if (subtree_has_critical(t->args[i], cs, eps)) return true;
  }
  return false;
}

inline bool subtree_has_propvar(const Term& t) {
  bool has = false;
  for_each_node(t, [&](const Term& n) {
    if (n->kind == TermKind::PropVar) has = true;
  });
  return has;
}

inline void critical_vars_of(const Term& t, Pol sign, const Eps& eps, std::set<std::string>& out) {
  if (t->kind == TermKind::PropVar) {
    if (eps.at(t->name) == sign) out.insert(t->name);
    return;
  }
  for (size_t i = 0; i < t->args.size(); ++i) {
    Pol cs = t->kind == TermKind::App ? (t->conn->order_type[i] == Pol::Pos ? sign : flip(sign)) : sign;
    critical_vars_of(t->args[i], cs, eps, out);
  }
}

inline Term decompose(const Term& t, Pol sign, bool on_lhs, std::vector<int>& path, const Eps& eps,
                      std::vector<Slot>& slots) {
  bool crit = subtree_has_critical(t, sign, eps);
  if (!crit) {
    if (!subtree_has_propvar(t)) return t;  // constant material stays inline
    Slot s{sign == Pol::Pos ? Slot::Kind::UniformPos : Slot::Kind::UniformNeg, on_lhs, path, t, {}};
    slots.push_back(s);
    return mk_hole((int)slots.size() - 1);
  }
  uint8_t r = roles_of(t, sign);
  if (t->kind != TermKind::PropVar && skeleton_capable(r)) {
    std::vector<Term> kids;
    for (size_t i = 0; i < t->args.size(); ++i) {
      Pol cs = t->kind == TermKind::App ? (t->conn->order_type[i] == Pol::Pos ? sign : flip(sign)) : sign;
      path.push_back((int)i);
      kids.push_back(decompose(t->args[i], cs, on_lhs, path, eps, slots));
      path.pop_back();
    }
    switch (t->kind) {
      case TermKind::Meet:
        return mk_meet(kids[0], kids[1]);
      case TermKind::Join:
        return mk_join(kids[0], kids[1]);
      case TermKind::App:
        return mk_app(t->conn, kids);
      default:
        break;
    }
  }
  // PIA slot (possibly a bare critical variable)
  Slot s{sign == Pol::Pos ? Slot::Kind::PiaPos : Slot::Kind::PiaNeg, on_lhs, path, t, {}};
  critical_vars_of(t, sign, eps, s.critical_vars);
  slots.push_back(s);
  return mk_hole((int)slots.size() - 1);
}

// PIA slot shape flags: bare variable (vss) / only unary connectives
// (Sahlqvist).
inline bool only_unary(const Term& t) {
  if (t->kind == TermKind::Meet || t->kind == TermKind::Join) return false;
  if (t->kind == TermKind::App && t->conn->arity > 1) return false;
  for (auto& a : t->args)
    if (!only_unary(a)) return false;
  return true;
}

}  // namespace detail

// Checks Definition-style (Omega, eps)-inductiveness for a fixed eps: every
// critical branch good, SRR side conditions in the PIA segments, Omega = the
// transitive closure of the collected constraints if acyclic.
inline std::optional<Witness> check_witness(const Inequality& iq, const Eps& eps) {
  SignedTree lt = classify_tree(iq.lhs, Pol::Pos);
  SignedTree rt = classify_tree(iq.rhs, Pol::Neg);
  std::vector<std::pair<std::string, std::string>> edges;
  Witness w;
  w.eps = eps;

  for (const Occurrence& o : occurrences(iq)) {
    if (!is_critical(o, eps)) continue;
    const SignedTree& root = o.on_lhs ? lt : rt;
    auto ups = nodes_above(root, o.path);
    // segmentation: nodes at or below the highest PIA-only node form P1
    int h = -1;
    for (int i = (int)ups.size() - 1; i >= 0; --i)
      if (!skeleton_capable(ups[i]->roles)) {
        h = i;
        break;
      }
    for (int i = 0; i <= h; ++i)
      if (!pia_capable(ups[i]->roles)) return std::nullopt;  // bad branch
    // SRR side conditions within the PIA segment
    std::vector<int> prefix(o.path.begin(), o.path.end());
    for (int i = 0; i <= h; ++i) {
      const SignedTree* node = ups[i];
      int through = prefix[prefix.size() - 1 - i];  // coordinate the branch passes through
      if (!(node->roles & kSRR)) continue;
      for (size_t c = 0; c < node->kids.size(); ++c) {
        if ((int)c == through) continue;
        const SignedTree& side = node->kids[c];
        // (a) the side subtree agrees with eps^d: every leaf non-critical
        std::vector<Occurrence> so;
        std::vector<int> p;
        collect_occurrences(side.term, side.sign, o.on_lhs, p, so);
        for (auto& s : so) {
          if (is_critical(s, eps)) return std::nullopt;
          // (b) side variables strictly below the critical variable
          if (s.var != o.var)
            edges.emplace_back(s.var, o.var);
          else
            return std::nullopt;  // would need o.var < o.var
        }
      }
    }
    // definiteness: no +/\ or -\/ inside the PIA segment
    for (int i = 0; i <= h; ++i) {
      const SignedTree* node = ups[i];
      if ((node->term->kind == TermKind::Meet && node->sign == Pol::Pos) ||
          (node->term->kind == TermKind::Join && node->sign == Pol::Neg))
        w.definite = false;
    }
  }

  // acyclicity of the constraint digraph; omega = transitive closure
  std::vector<std::string> vars = variables_in_order(iq);
  std::map<std::string, int> id;
  for (auto& v : vars) id[v] = (int)id.size();
  int n = (int)vars.size();
  std::vector<std::vector<bool>> lt_(n, std::vector<bool>(n, false));
  for (auto& [a, b] : edges) lt_[id[a]][id[b]] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (lt_[i][k] && lt_[k][j]) lt_[i][j] = true;
  for (int i = 0; i < n; ++i)
    if (lt_[i][i]) return std::nullopt;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (lt_[i][j]) w.omega.insert({vars[i], vars[j]});

  // decomposition and shape flags
  std::vector<int> path;
  w.skel_lhs = detail::decompose(iq.lhs, Pol::Pos, true, path, eps, w.slots);
  w.skel_rhs = detail::decompose(iq.rhs, Pol::Neg, false, path, eps, w.slots);
  for (const Slot& s : w.slots) {
    if (s.kind == Slot::Kind::PiaPos || s.kind == Slot::Kind::PiaNeg) {
      if (s.subtree->kind != TermKind::PropVar) w.vss = false;
      if (!detail::only_unary(s.subtree)) w.sahlqvist = false;
    }
  }
  // uniform variables: those with no critical occurrence
  std::set<std::string> crit;
  for (auto& o : occurrences(iq))
    if (is_critical(o, eps)) crit.insert(o.var);
  for (auto& v : vars)
    if (!crit.count(v)) w.has_uniform = true;
  return w;
}

// All (Omega, eps)-witnesses, ordered strongest-label-first (very simple
// Sahlqvist, then Sahlqvist, then plain inductive), lexicographic on eps
// (1 < d, variables by first occurrence) within a class. Pipelines take the
// first.
inline std::vector<Witness> find_inductive(const Inequality& iq) {
  std::vector<std::string> vars = variables_in_order(iq);
  if (vars.size() > 16) throw ClassifyError("TooManyVariables", "more than 16 proposition variables");
  std::vector<Witness> vss, sahl, rest;
  for (uint32_t bits = 0; bits < (1u << vars.size()); ++bits) {
    Eps eps;
    for (size_t i = 0; i < vars.size(); ++i) eps[vars[i]] = (bits >> i) & 1 ? Pol::Neg : Pol::Pos;
    auto w = check_witness(iq, eps);
    if (!w) continue;
    (w->vss ? vss : w->sahlqvist ? sahl : rest).push_back(*w);
  }
  // lexicographic enumeration: bits counts with low variable as LSB, and
  // Pos < Neg maps to 0 < 1, but bit-counting increments the *first*
  // variable fastest; reorder to true lexicographic order.
  auto lex_less = [&](const Witness& a, const Witness& b) {
    for (auto& v : vars) {
      if (a.eps.at(v) != b.eps.at(v)) return a.eps.at(v) == Pol::Pos;
    }
    return false;
  };
  std::stable_sort(vss.begin(), vss.end(), lex_less);
  std::stable_sort(sahl.begin(), sahl.end(), lex_less);
  std::stable_sort(rest.begin(), rest.end(), lex_less);
  std::vector<Witness> out;
  out.insert(out.end(), vss.begin(), vss.end());
  out.insert(out.end(), sahl.begin(), sahl.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

enum class IneqLabel { NotInductive, Inductive, Sahlqvist, VerySimpleSahlqvist };

inline const char* label_name(IneqLabel l) {
  switch (l) {
    case IneqLabel::NotInductive: return "not-inductive";
    case IneqLabel::Inductive: return "inductive";
    case IneqLabel::Sahlqvist: return "sahlqvist";
    case IneqLabel::VerySimpleSahlqvist: return "very-simple-sahlqvist";
  }
  return "?";
}

struct Classification {
  IneqLabel label;
  std::vector<Witness> witnesses;
};

inline Classification classify_inequality(const Inequality& iq) {
  auto ws = find_inductive(iq);
  if (ws.empty()) return {IneqLabel::NotInductive, {}};
  IneqLabel l = IneqLabel::Inductive;
  for (auto& w : ws) {
    if (w.vss) {
      l = IneqLabel::VerySimpleSahlqvist;
      break;
    }
    if (w.sahlqvist) l = IneqLabel::Sahlqvist;
  }
  return {l, std::move(ws)};
}

// ------------------------------------------------------ splittable branches

namespace detail {

// Whether the residual of connective c in the given (0-based) coordinate is a
// base-language connective. Residuating a residual in its principal
// coordinate recovers the parent; lattice residuals residuate to meet/join
// there and to their commutativity mirror elsewhere. Base connectives that
// were identified with a residual via an alias behave like that residual.
inline bool residual_conservative(const Signature& sig, const Connective* c, int through) {
  int thr = through + 1;
  const Connective* eff = sig.identified_form(c->name);
  if (!eff) eff = c;
  if (eff->origin == Connective::Origin::LatticeResidual) {
    if (thr == eff->coord) return true;  // lattice meet/join, always present
    std::string mirror = eff->name == "<-" ? "->" : eff->name;
    return sig.in_base(mirror);
  }
  if (eff->origin == Connective::Origin::Residual && thr == eff->coord) return sig.in_base(eff->parent);
  const Connective* rr = sig.resolved_residual(c->name, thr);
  return rr && rr->is_base();
}

// Is this node allowed in the conservative P1 segment, passing through
// coordinate `through` (0-based)?
inline bool conservative_p1(const SignedTree& node, int through, const Signature& sig) {
  uint8_t r = node.roles;
  if (!pia_capable(r)) return false;
  const Term& t = node.term;
  if (t->kind == TermKind::Meet || t->kind == TermKind::Join) {
    bool sra = (t->kind == TermKind::Meet && node.sign == Pol::Pos) ||
               (t->kind == TermKind::Join && node.sign == Pol::Neg);
    if (sra) return true;  // splitting-based, introduces no connective
    // SRR lattice node: the residual used depends on the coordinate
    const char* res;
    if (t->kind == TermKind::Meet) res = through == 0 ? "<-" : "->";
    else res = through == 0 ? ">-" : "-<";
    return sig.in_base(res);
  }
  if (t->kind == TermKind::App) return residual_conservative(sig, t->conn, through);
  return false;
}

inline bool in_L(const SignedTree& node, const Signature& sig) {
  const Term& t = node.term;
  if (t->kind == TermKind::Meet || t->kind == TermKind::Join) return true;
  if (t->kind == TermKind::App) return sig.in_base(t->conn->name);
  return true;  // leaves
}

}  // namespace detail

// Splittable branch: P1 of adjunction/residuation-conservative PIA nodes from
// the leaf, then P2 of arbitrary base-language nodes.
inline bool is_splittable(const SignedTree& st, const std::vector<int>& leaf_path, const Signature& sig_base) {
  auto ups = nodes_above(st, leaf_path);
  int h = -1;
  for (int i = (int)ups.size() - 1; i >= 0; --i)
    if (!detail::in_L(*ups[i], sig_base)) {
      h = i;
      break;
    }
  for (int i = 0; i <= h; ++i) {
    int through = leaf_path[leaf_path.size() - 1 - i];
    if (!detail::conservative_p1(*ups[i], through, sig_base)) return false;
  }
  return true;
}

// ------------------------------------------------------------- unpackable

using Omega = std::set<std::pair<std::string, std::string>>;

inline std::set<std::string> vars_of(const Term& t) { return prop_vars(t); }

// (Omega, eps)-unpackable: eps^d holds everywhere, and either a variable or
// constant, or some Omega-maximal variable has a splittable path with
// recursively unpackable SRR side subtrees.
inline bool is_unpackable(const SignedTree& st, const Eps& eps, const Omega& omega, const Signature& sig_base) {
  {  // eps^d agreement of the whole subtree
    std::vector<Occurrence> so;
    std::vector<int> p;
    collect_occurrences(st.term, st.sign, true, p, so);
    for (auto& o : so)
      if (eps.count(o.var) && eps.at(o.var) == o.sign) return false;
  }
  if (st.term->kind == TermKind::PropVar || st.term->kind == TermKind::Top || st.term->kind == TermKind::Bot ||
      (st.term->kind == TermKind::App && st.term->conn->arity == 0))
    return true;
  std::set<std::string> vs = vars_of(st.term);
  if (vs.empty()) return true;  // constant combination
  auto maximal = [&](const std::string& v) {
    for (auto& u : vs)
      if (u != v && omega.count({v, u})) return false;
    return true;
  };
  std::vector<Occurrence> occs;
  std::vector<int> p;
  collect_occurrences(st.term, st.sign, true, p, occs);
  for (const std::string& v : vs) {
    if (!maximal(v)) continue;
    for (const Occurrence& o : occs) {
      if (o.var != v) continue;
      if (!is_splittable(st, o.path, sig_base)) continue;
      // SRR side subtrees along the path must be recursively unpackable
      auto ups = nodes_above(st, o.path);
      bool ok = true;
      for (size_t i = 0; i < ups.size() && ok; ++i) {
        const SignedTree* node = ups[i];
        if (!(node->roles & kSRR)) continue;
        int through = o.path[o.path.size() - 1 - i];
        for (size_t c = 0; c < node->kids.size() && ok; ++c)
          if ((int)c != through && !is_unpackable(node->kids[c], eps, omega, sig_base)) ok = false;
      }
      if (ok) return true;
    }
  }
  return false;
}

// ----------------------------------------------------------- crypto check

struct CryptoWitness {
  Eps eps;
  Omega omega;
  struct TopSubtree {
    bool on_lhs;
    std::vector<int> path;
  };
  std::vector<TopSubtree> tops;  // topmost properly-L* subtrees
};

namespace detail {

// Choose per-subtree maxima, accumulating v < p0 edges for all other
// variables of the subtree, and check global acyclicity: a sufficient
// algorithmic reading of the unpackability order conditions under which the
// crypto-to-inductive extraction is well founded.
struct CryptoSearch {
  const Signature& sig;
  const Eps& eps;
  std::vector<std::pair<std::string, std::string>> edges;

  CryptoSearch(const Signature& s, const Eps& e) : sig(s), eps(e) {}

  bool acyclic() const {
    std::set<std::string> vars;
    for (auto& [a, b] : edges) {
      vars.insert(a);
      vars.insert(b);
    }
    std::map<std::string, std::set<std::string>> adj;
    for (auto& [a, b] : edges) adj[a].insert(b);
    // closure + irreflexivity
    for (auto& v : vars) {
      std::set<std::string> seen;
      std::vector<std::string> stack{v};
      while (!stack.empty()) {
        std::string x = stack.back();
        stack.pop_back();
        for (auto& y : adj[x]) {
          if (y == v) return false;
          if (seen.insert(y).second) stack.push_back(y);
        }
      }
    }
    return true;
  }

  bool solve_subtree(const SignedTree& st) {
    {  // eps^d agreement
      std::vector<Occurrence> so;
      std::vector<int> p;
      collect_occurrences(st.term, st.sign, true, p, so);
      for (auto& o : so)
        if (eps.count(o.var) && eps.at(o.var) == o.sign) return false;
    }
    if (st.term->kind == TermKind::PropVar || st.term->kind == TermKind::Top || st.term->kind == TermKind::Bot ||
        (st.term->kind == TermKind::App && st.term->conn->arity == 0))
      return true;
    std::set<std::string> vs = vars_of(st.term);
    if (vs.empty()) return true;
    std::vector<Occurrence> occs;
    std::vector<int> p;
    collect_occurrences(st.term, st.sign, true, p, occs);
    for (const std::string& v : vs) {
      for (const Occurrence& o : occs) {
        if (o.var != v) continue;
        if (!is_splittable(st, o.path, sig)) continue;
        size_t mark = edges.size();
        for (auto& u : vs)
          if (u != v) edges.emplace_back(u, v);
        bool ok = acyclic();
        auto ups = nodes_above(st, o.path);
        for (size_t i = 0; i < ups.size() && ok; ++i) {
          const SignedTree* node = ups[i];
          if (!(node->roles & kSRR)) continue;
          int through = o.path[o.path.size() - 1 - i];
          for (size_t c = 0; c < node->kids.size() && ok; ++c)
            if ((int)c != through && !solve_subtree(node->kids[c])) ok = false;
        }
        if (ok && acyclic()) return true;
        edges.resize(mark);
      }
    }
    return false;
  }
};

inline void find_top_lstar(const SignedTree& st, const Signature& sig, std::vector<int>& path,
                           std::vector<CryptoWitness::TopSubtree>& out, bool on_lhs) {
  if (!detail::in_L(st, sig)) {
    out.push_back({on_lhs, path});
    return;
  }
  for (size_t i = 0; i < st.kids.size(); ++i) {
    path.push_back((int)i);
    find_top_lstar(st.kids[i], sig, path, out, on_lhs);
    path.pop_back();
  }
}

}  // namespace detail

// Crypto inductive check: very simple Sahlqvist in L*, critical branches
// entirely in L, and the topmost properly-L* subtrees on non-critical
// branches unpackable for a common Omega.
inline std::optional<CryptoWitness> is_crypto_inductive(const Inequality& iq, const SigPtr& sig) {
  Classification cls = classify_inequality(iq);
  if (cls.label != IneqLabel::VerySimpleSahlqvist) return std::nullopt;
  SignedTree lt = classify_tree(iq.lhs, Pol::Pos);
  SignedTree rt = classify_tree(iq.rhs, Pol::Neg);
  for (const Witness& w : cls.witnesses) {
    if (!w.vss) break;  // vss witnesses come first
    // condition 1: critical branches contain only L connectives
    bool ok = true;
    for (const Occurrence& o : occurrences(iq)) {
      if (!is_critical(o, w.eps)) continue;
      for (auto* n : nodes_above(o.on_lhs ? lt : rt, o.path))
        if (!detail::in_L(*n, *sig)) ok = false;
    }
    if (!ok) continue;
    // condition 2: topmost properly-L* subtrees unpackable for some Omega
    std::vector<CryptoWitness::TopSubtree> tops;
    std::vector<int> path;
    detail::find_top_lstar(lt, *sig, path, tops, true);
    detail::find_top_lstar(rt, *sig, path, tops, false);
    detail::CryptoSearch search(*sig, w.eps);
    bool all = true;
    for (auto& t : tops) {
      const SignedTree& st = subtree_at(t.on_lhs ? lt : rt, t.path);
      if (!search.solve_subtree(st)) {
        all = false;
        break;
      }
    }
    if (!all) continue;
    CryptoWitness cw;
    cw.eps = w.eps;
    cw.tops = tops;
    for (auto& [a, b] : search.edges) cw.omega.insert({a, b});
    // close transitively
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& [a, b] : std::set<std::pair<std::string, std::string>>(cw.omega))
        for (auto& [c, d] : std::set<std::pair<std::string, std::string>>(cw.omega))
          if (b == c && !cw.omega.count({a, d})) {
            cw.omega.insert({a, d});
            changed = true;
          }
    }
    return cw;
  }
  return std::nullopt;
}

}  // namespace dlecorr
