#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlecorr/print.hpp"
#include "dlecorr/syntax.hpp"

namespace dlecorr {

// Deterministic generator (xorshift*), independent of platform library
// details so seeded batteries are reproducible byte-for-byte.
class Rng {
public:
  explicit Rng(uint64_t seed) : s_(seed * 2685821657736338717ULL + 1442695040888963407ULL) {}
  uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 2685821657736338717ULL;
  }
  int below(int n) { return n <= 1 ? 0 : int(next() % uint64_t(n)); }

private:
  uint64_t s_;
};

// A finite poset on points 0..n-1; leq_ is the full reflexive-transitive
// order relation.
struct Poset {
  int n = 0;
  std::vector<std::vector<bool>> leq;

  static Poset chain(int n) {
    Poset p;
    p.n = n;
    p.leq.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) p.leq[i][j] = true;
    return p;
  }

  static Poset antichain(int n) {
    Poset p;
    p.n = n;
    p.leq.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) p.leq[i][i] = true;
    return p;
  }

  static Poset random(int n, Rng& rng) {
    Poset p;
    p.n = n;
    p.leq.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) p.leq[i][i] = true;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.below(2)) p.leq[i][j] = true;
    // transitive closure
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (p.leq[i][k] && p.leq[k][j]) p.leq[i][j] = true;
    return p;
  }
};

// A finite perfect DLE: the lattice of up-sets of a poset with interpreted
// normal operators for every connective of an expanded signature.
class FiniteDLE {
public:
  std::string name;

  // ---- construction -----------------------------------------------------

  // Operators are generated join-prime-wise (f) / meet-prime-wise (g) from a
  // seeded choice on irreducible tuples, so normality holds by construction.
  // Residual-origin connectives always get the genuine adjoint tables, as do
  // base connectives identified with residuals via signature aliases.
  static FiniteDLE build(const SigPtr& sig, const Poset& poset, uint64_t op_seed, std::string name = "model") {
    if (poset.n > 6) throw OracleError("PosetTooLarge", "poset has " + std::to_string(poset.n) + " > 6 points");
    FiniteDLE m;
    m.name = std::move(name);
    m.sig_ = sig;
    m.poset_ = poset;
    m.enumerate_elements();
    m.compute_irreducibles();
    Rng rng(op_seed);

    // Base connectives that are *not* identification targets: random seeds.
    std::set<std::string> identified;
    for (auto& [gen, base] : sig->identifications()) identified.insert(base);
    for (const auto* c : sig->all()) {
      if (!c->is_base() || identified.count(c->name)) continue;
      m.ops_[c->name] = m.generate_table(*c, rng);
    }
    // Lattice residuals: genuine tables over meet/join.
    for (const auto* c : sig->all()) {
      if (c->origin == Connective::Origin::LatticeResidual) m.ops_[c->name] = m.lattice_residual_table(*c);
    }
    // Identified base connectives get the genuine table of the residual they
    // name (before generated residuals, whose parents may be identified).
    for (auto& [gen, base] : sig->identifications()) {
      Connective g = generated_connective(*sig, gen);
      m.ops_[base] = (g.origin == Connective::Origin::LatticeResidual) ? m.lattice_residual_table(g)
                                                                       : m.residual_table(g);
    }
    for (const auto* c : sig->all()) {
      if (c->origin == Connective::Origin::Residual) m.ops_[c->name] = m.residual_table(*c);
    }
    return m;
  }

  // ---- structure ---------------------------------------------------------

  int size() const { return (int)elems_.size(); }
  int bot() const { return bot_; }
  int top() const { return top_; }
  bool leq(int a, int b) const { return (elems_[a] & elems_[b]) == elems_[a]; }
  int meet(int a, int b) const { return index_.at(elems_[a] & elems_[b]); }
  int join(int a, int b) const { return index_.at(elems_[a] | elems_[b]); }

  const std::vector<int>& joinirr() const { return joinirr_; }
  const std::vector<int>& meetirr() const { return meetirr_; }
  bool is_joinirr(int a) const { return joinirr_set_.count(a) > 0; }
  bool is_meetirr(int a) const { return meetirr_set_.count(a) > 0; }

  // kappa(j) = \/{a : j !<= a},  lambda(m) = /\{a : a !<= m}
  int kappa(int j) const { return kappa_.at(j); }
  int lambda(int m) const { return lambda_.at(m); }

  int apply(const Connective* c, const std::vector<int>& args) const {
    const OpTable& t = ops_.at(c->name);
    size_t idx = 0;
    for (int a : args) idx = idx * elems_.size() + a;
    return t.table[idx];
  }

  const SigPtr& sig() const { return sig_; }
  const Poset& poset() const { return poset_; }

  // ---- evaluation ---------------------------------------------------------

  struct Env {
    std::map<std::string, int> prop, nom, conom;
  };

  int eval(const Term& t, const Env& env) const {
    switch (t->kind) {
      case TermKind::PropVar: {
        auto it = env.prop.find(t->name);
        if (it == env.prop.end()) throw OracleError("UnboundVariable", "proposition variable '" + t->name + "'");
        return it->second;
      }
      case TermKind::Nominal: {
        auto it = env.nom.find(t->name);
        if (it == env.nom.end()) throw OracleError("UnboundVariable", "nominal '" + t->name + "'");
        return it->second;
      }
      case TermKind::Conominal: {
        auto it = env.conom.find(t->name);
        if (it == env.conom.end()) throw OracleError("UnboundVariable", "conominal '" + t->name + "'");
        return it->second;
      }
      case TermKind::Top:
        return top_;
      case TermKind::Bot:
        return bot_;
      case TermKind::Meet:
        return meet(eval(t->args[0], env), eval(t->args[1], env));
      case TermKind::Join:
        return join(eval(t->args[0], env), eval(t->args[1], env));
      case TermKind::Kappa: {
        int v = eval(t->args[0], env);
        if (!is_joinirr(v)) throw OracleError("SortError", "kappa of a non-join-irreducible element");
        return kappa(v);
      }
      case TermKind::Lambda: {
        int v = eval(t->args[0], env);
        if (!is_meetirr(v)) throw OracleError("SortError", "lambda of a non-meet-irreducible element");
        return lambda(v);
      }
      case TermKind::App: {
        std::vector<int> args;
        args.reserve(t->args.size());
        for (auto& a : t->args) args.push_back(eval(a, env));
        return apply(t->conn, args);
      }
      default:
        throw OracleError("EvalError", "cannot evaluate this node");
    }
  }

  // true iff lhs <= rhs under all valuations of the proposition variables
  // (pure variables must not occur).
  bool valid_inequality(const Inequality& iq) const {
    std::set<std::string> props, noms, conoms;
    collect_vars(iq.lhs, props, noms, conoms);
    collect_vars(iq.rhs, props, noms, conoms);
    if (!noms.empty() || !conoms.empty())
      throw OracleError("PureVariables", "valid_inequality needs a pure-variable-free inequality");
    std::vector<std::string> vars(props.begin(), props.end());
    check_valuation_budget(vars.size());
    Env env;
    return forall_valuations(vars, 0, env, [&](const Env& e) { return leq(eval(iq.lhs, e), eval(iq.rhs, e)); });
  }

  // Meta-formula validity: quantifiers range over join/meet irreducibles;
  // free proposition variables are quantified universally; free pure
  // variables must be supplied through `env`.
  bool valid_meta(const Meta& m, Env env = {}) const {
    std::set<std::string> noms, conoms;
    meta_free_pure(m, noms, conoms);
    for (auto& n : noms)
      if (!env.nom.count(n)) throw OracleError("UnboundVariable", "free nominal '" + n + "'");
    for (auto& n : conoms)
      if (!env.conom.count(n)) throw OracleError("UnboundVariable", "free conominal '" + n + "'");
    std::set<std::string> props = meta_props(m);
    std::vector<std::string> vars;
    for (auto& p : props)
      if (!env.prop.count(p)) vars.push_back(p);
    check_valuation_budget(vars.size());
    return forall_valuations(vars, 0, env, [&](const Env& e) { return eval_meta(m, e); });
  }

  // ---- dump ---------------------------------------------------------------

  std::string dump() const {
    std::ostringstream os;
    os << "model " << name << "\n";
    os << "poset " << poset_.n << "\n";
    for (int i = 0; i < poset_.n; ++i)
      for (int j = 0; j < poset_.n; ++j)
        if (i != j && poset_.leq[i][j]) os << "leq " << i << " " << j << "\n";
    for (auto& [name, t] : ops_) {
      os << "op " << name << " " << t.arity << " :";
      for (int v : t.table) os << " " << v;
      os << "\n";
    }
    return os.str();
  }

  // Parses the dump format (operator tables indexed against the same
  // deterministic element enumeration).
  static FiniteDLE parse(const std::string& text, const SigPtr& sig) {
    std::istringstream in(text);
    std::string kw;
    FiniteDLE m;
    m.sig_ = sig;
    std::vector<std::pair<int, int>> pairs;
    int n = -1;
    std::string name = "model";
    std::map<std::string, OpTable> ops;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      if (!(ls >> kw)) continue;
      if (kw == "model") {
        ls >> name;
      } else if (kw == "poset") {
        ls >> n;
      } else if (kw == "leq") {
        int a, b;
        ls >> a >> b;
        pairs.emplace_back(a, b);
      } else if (kw == "op") {
        std::string cname;
        int arity;
        std::string colon;
        ls >> cname >> arity >> colon;
        OpTable t;
        t.arity = arity;
        int v;
        while (ls >> v) t.table.push_back(v);
        ops[cname] = t;
      }
    }
    if (n < 0) throw OracleError("ModelParse", "missing poset size");
    Poset p;
    p.n = n;
    p.leq.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) p.leq[i][i] = true;
    for (auto [a, b] : pairs) p.leq[a][b] = true;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (p.leq[i][k] && p.leq[k][j]) p.leq[i][j] = true;
    m.name = name;
    m.poset_ = p;
    m.enumerate_elements();
    m.compute_irreducibles();
    m.ops_ = std::move(ops);
    // fill in any missing generated residuals
    for (const auto* c : sig->all()) {
      if (m.ops_.count(c->name)) continue;
      if (c->origin == Connective::Origin::LatticeResidual)
        m.ops_[c->name] = m.lattice_residual_table(*c);
      else if (c->origin == Connective::Origin::Residual)
        m.ops_[c->name] = m.residual_table(*c);
      else
        throw OracleError("ModelParse", "no table for base connective '" + c->name + "'");
    }
    return m;
  }

private:
  struct OpTable {
    int arity = 0;
    std::vector<int> table;
  };

  static Connective generated_connective(const Signature& sig, const std::string& gen_name) {
    // Rebuild the connective object for a generated residual name like
    // dia#1 / boxb1 / -> without consulting the (identified) alias map.
    if (gen_name == "->") return {"->", Family::G, 2, {Pol::Neg, Pol::Pos}, Connective::Origin::LatticeResidual, "/\\", 2};
    if (gen_name == "<-") return {"<-", Family::G, 2, {Pol::Pos, Pol::Neg}, Connective::Origin::LatticeResidual, "/\\", 1};
    if (gen_name == ">-") return {">-", Family::F, 2, {Pol::Neg, Pol::Pos}, Connective::Origin::LatticeResidual, "\\/", 2};
    if (gen_name == "-<") return {"-<", Family::F, 2, {Pol::Pos, Pol::Neg}, Connective::Origin::LatticeResidual, "\\/", 1};
    auto hash = gen_name.find_last_of("#b");
    if (hash == std::string::npos) throw SignatureError("AliasMismatch", "'" + gen_name + "' is not a generated name");
    std::string parent = gen_name.substr(0, hash);
    int coord = std::stoi(gen_name.substr(hash + 1));
    return Signature::residual(sig.get(parent), coord);
  }

  void enumerate_elements() {
    int n = poset_.n;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      bool up = true;
      for (int i = 0; i < n && up; ++i)
        if (mask & (1u << i))
          for (int j = 0; j < n; ++j)
            if (poset_.leq[i][j] && !(mask & (1u << j))) up = false;
      if (up) {
        index_[mask] = (int)elems_.size();
        elems_.push_back(mask);
      }
    }
    bot_ = index_.at(0);
    top_ = index_.at((1u << n) - 1);
  }

  void compute_irreducibles() {
    int n = poset_.n;
    for (int x = 0; x < n; ++x) {
      uint32_t up = 0, down = 0;
      for (int y = 0; y < n; ++y) {
        if (poset_.leq[x][y]) up |= (1u << y);
        if (poset_.leq[y][x]) down |= (1u << y);
      }
      joinirr_.push_back(index_.at(up));
      meetirr_.push_back(index_.at(((1u << n) - 1) & ~down));
    }
    joinirr_set_.insert(joinirr_.begin(), joinirr_.end());
    meetirr_set_.insert(meetirr_.begin(), meetirr_.end());
    // kappa(j) = \/{a : j !<= a}; lambda(m) = /\{a : a !<= m}
    for (int j : joinirr_) {
      uint32_t acc = 0;
      for (int a = 0; a < size(); ++a)
        if (!leq(j, a)) acc |= elems_[a];
      kappa_[j] = index_.at(acc);
    }
    for (int m : meetirr_) {
      uint32_t acc = (1u << n) - 1;
      for (int a = 0; a < size(); ++a)
        if (!leq(a, m)) acc &= elems_[a];
      lambda_[m] = index_.at(acc);
    }
  }

  OpTable generate_table(const Connective& c, Rng& rng) {
    OpTable t;
    t.arity = c.arity;
    if (c.arity == 0) {
      t.table = {rng.below(size())};
      return t;
    }
    // seeds on irreducible tuples, per-coordinate J or M by order type
    std::vector<const std::vector<int>*> gens(c.arity);
    for (int i = 0; i < c.arity; ++i) {
      bool pos = c.order_type[i] == Pol::Pos;
      gens[i] = (c.family == Family::F) == pos ? &joinirr_ : &meetirr_;
    }
    std::map<std::vector<int>, int> seed;
    std::vector<int> tup(c.arity, 0);
    seed_walk(gens, 0, tup, seed, rng);
    size_t total = 1;
    for (int i = 0; i < c.arity; ++i) total *= size();
    t.table.resize(total);
    std::vector<int> args(c.arity, 0);
    for (size_t idx = 0; idx < total; ++idx) {
      size_t rem = idx;
      for (int i = c.arity - 1; i >= 0; --i) {
        args[i] = int(rem % size());
        rem /= size();
      }
      int acc = (c.family == Family::F) ? bot_ : top_;
      for (auto& [g, v] : seed) {
        bool apply = true;
        for (int i = 0; i < c.arity && apply; ++i) {
          bool pos = c.order_type[i] == Pol::Pos;
          bool below = (c.family == Family::F) == pos;  // generator below arg?
          apply = below ? leq(g[i], args[i]) : leq(args[i], g[i]);
        }
        if (apply) acc = (c.family == Family::F) ? join(acc, v) : meet(acc, v);
      }
      t.table[idx] = acc;
    }
    return t;
  }

  void seed_walk(const std::vector<const std::vector<int>*>& gens, int i, std::vector<int>& tup,
                 std::map<std::vector<int>, int>& seed, Rng& rng) {
    if (i == (int)gens.size()) {
      seed[tup] = rng.below(size());
      return;
    }
    for (int g : *gens[i]) {
      tup[i] = g;
      seed_walk(gens, i + 1, tup, seed, rng);
    }
  }

  // genuine residual/adjoint of the parent connective's table
  OpTable residual_table(const Connective& r) {
    const Connective& parent = sig_->get(r.parent);
    const OpTable& pt = ops_.at(parent.name);
    OpTable t;
    t.arity = r.arity;
    size_t total = 1;
    for (int i = 0; i < r.arity; ++i) total *= size();
    t.table.resize(total);
    std::vector<int> args(r.arity, 0);
    int i0 = r.coord - 1;
    for (size_t idx = 0; idx < total; ++idx) {
      size_t rem = idx;
      for (int i = r.arity - 1; i >= 0; --i) {
        args[i] = int(rem % size());
        rem /= size();
      }
      int y = args[i0];
      bool lower = false;  // residual computed as a join (true) or meet
      if (parent.family == Family::F)
        lower = parent.order_type[i0] == Pol::Pos;  // f-res at 1-coords: join
      else
        lower = parent.order_type[i0] == Pol::Neg;  // g-res at d-coords: join
      int acc = lower ? bot_ : top_;
      std::vector<int> pargs = args;
      for (int z = 0; z < size(); ++z) {
        pargs[i0] = z;
        size_t pidx = 0;
        for (int a : pargs) pidx = pidx * size() + a;
        int val = pt.table[pidx];
        bool ok = parent.family == Family::F ? leq(val, y) : leq(y, val);
        if (ok) acc = lower ? join(acc, z) : meet(acc, z);
      }
      t.table[idx] = acc;
    }
    return t;
  }

  OpTable lattice_residual_table(const Connective& c) {
    OpTable t;
    t.arity = 2;
    t.table.resize(size_t(size()) * size());
    for (int a = 0; a < size(); ++a)
      for (int b = 0; b < size(); ++b) {
        int acc;
        if (c.name == "->") {  // a -> b = \/{z : z /\ a <= b}
          acc = bot_;
          for (int z = 0; z < size(); ++z)
            if (leq(meet(z, a), b)) acc = join(acc, z);
        } else if (c.name == "<-") {  // a <- b = \/{z : z /\ b <= a}
          acc = bot_;
          for (int z = 0; z < size(); ++z)
            if (leq(meet(z, b), a)) acc = join(acc, z);
        } else if (c.name == "-<") {  // a -< b = /\{z : a <= b \/ z}
          acc = top_;
          for (int z = 0; z < size(); ++z)
            if (leq(a, join(b, z))) acc = meet(acc, z);
        } else {  // a >- b = /\{z : b <= z \/ a}
          acc = top_;
          for (int z = 0; z < size(); ++z)
            if (leq(b, join(z, a))) acc = meet(acc, z);
        }
        t.table[size_t(a) * size() + b] = acc;
      }
    return t;
  }

  void check_valuation_budget(size_t nvars) const {
    double count = 1;
    for (size_t i = 0; i < nvars; ++i) count *= size();
    if (count > 1e7) throw OracleError("TooManyValuations", std::to_string(nvars) + " variables over " +
                                                                std::to_string(size()) + " elements");
  }

  template <typename F>
  bool forall_valuations(const std::vector<std::string>& vars, size_t i, Env& env, F&& f) const {
    if (i == vars.size()) return f(env);
    for (int v = 0; v < size(); ++v) {
      env.prop[vars[i]] = v;
      if (!forall_valuations(vars, i + 1, env, f)) {
        env.prop.erase(vars[i]);
        return false;
      }
    }
    env.prop.erase(vars[i]);
    return true;
  }

  static std::set<std::string> meta_props(const Meta& m) {
    std::set<std::string> props;
    meta_for_each_ineq(m, [&](const Inequality& iq, bool) {
      std::set<std::string> n, c;
      collect_vars(iq.lhs, props, n, c);
      collect_vars(iq.rhs, props, n, c);
    });
    return props;
  }

  bool eval_meta(const Meta& m, const Env& env) const {
    switch (m->kind) {
      case MetaKind::Ineq:
        return leq(eval(m->ineq.lhs, env), eval(m->ineq.rhs, env));
      case MetaKind::NegIneq:
        return !leq(eval(m->ineq.lhs, env), eval(m->ineq.rhs, env));
      case MetaKind::MAnd:
        for (auto& k : m->kids)
          if (!eval_meta(k, env)) return false;
        return true;
      case MetaKind::MOr:
        for (auto& k : m->kids)
          if (eval_meta(k, env)) return true;
        return false;
      case MetaKind::MNot:
        return !eval_meta(m->kids[0], env);
      case MetaKind::MImp:
        return !eval_meta(m->kids[0], env) || eval_meta(m->kids[1], env);
      case MetaKind::Forall:
      case MetaKind::Exists: {
        bool forall = m->kind == MetaKind::Forall;
        const std::vector<int>& range = m->sort == VarSort::Nominal ? joinirr_ : meetirr_;
        Env e = env;
        auto& slot = m->sort == VarSort::Nominal ? e.nom : e.conom;
        for (int v : range) {
          slot[m->var] = v;
          bool r = eval_meta(m->body, e);
          if (forall && !r) return false;
          if (!forall && r) return true;
        }
        return forall;
      }
      case MetaKind::RForall:
      case MetaKind::RExists: {
        bool forall = m->kind == MetaKind::RForall;
        Inequality r = restricting_ineq(m->rconn, m->rvars, m->restrictor);
        Meta rm = mk_ineq(r.lhs, r.rhs);
        return restricted_walk(m, rm, 0, env, forall);
      }
    }
    return false;
  }

  bool restricted_walk(const Meta& m, const Meta& restr, size_t i, const Env& env, bool forall) const {
    if (i == m->rvars.size()) {
      if (!eval_meta(restr, env)) return forall;  // outside the restriction
      return eval_meta(m->body, env);
    }
    VarSort s = bound_sort(*m->rconn, (int)i);
    const std::vector<int>& range = s == VarSort::Nominal ? joinirr_ : meetirr_;
    Env e = env;
    auto& slot = s == VarSort::Nominal ? e.nom : e.conom;
    for (int v : range) {
      slot[m->rvars[i]] = v;
      bool r = restricted_walk(m, restr, i + 1, e, forall);
      if (forall && !r) return false;
      if (!forall && r) return true;
    }
    return forall;
  }

  SigPtr sig_;
  Poset poset_;
  std::vector<uint32_t> elems_;
  std::map<uint32_t, int> index_;
  int bot_ = 0, top_ = 0;
  std::vector<int> joinirr_, meetirr_;
  std::set<int> joinirr_set_, meetirr_set_;
  std::map<int, int> kappa_, lambda_;
  std::map<std::string, OpTable> ops_;
};

// The fixed 12-model battery for a signature: chains of lattice size 2,3,4,
// the 2x2 diamond, the 2^3 cube, and 7 seeded up-set lattices.
inline std::vector<FiniteDLE> battery(const SigPtr& sig, uint64_t seed) {
  std::vector<FiniteDLE> out;
  int k = 0;
  auto add = [&](const Poset& p, const std::string& nm) {
    out.push_back(FiniteDLE::build(sig, p, seed * 1000003ULL + (++k), nm));
  };
  add(Poset::chain(1), "chain2");
  add(Poset::chain(2), "chain3");
  add(Poset::chain(3), "chain4");
  add(Poset::antichain(2), "diamond");
  add(Poset::antichain(3), "cube");
  int sizes[7] = {2, 3, 3, 4, 4, 4, 4};
  for (int i = 0; i < 7; ++i) {
    Rng rng(seed * 7919ULL + i);
    add(Poset::random(sizes[i], rng), "seeded" + std::to_string(i + 1));
  }
  return out;
}

// Battery-relative equivalence: sound for refutation, heuristic for
// confirmation (documented limitation).
struct Checkable {
  enum class Kind { Ineq, MetaF } kind;
  Inequality ineq;
  Meta meta;

  static Checkable of(const Inequality& i) { return {Kind::Ineq, i, nullptr}; }
  static Checkable of(const Meta& m) { return {Kind::MetaF, {}, m}; }

  bool valid_on(const FiniteDLE& m) const {
    return kind == Kind::Ineq ? m.valid_inequality(ineq) : m.valid_meta(meta);
  }
};

inline bool equivalent(const std::vector<FiniteDLE>& models, const Checkable& a, const Checkable& b,
                       std::string* witness = nullptr) {
  for (const auto& m : models) {
    bool va = a.valid_on(m), vb = b.valid_on(m);
    if (va != vb) {
      if (witness) *witness = m.name;
      return false;
    }
  }
  return true;
}

}  // namespace dlecorr
