#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dlecorr/error.hpp"

namespace dlecorr {

// Per-coordinate monotonicity: Pos = monotone (1), Neg = antitone (d).
enum class Pol { Pos, Neg };

inline Pol flip(Pol p) { return p == Pol::Pos ? Pol::Neg : Pol::Pos; }

using OrderType = std::vector<Pol>;

inline OrderType opposite(const OrderType& ot) {
  OrderType r;
  r.reserve(ot.size());
  for (Pol p : ot) r.push_back(flip(p));
  return r;
}

enum class Family { F, G };

inline Family other(Family f) { return f == Family::F ? Family::G : Family::F; }

struct Connective {
  enum class Origin { Base, Residual, LatticeResidual };

  std::string name;
  Family family = Family::F;
  int arity = 0;
  OrderType order_type;
  Origin origin = Origin::Base;
  std::string parent;   // residuals only: the connective this one was derived from
  int coord = 0;        // residuals only: 1-based coordinate
  std::string display;  // printed spelling when identified with an infix residual

  bool is_base() const { return origin == Origin::Base; }
};

// A DLE similarity type plus (after expand()) its residual closure.
// Lattice meet/join/top/bot are AST node kinds, not table entries; the four
// lattice residuals ->, <-, >-, -< are ordinary connectives added by expand().
//
// Immutable once built; shared via shared_ptr across the whole pipeline.
class Signature {
public:
  struct Decl {
    Family family;
    std::string name;
    int arity;
    OrderType order_type;
  };

  // Builds a signature from declarations, adds the lattice core implicitly.
  // Throws SignatureError (DuplicateName, ArityMismatch) on malformed input.
  static std::shared_ptr<const Signature> validate(
      const std::vector<Decl>& decls,
      const std::vector<std::pair<std::string, std::string>>& aliases = {}) {
    Signature sig;
    for (const auto& d : decls) {
      if ((int)d.order_type.size() != d.arity)
        throw SignatureError("ArityMismatch", "connective '" + d.name + "' declares arity " +
                                                  std::to_string(d.arity) + " but order type of length " +
                                                  std::to_string(d.order_type.size()));
      if (is_reserved(d.name))
        throw SignatureError("DuplicateName", "'" + d.name + "' is reserved");
      Connective c;
      c.name = d.name;
      c.family = d.family;
      c.arity = d.arity;
      c.order_type = d.order_type;
      c.origin = Connective::Origin::Base;
      if (!sig.conns_.emplace(c.name, c).second)
        throw SignatureError("DuplicateName", "connective '" + c.name + "' declared twice");
      sig.base_order_.push_back(c.name);
    }
    for (const auto& [from, to] : aliases) {
      if (!sig.conns_.count(to))
        throw SignatureError("UnknownConnective", "alias target '" + to + "' not declared");
      if (sig.conns_.count(from) || sig.aliases_.count(from))
        throw SignatureError("DuplicateName", "alias '" + from + "' clashes with a declared name");
      sig.aliases_.emplace(from, to);
    }
    return std::make_shared<const Signature>(std::move(sig));
  }

  // Residual of c in coordinate i (1-based). Family and order type per the
  // residuation laws; generated names are <name>#<i> for F-connectives and
  // <name>b<i> for G-connectives.
  static Connective residual(const Connective& c, int i) {
    if (c.arity == 0) throw SignatureError("ZeroArity", "constant '" + c.name + "' has no residuals");
    if (i < 1 || i > c.arity)
      throw SignatureError("ArityMismatch", "coordinate " + std::to_string(i) + " out of range for '" + c.name + "'");
    Connective r;
    r.arity = c.arity;
    r.origin = Connective::Origin::Residual;
    r.parent = c.name;
    r.coord = i;
    r.order_type.resize(c.arity);
    Pol ei = c.order_type[i - 1];
    if (c.family == Family::F) {
      r.name = c.name + "#" + std::to_string(i);
      r.family = (ei == Pol::Pos) ? Family::G : Family::F;
      for (int j = 0; j < c.arity; ++j)
        r.order_type[j] = (j == i - 1) ? ei : (ei == Pol::Pos ? flip(c.order_type[j]) : c.order_type[j]);
    } else {
      r.name = c.name + "b" + std::to_string(i);
      r.family = (ei == Pol::Pos) ? Family::F : Family::G;
      for (int j = 0; j < c.arity; ++j)
        r.order_type[j] = (j == i - 1) ? ei : (ei == Pol::Pos ? flip(c.order_type[j]) : c.order_type[j]);
    }
    return r;
  }

  // Adds ->, <-, >-, -< and the first-level residuals of every base
  // connective. Idempotent. Aliased residuals are not duplicated: the alias
  // redirects the generated name to the declared base connective.
  std::shared_ptr<const Signature> expand() const {
    Signature sig = *this;
    if (!sig.expanded_) {
      auto add = [&sig](Connective c) {
        if (sig.aliases_.count(c.name)) {
          // Identified with a declared base connective: check compatibility.
          const Connective& tgt = sig.conns_.at(sig.aliases_.at(c.name));
          if (tgt.arity != c.arity || tgt.family != c.family || tgt.order_type != c.order_type)
            throw SignatureError("AliasMismatch", "alias '" + c.name + "' = '" + tgt.name +
                                                      "' has incompatible arity/family/order type");
          sig.residual_identity_.emplace(c.name, tgt.name);
          sig.identified_form_.emplace(tgt.name, c);
          if (c.origin == Connective::Origin::LatticeResidual)
            sig.conns_.at(tgt.name).display = c.name;
          return;
        }
        if (sig.conns_.count(c.name))
          throw SignatureError("DuplicateName", "generated connective '" + c.name + "' clashes with a declared name");
        sig.conns_.emplace(c.name, c);
      };
      // `coord` marks the principal coordinate (the chi-slot of the
      // residuation rule): residuating a residual there recovers meet/join.
      add(Connective{"->", Family::G, 2, {Pol::Neg, Pol::Pos}, Connective::Origin::LatticeResidual, "/\\", 2});
      add(Connective{"<-", Family::G, 2, {Pol::Pos, Pol::Neg}, Connective::Origin::LatticeResidual, "/\\", 1});
      add(Connective{">-", Family::F, 2, {Pol::Neg, Pol::Pos}, Connective::Origin::LatticeResidual, "\\/", 2});
      add(Connective{"-<", Family::F, 2, {Pol::Pos, Pol::Neg}, Connective::Origin::LatticeResidual, "\\/", 1});
      for (const std::string& name : base_order_) {
        const Connective& c = sig.conns_.at(name);
        for (int i = 1; i <= c.arity; ++i) add(residual(c, i));
      }
      sig.expanded_ = true;
    }
    return std::make_shared<const Signature>(std::move(sig));
  }

  bool expanded() const { return expanded_; }

  // Resolves a name (following aliases and residual identifications) or
  // returns nullptr.
  const Connective* find(const std::string& name) const {
    std::string n = name;
    auto a = aliases_.find(n);
    if (a != aliases_.end()) n = a->second;
    auto ri = residual_identity_.find(n);
    if (ri != residual_identity_.end()) n = ri->second;
    auto it = conns_.find(n);
    return it == conns_.end() ? nullptr : &it->second;
  }

  const Connective& get(const std::string& name) const {
    const Connective* c = find(name);
    if (!c) throw SignatureError("UnknownConnective", "unknown connective '" + name + "'");
    return *c;
  }

  bool in_base(const std::string& name) const {
    const Connective* c = find(name);
    return c && c->is_base();
  }

  // The residual of connective `name` in coordinate i, resolved against this
  // signature (so that identified residuals come back as base connectives).
  const Connective* resolved_residual(const std::string& name, int i) const {
    const Connective& c = get(name);
    Connective r = residual(c, i);
    const Connective* found = find(r.name);
    return found ? found : nullptr;
  }

  const std::vector<std::string>& base_names() const { return base_order_; }

  std::vector<const Connective*> all() const {
    std::vector<const Connective*> v;
    for (auto& [n, c] : conns_) v.push_back(&c);
    return v;
  }

  // --- signature file format ---------------------------------------------
  //   f <name> <arity> (<ot1>,...,<otn>)     # ot in {1,d}
  //   g <name> <arity> (...)
  //   alias <name> = <name>
  // '#' starts a comment. The result is already expanded.
  static std::shared_ptr<const Signature> parse(const std::string& text) {
    std::vector<Decl> decls;
    std::vector<std::pair<std::string, std::string>> aliases;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      // keep '#' inside generated names like dia#1 (only strip comment when
      // preceded by whitespace or at line start)
      while (hash != std::string::npos && hash > 0 && !isspace((unsigned char)line[hash - 1]))
        hash = line.find('#', hash + 1);
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::istringstream ls(line);
      std::string kw;
      if (!(ls >> kw)) continue;
      if (kw == "f" || kw == "g") {
        std::string name;
        int arity;
        std::string ot;
        if (!(ls >> name >> arity >> ot))
          throw SignatureError("ParseError", "malformed declaration on line " + std::to_string(lineno));
        if (ot.size() < 2 || ot.front() != '(' || ot.back() != ')')
          throw SignatureError("ParseError", "malformed order type on line " + std::to_string(lineno));
        OrderType order;
        for (size_t i = 1; i + 1 < ot.size(); ++i) {
          if (ot[i] == ',') continue;
          if (ot[i] == '1')
            order.push_back(Pol::Pos);
          else if (ot[i] == 'd')
            order.push_back(Pol::Neg);
          else
            throw SignatureError("ParseError", std::string("bad order-type symbol '") + ot[i] + "' on line " +
                                                   std::to_string(lineno));
        }
        decls.push_back({kw == "f" ? Family::F : Family::G, name, arity, order});
      } else if (kw == "alias") {
        std::string from, eq, to;
        if (!(ls >> from >> eq >> to) || eq != "=")
          throw SignatureError("ParseError", "malformed alias on line " + std::to_string(lineno));
        aliases.emplace_back(from, to);
      } else {
        throw SignatureError("ParseError", "unknown keyword '" + kw + "' on line " + std::to_string(lineno));
      }
    }
    return validate(decls, aliases)->expand();
  }

  // Inverse of resolution, for printing: the declared name when an alias or
  // identification points at `name`.
  std::string display_name(const std::string& name) const { return name; }

  const std::map<std::string, std::string>& identifications() const { return residual_identity_; }

  // The generated-residual shape a base connective was identified with via
  // an alias, or nullptr. Rule dispatch treats such connectives exactly like
  // the residual they name.
  const Connective* identified_form(const std::string& base_name) const {
    auto it = identified_form_.find(base_name);
    return it == identified_form_.end() ? nullptr : &it->second;
  }

private:
  static bool is_reserved(const std::string& n) {
    static const char* kReserved[] = {"top", "bot", "k", "l", "A", "E", "nom", "conom", "alias", "f", "g"};
    for (auto* r : kReserved)
      if (n == r) return true;
    return n.find('#') != std::string::npos;
  }

  std::map<std::string, Connective> conns_;
  std::map<std::string, std::string> aliases_;            // user alias -> declared name
  std::map<std::string, std::string> residual_identity_;  // generated name -> declared name
  std::map<std::string, Connective> identified_form_;     // declared name -> generated shape
  std::vector<std::string> base_order_;
  bool expanded_ = false;
};

using SigPtr = std::shared_ptr<const Signature>;

}  // namespace dlecorr
