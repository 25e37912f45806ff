#include <gtest/gtest.h>

#include "dlecorr/classifier.hpp"
#include "dlecorr/parse.hpp"
#include "dlecorr/print.hpp"

using namespace dlecorr;

namespace {

SigPtr modal() { return Signature::parse("f dia 1 (1)\ng box 1 (1)\n"); }

SigPtr modal_imp() {
  return Signature::parse(
      "f dia 1 (1)\n"
      "g box 1 (1)\n"
      "g imp 2 (d,1)\n"
      "alias -> = imp\n");
}

Eps eps1(std::initializer_list<std::pair<const char*, Pol>> xs) {
  Eps e;
  for (auto& [k, v] : xs) e[k] = v;
  return e;
}

TEST(ClassifyTree, GorankoNodes) {
  auto s = modal_imp();
  Term lhs = parse_term("p /\\ box(dia(p) -> box(q))", s);
  SignedTree st = classify_tree(lhs, Pol::Pos);
  // root +/\ is a Delta-adjoint and SLR (and SRA)
  EXPECT_TRUE(st.roles & kDelta);
  EXPECT_TRUE(st.roles & kSLR);
  // +box is SRA
  const SignedTree& box = st.kids[1];
  EXPECT_EQ(box.term->conn->name, "box");
  EXPECT_EQ(box.roles, kSRA);
  // +-> is SRR
  const SignedTree& imp = box.kids[0];
  EXPECT_EQ(imp.roles, kSRR);
  // negative side: -dia is SRA, -box is SLR
  Term rhs = parse_term("dia(box(box(q)))", s);
  SignedTree rt = classify_tree(rhs, Pol::Neg);
  EXPECT_EQ(rt.roles, kSRA);
  EXPECT_EQ(rt.kids[0].roles, kSLR);
  // single leaf
  SignedTree leaf = classify_tree(parse_term("p", s), Pol::Pos);
  EXPECT_EQ(leaf.roles, 0);
  EXPECT_TRUE(leaf.kids.empty());
}

TEST(GoodBranch, Examples) {
  auto s = modal_imp();
  // +p (left conjunct) in +(p /\ box(dia p -> box q)): path [+/\] is good
  SignedTree st = classify_tree(parse_term("p /\\ box(dia(p) -> box(q))", s), Pol::Pos);
  EXPECT_TRUE(is_good_branch(st, {0}));
  // -q in -dia box box q: the boxes are SLR (Skeleton) and the -dia root is
  // SRA (PIA), so Skeleton sits below PIA: not good. (The branch is also
  // never critical in the inductive witness for the surrounding inequality.)
  SignedTree rt = classify_tree(parse_term("dia(box(box(q)))", s), Pol::Neg);
  EXPECT_FALSE(is_good_branch(rt, {0, 0, 0}));
  // -q in -box box dia q: PIA (-dia) below Skeleton (-boxes): good
  SignedTree rt2 = classify_tree(parse_term("box(box(dia(q)))", s), Pol::Neg);
  EXPECT_TRUE(is_good_branch(rt2, {0, 0, 0}));
  // +p in + dia box dia p: Skeleton below PIA -> not good
  SignedTree bad = classify_tree(parse_term("dia(box(dia(p)))", s), Pol::Pos);
  EXPECT_FALSE(is_good_branch(bad, {0, 0, 0}));
}

TEST(FindInductive, Goranko) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", s);
  auto ws = find_inductive(iq);
  ASSERT_FALSE(ws.empty());
  // the unique witness: eps(p,q) = (1,1) with p < q
  EXPECT_EQ(ws.size(), 1u);
  EXPECT_EQ(ws[0].eps.at("p"), Pol::Pos);
  EXPECT_EQ(ws[0].eps.at("q"), Pol::Pos);
  EXPECT_TRUE(ws[0].omega_lt("p", "q"));
  EXPECT_FALSE(ws[0].omega_lt("q", "p"));
  EXPECT_TRUE(ws[0].definite);
  EXPECT_FALSE(ws[0].vss);
  EXPECT_FALSE(ws[0].sahlqvist);
  // classification: inductive, not Sahlqvist for any order type
  auto cls = classify_inequality(iq);
  EXPECT_EQ(cls.label, IneqLabel::Inductive);
}

TEST(FindInductive, TransitivityBothWitnesses) {
  auto s = modal();
  Inequality iq = parse_ineq("box(p) <= box(box(p))", s);
  auto ws = find_inductive(iq);
  ASSERT_EQ(ws.size(), 2u);
  // eps(p)=1 with empty Omega is among the witnesses
  bool has_pos = false;
  for (auto& w : ws)
    if (w.eps.at("p") == Pol::Pos && w.omega.empty()) has_pos = true;
  EXPECT_TRUE(has_pos);
  // the vss witness (eps(p)=d, beta a bare variable) is preferred
  EXPECT_EQ(ws[0].eps.at("p"), Pol::Neg);
  EXPECT_TRUE(ws[0].vss);
  EXPECT_EQ(classify_inequality(iq).label, IneqLabel::VerySimpleSahlqvist);
}

TEST(FindInductive, Confluence) {
  auto s = modal();
  Inequality iq = parse_ineq("dia(box(p)) <= box(dia(p))", s);
  auto ws = find_inductive(iq);
  ASSERT_FALSE(ws.empty());
  bool has1 = false;
  for (auto& w : ws)
    if (w.eps.at("p") == Pol::Pos) has1 = true;
  EXPECT_TRUE(has1);
  EXPECT_NE(classify_inequality(iq).label, IneqLabel::NotInductive);
}

TEST(FindInductive, Morecomplex) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))", s);
  auto ws = find_inductive(iq);
  ASSERT_FALSE(ws.empty());
  // first witness is the all-1 one with p < r and q < r
  const Witness& w = ws[0];
  EXPECT_EQ(w.eps.at("p"), Pol::Pos);
  EXPECT_EQ(w.eps.at("q"), Pol::Pos);
  EXPECT_EQ(w.eps.at("r"), Pol::Pos);
  EXPECT_TRUE(w.omega_lt("p", "r"));
  EXPECT_TRUE(w.omega_lt("q", "r"));
  EXPECT_TRUE(w.definite);
}

TEST(Classify, VerySimpleSahlqvistExamples) {
  auto s = modal();
  // black-dia p <= black-box p (in L0*)
  Inequality iq = parse_ineq("boxb1(p) <= dia#1(p)", s);
  EXPECT_EQ(classify_inequality(iq).label, IneqLabel::VerySimpleSahlqvist);
  // second-goranko output
  Inequality iq2 = parse_ineq("dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))", s);
  auto cls2 = classify_inequality(iq2);
  EXPECT_EQ(cls2.label, IneqLabel::VerySimpleSahlqvist);
  bool has_mixed = false;
  for (auto& w : cls2.witnesses)
    if (w.vss && w.eps.at("p") == Pol::Pos && w.eps.at("q") == Pol::Neg) has_mixed = true;
  EXPECT_TRUE(has_mixed);
  // goranko4 output
  Inequality iq3 = parse_ineq("p1 /\\ p2 <= box(box(boxb1(dia(p1) /\\ boxb1(p2))))", s);
  EXPECT_EQ(classify_inequality(iq3).label, IneqLabel::VerySimpleSahlqvist);
}

TEST(Classify, LabelMonotoneOnCorpus) {
  auto s = modal_imp();
  for (const char* txt : {
           "box(p) <= box(box(p))",
           "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))",
           "dia(box(p)) <= box(dia(p))",
           "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))",
           "p <= box(dia(p))",
           "dia(p) <= p",
       }) {
    auto cls = classify_inequality(parse_ineq(txt, s));
    for (auto& w : cls.witnesses) {
      if (w.vss) EXPECT_TRUE(w.sahlqvist) << txt;
    }
    if (cls.label == IneqLabel::VerySimpleSahlqvist) {
      bool any = false;
      for (auto& w : cls.witnesses) any |= w.vss;
      EXPECT_TRUE(any);
    }
  }
}

// independent re-verification of returned witnesses straight from the
// definition (checker kept separate from the search)
TEST(FindInductive, SoundnessRecheck) {
  auto s = modal_imp();
  for (const char* txt : {
           "box(p) <= box(box(p))",
           "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))",
           "dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))",
       }) {
    Inequality iq = parse_ineq(txt, s);
    for (const Witness& w : find_inductive(iq)) {
      SignedTree lt = classify_tree(iq.lhs, Pol::Pos);
      SignedTree rt = classify_tree(iq.rhs, Pol::Neg);
      for (const Occurrence& o : occurrences(iq)) {
        if (!is_critical(o, w.eps)) continue;
        EXPECT_TRUE(is_good_branch(o.on_lhs ? lt : rt, o.path)) << txt;
        auto ups = nodes_above(o.on_lhs ? lt : rt, o.path);
        int h = -1;
        for (int i = (int)ups.size() - 1; i >= 0; --i)
          if (!skeleton_capable(ups[i]->roles)) {
            h = i;
            break;
          }
        for (int i = 0; i <= h; ++i) {
          if (!(ups[i]->roles & kSRR)) continue;
          int through = o.path[o.path.size() - 1 - i];
          for (size_t c = 0; c < ups[i]->kids.size(); ++c) {
            if ((int)c == through) continue;
            std::vector<Occurrence> so;
            std::vector<int> p;
            collect_occurrences(ups[i]->kids[c].term, ups[i]->kids[c].sign, o.on_lhs, p, so);
            for (auto& sv : so) {
              EXPECT_FALSE(is_critical(sv, w.eps)) << txt;
              EXPECT_TRUE(w.omega_lt(sv.var, o.var)) << txt;
            }
          }
        }
      }
      for (auto& [a, b] : w.omega) EXPECT_FALSE(a == b);
    }
  }
}

// uniform variables are never made critical against their uniform sign
TEST(FindInductive, UniformVariables) {
  auto s = modal();
  Inequality iq = parse_ineq("dia(q) <= dia(q) \\/ r", s);
  for (const Witness& w : find_inductive(iq)) {
    for (const Occurrence& o : occurrences(iq))
      if (o.var == "r" && is_critical(o, w.eps)) EXPECT_EQ(o.sign, w.eps.at("r"));
  }
}

TEST(Splittable, Examples) {
  auto s = modal_imp();
  // boxb1(dia p /\ boxb1 q): branch to q is splittable in modal+imp
  Term t = parse_term("boxb1(dia(p) /\\ boxb1(q))", s);
  SignedTree st = classify_tree(t, Pol::Neg);
  EXPECT_TRUE(is_splittable(st, {0, 1, 0}, *s));
  // the p-branch: through /\ coordinate 1 needs <- which is not in base
  EXPECT_FALSE(is_splittable(st, {0, 0, 0}, *s));
  // leaf directly under base connectives only: splittable with empty P1
  SignedTree lt = classify_tree(parse_term("box(dia(p))", s), Pol::Neg);
  EXPECT_TRUE(is_splittable(lt, {0, 0}, *s));
  // without imp in the base, the q-branch through /\ is not splittable
  auto s0 = modal();
  Term t0 = parse_term("boxb1(dia(p) /\\ boxb1(q))", s0);
  SignedTree st0 = classify_tree(t0, Pol::Neg);
  EXPECT_FALSE(is_splittable(st0, {0, 1, 0}, *s0));
}

TEST(Unpackable, Examples) {
  auto s = modal_imp();
  Eps eps = eps1({{"p1", Pol::Pos}, {"p2", Pol::Pos}});
  Omega omega{{"p1", "p2"}};
  // the goranko side subtree -boxb1(dia p1 /\ boxb1 p2)
  Term t = parse_term("boxb1(dia(p1) /\\ boxb1(p2))", s);
  SignedTree st = classify_tree(t, Pol::Neg);
  EXPECT_TRUE(is_unpackable(st, eps, omega, *s));
  // with the reverse order the path to the maximal p1 goes through the /\
  // coordinate 1 (residual <-, not in base): not unpackable
  Omega rev{{"p2", "p1"}};
  EXPECT_FALSE(is_unpackable(st, eps, rev, *s));
  // eps^d failure: a critical leaf inside
  SignedTree pos = classify_tree(t, Pol::Pos);
  EXPECT_FALSE(is_unpackable(pos, eps, omega, *s));
  // bare variable or constant
  EXPECT_TRUE(is_unpackable(classify_tree(parse_term("p1", s), Pol::Neg), eps, omega, *s));
  EXPECT_TRUE(is_unpackable(classify_tree(parse_term("top", s), Pol::Pos), eps, omega, *s));
}

TEST(Crypto, GorankoOutputIsCrypto) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p1 /\\ p2 <= box(box(boxb1(dia(p1) /\\ boxb1(p2))))", s);
  auto cw = is_crypto_inductive(iq, s);
  ASSERT_TRUE(cw.has_value());
  EXPECT_EQ(cw->eps.at("p1"), Pol::Pos);
  EXPECT_EQ(cw->eps.at("p2"), Pol::Pos);
  EXPECT_EQ(cw->tops.size(), 1u);  // one boxb1-rooted subtree (two branches share it)
  EXPECT_TRUE(cw->omega.count({"p1", "p2"}));
}

TEST(Crypto, BlackDiaBlackBoxIsNot) {
  auto s = modal();
  Inequality iq = parse_ineq("boxb1(p) <= dia#1(p)", s);
  EXPECT_EQ(classify_inequality(iq).label, IneqLabel::VerySimpleSahlqvist);
  EXPECT_FALSE(is_crypto_inductive(iq, s).has_value());
}

TEST(Crypto, PureBaseIsVacuouslyCrypto) {
  auto s = modal();
  Inequality iq = parse_ineq("box(p) <= box(box(p))", s);
  auto cw = is_crypto_inductive(iq, s);
  ASSERT_TRUE(cw.has_value());
  EXPECT_TRUE(cw->tops.empty());
}

TEST(Crypto, ImpliesVss) {
  auto s = modal_imp();
  for (const char* txt : {
           "p1 /\\ p2 <= box(box(boxb1(dia(p1) /\\ boxb1(p2))))",
           "box(p) <= box(box(p))",
           "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))",
       }) {
    Inequality iq = parse_ineq(txt, s);
    if (is_crypto_inductive(iq, s))
      EXPECT_EQ(classify_inequality(iq).label, IneqLabel::VerySimpleSahlqvist) << txt;
  }
}

}  // namespace
