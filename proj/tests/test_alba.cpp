#include <gtest/gtest.h>

#include "dlecorr/alba.hpp"
#include "dlecorr/oracle.hpp"
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

TEST(Preprocess, DistributionAndSplitting) {
  auto s = modal();
  // dia(p \/ q) <= r distributes, then splits into {dia p <= r, dia q <= r};
  // exhaustive monotone/antitone elimination then replaces the one-sided
  // variables of each piece by constants.
  Trace tr;
  auto out = preprocess(parse_ineq("dia(p \\/ q) <= r", s), &tr);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(print(out[0]), "dia(top) <= bot");
  EXPECT_EQ(print(out[1]), "dia(top) <= bot");
  bool saw_split = false;
  for (auto& st : tr.steps())
    if (st.rule == "split" && st.before == "dia(p) \\/ dia(q) <= r") saw_split = true;
  EXPECT_TRUE(saw_split);
}

TEST(Preprocess, UniformElimination) {
  auto s = modal();
  // r occurs only on the greater side: r := bot, then simplification
  auto out = preprocess(parse_ineq("dia(q) <= dia(q) \\/ r", s));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(print(out[0]), "dia(q) <= dia(q)");
}

TEST(Preprocess, DefiniteInputUnchanged) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", s);
  auto out = preprocess(iq);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(ineq_eq(out[0], iq));
}

TEST(FirstApprox, Shape) {
  auto s = modal();
  FreshNames fresh;
  Inequality iq = parse_ineq("box(p) <= box(box(p))", s);
  fresh.reserve(iq);
  QuasiSystem sys = first_approximation(iq, fresh);
  ASSERT_EQ(sys.ante.size(), 2u);
  EXPECT_EQ(print(sys.ante[0]), "#j1 <= box(p)");
  EXPECT_EQ(print(sys.ante[1]), "box(box(p)) <= *n1");
  EXPECT_EQ(print(sys.concl), "#j1 <= *n1");
}

TEST(Residuation, SingleSteps) {
  auto s = modal_imp();
  // j <= box(dia j -> box q)  ~~>  boxb1 j <= dia j -> box q
  Inequality r1 = apply_residuation(parse_ineq("#j <= box(dia(#j) -> box(q))", s), s);
  EXPECT_EQ(print(r1), "boxb1(#j) <= dia(#j) -> box(q)");
  // dia p <= m  ~~>  p <= dia#1 m
  Inequality r2 = apply_residuation(parse_ineq("dia(p) <= *m", s), s);
  EXPECT_EQ(print(r2), "p <= dia#1(*m)");
  // j <= p \/ q via the join residual, second coordinate
  Inequality r3 = apply_residuation(parse_ineq("#j <= p \\/ q", s), s, 2);
  EXPECT_EQ(print(r3), "#j -< p <= q");
  EXPECT_THROW(apply_residuation(parse_ineq("#j <= *m", s), s), RuleError);
}

TEST(Approximation, SingleSteps) {
  auto s = modal();
  FreshNames fresh;
  // j <= dia alpha  ~~>  (j <= dia j1, j1 <= alpha)
  auto [res1, c1] = apply_approximation(parse_ineq("#j <= dia(box(p))", s), s, fresh);
  EXPECT_EQ(print(res1), "#j <= dia(#j1)");
  EXPECT_EQ(print(c1), "#j1 <= box(p)");
  // box alpha <= m  ~~>  (box n1 <= m, alpha <= n1)
  auto [res2, c2] = apply_approximation(parse_ineq("box(dia(p)) <= *m", s), s, fresh);
  EXPECT_EQ(print(res2), "box(*n1) <= *m");
  EXPECT_EQ(print(c2), "dia(p) <= *n1");
  // j <= box alpha is not an approximation redex
  EXPECT_THROW(apply_approximation(parse_ineq("#j <= box(p)", s), s, fresh), RuleError);
}

TEST(LaRa, Definition) {
  auto s = modal_imp();
  // LA(box x) = boxb1 u
  Term la1 = la_ra(parse_term("box(x)", s), LaRaSide::LA, s);
  EXPECT_EQ(print(la1), "boxb1(u)");
  // RA(dia x) = dia#1 u
  Term ra1 = la_ra(parse_term("dia(x)", s), LaRaSide::RA, s);
  EXPECT_EQ(print(ra1), "dia#1(u)");
  // LA(box(dia p -> box x)) = boxb1(dia p /\ boxb1 u) up to AC
  Term la2 = la_ra(parse_term("box(dia(p) -> box(x))", s), LaRaSide::LA, s);
  Inequality got{la2, mk_prop("x")};
  Inequality want{parse_term("boxb1(dia(p) /\\ boxb1(u))", s), mk_prop("x")};
  EXPECT_TRUE(alpha_ac_equal(got, want)) << print(la2);
  // non-PIA input
  EXPECT_THROW(la_ra(parse_term("dia(x)", s), LaRaSide::LA, s), RuleError);
}

TEST(Ackermann, Examples) {
  auto s = modal_imp();
  // {j <= p} & {j <= box(dia p -> box q)} => j <= m, eliminating p
  QuasiSystem sys;
  sys.ante.push_back(parse_ineq("#j <= p", s));
  sys.ante.push_back(parse_ineq("#j <= box(dia(p) -> box(q))", s));
  sys.concl = parse_ineq("#j <= *m", s);
  QuasiSystem out = ackermann_eliminate(sys, "p", Pol::Pos, s);
  ASSERT_EQ(out.ante.size(), 1u);
  EXPECT_EQ(print(out.ante[0]), "#j <= box(dia(#j) -> box(q))");
  // {boxb1(dia j /\ boxb1 j) <= q} & {dia box box q <= m} => j <= m, elim q
  QuasiSystem sys2;
  sys2.ante.push_back(parse_ineq("boxb1(dia(#j) /\\ boxb1(#j)) <= q", s));
  sys2.ante.push_back(parse_ineq("dia(box(box(q))) <= *m", s));
  sys2.concl = parse_ineq("#j <= *m", s);
  QuasiSystem out2 = ackermann_eliminate(sys2, "q", Pol::Pos, s);
  ASSERT_EQ(out2.ante.size(), 1u);
  EXPECT_EQ(print(out2.ante[0]), "dia(box(box(boxb1(dia(#j) /\\ boxb1(#j))))) <= *m");
  // vacuous elimination: variable absent
  QuasiSystem out3 = ackermann_eliminate(out2, "zz", Pol::Pos, s);
  EXPECT_EQ(out3.show(), out2.show());
  // polarity violation: p occurs negatively in a hypothesis
  QuasiSystem bad;
  bad.ante.push_back(parse_ineq("#j <= p", s));
  bad.ante.push_back(parse_ineq("#j <= dia(p)", s));
  bad.concl = parse_ineq("#j <= *m", s);
  EXPECT_THROW(ackermann_eliminate(bad, "p", Pol::Pos, s), RuleError);
}

TEST(MinimalValuations, Transitivity) {
  auto s = modal();
  Inequality iq = parse_ineq("box(p) <= box(box(p))", s);
  auto ws = find_inductive(iq);
  ASSERT_FALSE(ws.empty());
  auto mvs = minimal_valuations(iq, ws.front(), s);
  ASSERT_TRUE(mvs.count("p"));
  // Mv(p) = { n } : the conominal of the bare beta slot
  ASSERT_EQ(mvs["p"].candidates.size(), 1u);
  EXPECT_EQ(mvs["p"].aggregate->kind, TermKind::Conominal);
}

TEST(MinimalValuations, Goranko) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", s);
  auto ws = find_inductive(iq);
  ASSERT_FALSE(ws.empty());
  std::vector<std::string> svars;
  auto mvs = minimal_valuations(iq, ws.front(), s, &svars);
  // Mv(p) = {j_1}, Mv(q) = {boxb1(dia j_1 /\ boxb1 j_2)} up to AC
  ASSERT_EQ(mvs["p"].candidates.size(), 1u);
  EXPECT_EQ(mvs["p"].aggregate->kind, TermKind::Nominal);
  ASSERT_EQ(mvs["q"].candidates.size(), 1u);
  Inequality got{mvs["q"].aggregate, mk_prop("x")};
  Inequality want{parse_term("boxb1(dia(#a) /\\ boxb1(#b))", s), mk_prop("x")};
  EXPECT_TRUE(alpha_ac_equal(got, want)) << print(mvs["q"].aggregate);
}

TEST(RunAlba, GorankoGolden) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", s);
  AlbaRun run = run_alba(iq, s);
  Meta expected = parse_meta("A j:nom. (#j <= dia(box(box(boxb1(dia(#j) /\\ boxb1(#j))))))", s);
  EXPECT_TRUE(alpha_ac_equal(run.output, expected)) << print(run.output);
  // purity
  meta_for_each_ineq(run.output, [](const Inequality& i, bool) {
    EXPECT_TRUE(is_pure(i.lhs));
    EXPECT_TRUE(is_pure(i.rhs));
  });
}

TEST(RunAlba, TransitivityGolden) {
  auto s = modal();
  AlbaRun run = run_alba(parse_ineq("box(p) <= box(box(p))", s), s);
  Meta expected = parse_meta("A j:nom. A n:conom. ((#j <= box(*n)) ==> (#j <= box(box(*n))))", s);
  EXPECT_TRUE(alpha_ac_equal(run.output, expected)) << print(run.output);
}

TEST(RunAlba, BlackDiaBlackBox) {
  auto s = modal();
  Inequality iq = parse_ineq("boxb1(p) <= dia#1(p)", s);
  AlbaRun run = run_alba(iq, s);
  // output is pure; validity agreement checked against the oracle
  meta_for_each_ineq(run.output, [](const Inequality& i, bool) {
    EXPECT_TRUE(is_pure(i.lhs));
    EXPECT_TRUE(is_pure(i.rhs));
  });
  for (const auto& m : battery(s, 77)) {
    EXPECT_EQ(m.valid_meta(run.output), m.valid_inequality(iq)) << m.name;
  }
}

TEST(RunAlba, NotInductiveFails) {
  auto s = modal();
  // box dia p <= dia box p is not inductive for any order type
  EXPECT_THROW(run_alba(parse_ineq("box(dia(p)) <= dia(box(p))", s), s), ClassifyError);
}

// Theorem-style correctness at desk scale: input and output validity agree
// on every battery model.
TEST(RunAlba, OracleAgreement) {
  struct Case {
    SigPtr sig;
    const char* txt;
  };
  std::vector<Case> cases = {
      {modal(), "box(p) <= box(box(p))"},
      {modal(), "dia(box(p)) <= box(dia(p))"},
      {modal(), "p <= box(dia(p))"},
      {modal(), "dia(p) <= p"},
      {modal(), "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))"},
      {modal_imp(), "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))"},
      {modal_imp(), "dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))"},
  };
  for (auto& c : cases) {
    AlbaRun run = run_alba(parse_ineq(c.txt, c.sig), c.sig);
    for (const auto& m : battery(c.sig, 5)) {
      EXPECT_EQ(m.valid_meta(run.output), m.valid_inequality(run.input)) << c.txt << " on " << m.name;
    }
  }
}

// Every trace step whose before/after render as closed meta formulas is
// locally equivalence-preserving on sampled models.
TEST(RunAlba, TraceStepsPreserveEquivalence) {
  auto s = modal_imp();
  Inequality iq = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", s);
  AlbaRun run = run_alba(iq, s);
  auto models = battery(s, 13);
  int checked = 0;
  for (const TraceStep& st : run.trace.steps()) {
    if (st.rule == "first-approximation" || st.rule == "approximation") continue;  // introduce new variables
    Meta before, after;
    try {
      before = forall_close(parse_meta(st.before, s));
      after = forall_close(parse_meta(st.after, s));
    } catch (const ParseError&) {
      ADD_FAILURE() << "unparseable trace step: " << st.before << " / " << st.after;
      continue;
    }
    int used = 0;
    for (const auto& m : models) {
      if (used >= 3) break;
      EXPECT_EQ(m.valid_meta(before), m.valid_meta(after)) << st.rule << ": " << st.before << " ~> " << st.after;
      ++used;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(SlotSystem, TransitivityShape) {
  auto s = modal();
  SlotSystem ss = build_slot_system(parse_ineq("box(p) <= box(box(p))", s), s);
  ASSERT_EQ(ss.constraints.size(), 1u);
  QuasiSystem q{ss.constraints, ss.skeleton_instance};
  Meta expected = parse_meta("A j:nom. A n:conom. ((#j <= box(*n)) ==> (#j <= box(box(*n))))", s);
  EXPECT_TRUE(alpha_ac_equal(q.to_meta(), expected)) << q.show();
}

TEST(SlotSystem, MorecomplexShape) {
  auto s = modal_imp();
  SlotSystem ss =
      build_slot_system(parse_ineq("dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))", s), s);
  QuasiSystem q{ss.constraints, ss.skeleton_instance};
  // prefix in first-occurrence order of the antecedent constraint
  Meta expected = parse_meta(
      "A h:nom. A k:nom. A i:nom. A n:conom. "
      "((dia(boxb1(#h) /\\ (#i /\\ (#k /\\ boxb1(#h)))) <= *n) ==> (dia(#i) /\\ #h <= box(dia(#k) -> *n)))",
      s);
  EXPECT_TRUE(alpha_ac_equal(q.to_meta(), expected)) << q.show();
}

TEST(SlotSystem, RejectsMultiPiece) {
  auto s = modal();
  EXPECT_THROW(build_slot_system(parse_ineq("dia(p) \\/ dia(q) <= dia(p \\/ q)", s), s), ClassifyError);
}

}  // namespace
