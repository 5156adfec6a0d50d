#include <doctest.h>

#include "corpus.hpp"
#include "gws/constructions.hpp"
#include "gws/print.hpp"
#include "oracles.hpp"

using namespace gws;

namespace {

std::set<std::vector<Sym>> lang(const Grammar& g, Bounds b) {
  return oracles::to_set(generate(g, b));
}

}  // namespace

TEST_CASE("to_pushdown_automaton simulates left-most derivations") {
  // Terminal-only grammar: the automaton accepts exactly {a}.
  Grammar one = corpus::get(R"(
storage s0;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> "a";
)", "one");
  Grammar pda = to_pushdown_automaton(one);
  CHECK(pda.class_tag == ClassTag::REG);
  CHECK(lang(pda, Bounds(50, 4)) ==
        std::set<std::vector<Sym>>{corpus::word("a")});

  // Determinism is preserved by the simulation.
  Grammar g1pda = to_pushdown_automaton(corpus::g1());
  CHECK(is_deterministic(g1pda).yes());

  // Bounded language equality for the corpus grammars.
  struct Case {
    Grammar g;
    Bounds b;
  };
  std::vector<Case> cases;
  cases.push_back({corpus::g1(), Bounds(400, 8)});
  cases.push_back({corpus::g2(), Bounds(400, 9)});
  {
    Bounds b4(400, 10);
    b4.max_input_size = 3;
    cases.push_back({corpus::g4(), b4});
  }
  for (auto& [g, b] : cases) {
    Grammar pd = to_pushdown_automaton(g);
    CHECK(lang(g, b) == lang(pd, b));
  }
}

TEST_CASE("the triple construction inverts the simulation") {
  // A one-push-one-pop automaton over Pd(S0) and its grammar.
  Grammar small = corpus::get(R"(
storage pd(s0);
class reg;
nonterminals S, T, U;
terminals x, y, z;
initial S;
encoding (g, en);
rules:
  S -> if top=g then "x" T(push(d, id));
  T -> if top=d then "y" U(pop);
  U -> if top=g then "z";
)", "small_pda");
  Grammar back = to_grammar(small);
  CHECK(back.class_tag == ClassTag::CFExt);
  CHECK(lang(back, Bounds(60, 6)) == lang(small, Bounds(60, 6)));

  // Pruning is a pure optimization.
  Grammar unpruned = to_grammar(small, false);
  CHECK(lang(unpruned, Bounds(60, 6)) == lang(small, Bounds(60, 6)));

  // A push rule over |N| = 2 states yields 2 * |N u {omega}| = 6 triple
  // rules in the unpruned grammar.
  Grammar push2 = corpus::get(R"(
storage pd(s0);
class reg;
nonterminals S, T;
terminals x;
initial S;
encoding (g, en);
rules:
  S -> if top=g then "x" T(push(d, id));
)", "push2");
  Grammar expanded = to_grammar(push2, false);
  CHECK(expanded.rules.size() == 6);

  // Automaton round trips preserve the bounded language.
  for (auto make : {corpus::g1, corpus::g2}) {
    Grammar g = make();
    Bounds b(600, 8);
    Grammar pda = to_pushdown_automaton(g);
    Grammar again = to_grammar(pda);
    CHECK(lang(g, b) == lang(again, b));
  }
}

TEST_CASE("collapse_ext combines id-tail chains") {
  Grammar chain2 = corpus::get(R"(
storage s0+id;
class cf_ext;
nonterminals A, B;
terminals a, b;
initial A;
encoding en;
rules:
  A -> "a" B(id);
  B -> "b";
)", "chain2");
  Grammar collapsed = collapse_ext(chain2);
  CHECK(collapsed.class_tag == ClassTag::CF);
  REQUIRE(collapsed.rules.size() == 2);  // combined rule plus B's own
  bool found_ab = false;
  for (const Rule& r : collapsed.rules)
    found_ab |= r.lhs == Sym("A") && r.rhs.size() == 2 &&
                r.rhs[0].sym == Sym("a") && r.rhs[1].sym == Sym("b");
  CHECK(found_ab);

  // A self-loop A -> A(id) contributes no rule.
  Grammar loop = corpus::get(R"(
storage s0+id;
class cf_ext;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> A(id);
  A -> "a";
)", "self_loop");
  Grammar lc = collapse_ext(loop);
  CHECK(lc.rules.size() == 1);
  CHECK(lang(lc, Bounds(20, 4)) ==
        std::set<std::vector<Sym>>{corpus::word("a")});

  // Collapsing the lifted G1 recovers its transduction.
  Grammar g1x = normalize_cfext(corpus::g1());
  Grammar g1c = collapse_ext(g1x);
  CHECK(is_deterministic(g1c).yes());
  for (int n = 0; n <= 5; ++n) {
    auto expect =
        transduce(corpus::g1(), InputElement::integer(n), Bounds(900, 40));
    auto got = transduce(g1c, InputElement::integer(n), Bounds(900, 40));
    CHECK(expect.items == got.items);
  }
}

TEST_CASE("determinize_via_lookahead on the tree counterexample") {
  Grammar t = corpus::tree_pairs();
  Grammar det = determinize_via_lookahead(t, 64);
  CHECK(is_deterministic(det).yes());

  auto run = [&](const char* tree) {
    return transduce(det, InputElement::tree(parse_tree_literal(tree)),
                     Bounds(200, 8))
        .items;
  };
  CHECK(run("sigma(a,a)") ==
        std::vector<std::vector<Sym>>{corpus::word("a")});
  CHECK(run("sigma(b,b)") ==
        std::vector<std::vector<Sym>>{corpus::word("b")});
  CHECK(run("sigma(a,b)").empty());
  CHECK(run("sigma(b,a)").empty());

  // Bounded transduction equality against the original on all small trees.
  RankedAlphabet sigma;
  sigma.add(Sym("sigma"), 2);
  sigma.add(Sym("a"), 0);
  sigma.add(Sym("b"), 0);
  for (const TreePtr& in : gws::detail::enumerate_trees(sigma, 5)) {
    auto expect = transduce(t, InputElement::tree(in), Bounds(200, 8));
    auto got = transduce(det, InputElement::tree(in), Bounds(200, 8));
    CHECK(expect.items == got.items);
  }

  // An automaton without push rules needs no acc predicates.
  Grammar no_push = corpus::get(R"(
storage pd(tree);
class reg;
nonterminals A, B;
terminals x;
initial A;
encoding (g, {s:2, a:0});
rules:
  A -> if test(root=a) and top=g then "x" B(stay);
  B -> if top=g then ;
)", "no_push");
  Grammar det2 = determinize_via_lookahead(no_push, 64);
  REQUIRE(det2.storage->lookahead);
  CHECK(det2.storage->lookahead->registry.empty());
}

TEST_CASE("determinize_pf for noetherian storage") {
  // Two overlapping rules with different domains: 2 predicates, 4 sign
  // vectors, at most 4 rules per nonterminal.
  Grammar overlap = corpus::get(R"(
storage tree;
class cf;
nonterminals A;
terminals x, y;
initial A;
encoding {s:2, t:1, a:0};
rules:
  A -> if root=s then "x";
  A -> if root=t or root=s then "x";
)", "overlap");
  // T is a partial function: both rules output x.
  Grammar det = determinize_pf(overlap, 64);
  CHECK(is_deterministic(det).yes());
  size_t for_a = 0;
  for (const Rule& r : det.rules)
    if (r.lhs == Sym("A")) ++for_a;
  CHECK(for_a <= 4);

  // Nondeterministic-but-functional transducer: T preserved on small trees.
  RankedAlphabet sigma;
  sigma.add(Sym("s"), 2);
  sigma.add(Sym("t"), 1);
  sigma.add(Sym("a"), 0);
  for (const TreePtr& in : gws::detail::enumerate_trees(sigma, 5)) {
    auto expect = transduce(overlap, InputElement::tree(in), Bounds(100, 8));
    auto got = transduce(det, InputElement::tree(in), Bounds(100, 8));
    CHECK(expect.items == got.items);
  }

  // Non-noetherian storage is rejected.
  CHECK_THROWS_AS(determinize_pf(corpus::g2(), 64), Error);
}

TEST_CASE("REG acceptance-mode conversions") {
  Grammar anbn = corpus::anbn();
  Bounds b(300, 12);
  auto ls = generate(anbn, b);

  // DeToDf: final-state acceptance reproduces the empty-store language.
  auto df = convert_acceptance_reg(anbn, RegConversion::DeToDf);
  for (const auto& w : ls.items)
    CHECK(accept_final_state(df.grammar, df.finals, w));
  CHECK_FALSE(accept_final_state(df.grammar, df.finals, corpus::word("aab")));

  // DfToReg: a plain REG acceptor for the final-state language.
  auto reg = convert_acceptance_reg(df.grammar, RegConversion::DfToReg,
                                    df.finals);
  CHECK(oracles::to_set(generate(reg.grammar, b)) == oracles::to_set(ls));

  // DfPrefixFreeToDe inverts DeToDf on the bounded language.
  auto de = convert_acceptance_reg(df.grammar, RegConversion::DfPrefixFreeToDe,
                                   df.finals, b);
  CHECK(oracles::to_set(generate(de.grammar, b)) == oracles::to_set(ls));

  // A non-prefix-free final-state language is rejected.
  Grammar astar = corpus::get(R"(
storage s0;
class reg;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> "a" A(id);
)", "astar");
  CHECK_THROWS_AS(convert_acceptance_reg(
                      astar, RegConversion::DfPrefixFreeToDe, {Sym("A")}, b),
                  Error);
}

TEST_CASE("mark and unmark") {
  CHECK(tree_to_string(mark_tree(parse_tree_literal("a"))) == "a(#)");
  CHECK(tree_to_string(mark_tree(parse_tree_literal("s(a,b)"))) ==
        "s(a(#),b(#))");
  RankedAlphabet delta;
  delta.add(Sym("s"), 2);
  delta.add(Sym("a"), 0);
  delta.add(Sym("b"), 0);
  RankedAlphabet dm = marked_alphabet(delta);
  CHECK(dm.rank(Sym("#")) == 0);
  CHECK(dm.rank(Sym("a")) == 1);
  CHECK(dm.rank(Sym("s")) == 2);
  for (const TreePtr& t : gws::detail::enumerate_trees(delta, 7)) {
    TreePtr m = mark_tree(t);
    CHECK(tree_well_ranked(m, dm));
    CHECK(tree_equal(unmark_tree(m), t));
  }
  CHECK_THROWS_AS(unmark_tree(parse_tree_literal("s(a,b)")), Error);
}

TEST_CASE("RT acceptance-mode conversions") {
  // A two-rule RT(S0) acceptor of {s(a,b)}.
  Grammar rt = corpus::get(R"(
storage s0;
class rt;
nonterminals A, B, C;
terminals s:2, a:0, b:0;
initial A;
encoding en;
rules:
  A -> s(B(id), C(id));
  B -> a;
  C -> b;
)", "sab");
  RankedAlphabet delta;
  delta.add(Sym("s"), 2);
  delta.add(Sym("a"), 0);
  delta.add(Sym("b"), 0);

  Grammar df = convert_acceptance_rt(rt, RtConversion::DeToDf, delta);
  auto marked = generate_trees(df, Bounds(100, 10));
  REQUIRE(marked.tree_items.size() == 1);
  CHECK(tree_to_string(marked.tree_items[0]) == "s(a(#),b(#))");

  // DfToRt brings the marked acceptor back over delta.
  Grammar back = convert_acceptance_rt(df, RtConversion::DfToRt, delta);
  auto trees = generate_trees(back, Bounds(100, 8));
  REQUIRE(trees.tree_items.size() == 1);
  CHECK(tree_to_string(trees.tree_items[0]) == "s(a,b)");

  // DfToDeLA guards leaf reads with acc tests instead.
  Grammar la = convert_acceptance_rt(df, RtConversion::DfToDeLA, delta);
  auto trees2 = generate_trees(la, Bounds(100, 8));
  REQUIRE(trees2.tree_items.size() == 1);
  CHECK(tree_to_string(trees2.tree_items[0]) == "s(a,b)");
}

TEST_CASE("derivation_tree_acceptor recognizes rule-labeled trees") {
  // A single-rule grammar has the one derivation tree r1(a).
  Grammar one = corpus::get(R"(
storage s0;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> "a";
)", "one");
  Grammar dta = derivation_tree_acceptor(one);
  auto trees = generate_trees(dta, Bounds(60, 6));
  REQUIRE(trees.tree_items.size() == 1);
  CHECK(tree_to_string(trees.tree_items[0]) == "r1(a)");

  // A lambda rule derives r1(eps) with empty yield.
  Grammar lam = corpus::get(R"(
storage s0;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> ;
)", "lam");
  auto ltrees = generate_trees(derivation_tree_acceptor(lam), Bounds(60, 6));
  REQUIRE(ltrees.tree_items.size() == 1);
  CHECK(tree_to_string(ltrees.tree_items[0]) == "r1(eps)");
  CHECK(yield(ltrees.tree_items[0]).empty());

  // Yields of G2's derivation trees give back L(G2), bounded.
  Grammar g2dta = derivation_tree_acceptor(corpus::g2());
  CHECK(is_racceptor_deterministic(g2dta));
  auto dtrees = generate_trees(g2dta, Bounds(600, 24));
  std::set<std::vector<Sym>> yields;
  for (const TreePtr& t : dtrees.tree_items) {
    auto w = yield(t);
    if (w.size() <= 9) yields.insert(w);
  }
  CHECK(yields == oracles::abc_language(3));
}

TEST_CASE("yield_grammar") {
  // Rank >= 1 symbols contribute nothing to a yield, so the yields of
  // G2rt's trees are exactly the two tau leaves of each fork.
  Grammar yg = yield_grammar(corpus::g2rt());
  CHECK(yg.class_tag == ClassTag::CF);
  std::set<std::vector<Sym>> tautau = {
      {Sym("tau"), Sym("tau")}};
  CHECK(oracles::to_set(generate(yg, Bounds(300, 9))) == tautau);

  // A right-hand side s(a, B(f), eps) flattens to "a" B(f).
  Grammar flat = corpus::get(R"(
storage pushdown;
class rt;
nonterminals A, B;
terminals s:3, a:0, eps:0;
initial A;
encoding "#";
rules:
  A -> s(a, B(stay), eps);
  B -> eps;
)", "flat");
  Grammar fy = yield_grammar(flat);
  REQUIRE(fy.rules[0].rhs.size() == 2);
  CHECK(fy.rules[0].rhs[0].sym == Sym("a"));
  CHECK(fy.rules[0].rhs[1].is_call());
  CHECK_FALSE(fy.is_terminal(Sym("eps")));

  // yield_grammar(G1rt) is G1 up to renaming its leaf symbol.
  Grammar g1y = yield_grammar(corpus::g1rt());
  auto renamed = generate(g1y, Bounds(400, 8));
  std::set<std::vector<Sym>> as;
  for (const auto& w : renamed.items)
    as.insert(oracles::repeated("a", static_cast<int>(w.size())));
  CHECK(as == oracles::to_set(generate(corpus::g1(), Bounds(400, 8))));
}

TEST_CASE("path_acceptor and tree_acceptor_from_paths") {
  RankedAlphabet delta;
  delta.add(Sym("c"), 3);
  delta.add(Sym("a"), 0);
  delta.add(Sym("b"), 0);
  delta.add(Sym("eps"), 0);

  // Example (1): from the DFA of the path language to the tree acceptor.
  Grammar dfa = corpus::paths_ex1();
  Grammar rt = tree_acceptor_from_paths(dfa, {Sym("F")}, delta);
  CHECK(is_racceptor_deterministic(rt));
  auto marked = generate_trees(rt, Bounds(400, 23));
  auto unmarked = unmark_language(marked);

  DeltaSpec spec;
  spec.delta = delta;
  spec.grammar = dfa;
  spec.finals = {Sym("F")};
  spec.size_bound = 13;
  spec.source_bounds = Bounds(300, 16);
  auto glued = tree_delta(spec);
  std::set<std::string> got;
  for (const TreePtr& t : unmarked.tree_items)
    if (tree_size(t) <= 13) got.insert(tree_to_string(t));
  CHECK(got == oracles::tree_strings(glued));
  CHECK(got.count("c(a,eps,b)") == 1);
  CHECK(got.count("c(a,c(a,eps,b),b)") == 1);

  // The path acceptor of that tree acceptor recovers the tree language.
  Grammar pa = path_acceptor(rt, delta);
  CHECK(is_racceptor_deterministic(pa));
  auto path_lang = generate(pa, Bounds(300, 16));
  DeltaSpec spec2;
  spec2.delta = delta;
  spec2.strings = path_lang.items;
  spec2.size_bound = 13;
  auto glued2 = tree_delta(spec2);
  CHECK(oracles::tree_strings(glued2) == oracles::tree_strings(glued));

  // A rank-2 rule splits into two path rules.
  Grammar two = corpus::get(R"(
storage s0;
class rt;
nonterminals A, B;
terminals s:2, a:0;
initial A;
encoding en;
rules:
  A -> s(B(id), B(id));
  B -> a;
)", "two");
  RankedAlphabet d2;
  d2.add(Sym("s"), 2);
  d2.add(Sym("a"), 0);
  Grammar two_df = convert_acceptance_rt(two, RtConversion::DeToDf, d2);
  Grammar two_paths = path_acceptor(two_df, d2);
  int split = 0;
  for (const Rule& r : two_paths.rules)
    for (const RhsItem& it : r.rhs)
      if (it.is_terminal() && (it.sym == Sym("s.1") || it.sym == Sym("s.2")))
        ++split;
  CHECK(split == 2);

  // A rank-k symbol absent from any path gets no rule.
  RankedAlphabet padded = delta;
  padded.add(Sym("d"), 2);
  Grammar rt2 = tree_acceptor_from_paths(dfa, {Sym("F")}, padded);
  for (const Rule& r : rt2.rules)
    for (const RhsItem& it : r.rhs) CHECK(it.sym != Sym("d"));
}

TEST_CASE("constructed grammars serialize round-trip stable") {
  // Including a look-ahead storage, whose registry embeds whole grammars.
  std::vector<Grammar> built;
  built.push_back(to_pushdown_automaton(corpus::g2()));
  built.push_back(to_grammar(built.back()));
  built.push_back(determinize_via_lookahead(corpus::tree_pairs(), 64));
  built.push_back(derivation_tree_acceptor(corpus::g2()));
  RankedAlphabet delta;
  delta.add(Sym("c"), 3);
  delta.add(Sym("a"), 0);
  delta.add(Sym("b"), 0);
  delta.add(Sym("eps"), 0);
  built.push_back(
      tree_acceptor_from_paths(corpus::paths_ex1(), {Sym("F")}, delta));
  for (const Grammar& g : built) {
    Grammar again = parse_grammar(print_grammar(g), "again");
    CHECK(grammar_equal(g, again));
  }

  // The reparsed determinized transducer still runs.
  Grammar det = parse_grammar(
      print_grammar(determinize_via_lookahead(corpus::tree_pairs(), 64)),
      "det_again");
  auto out = transduce(det, InputElement::tree(parse_tree_literal("sigma(b,b)")),
                       Bounds(200, 8));
  CHECK(out.items == std::vector<std::vector<Sym>>{corpus::word("b")});
}

TEST_CASE("closure: DfRT tree languages are determined by their paths") {
  // Gluing the paths of the bounded tree language of a deterministic RT
  // r-acceptor gives the bounded tree language back.
  RankedAlphabet delta;
  delta.add(Sym("c"), 3);
  delta.add(Sym("a"), 0);
  delta.add(Sym("b"), 0);
  delta.add(Sym("eps"), 0);
  Grammar rt = tree_acceptor_from_paths(corpus::paths_ex1(), {Sym("F")}, delta);
  auto unmarked = unmark_language(generate_trees(rt, Bounds(400, 23)));
  std::vector<std::vector<Sym>> all_paths;
  std::set<std::string> bounded;
  for (const TreePtr& t : unmarked.tree_items)
    if (tree_size(t) <= 13) {
      bounded.insert(tree_to_string(t));
      for (auto& p : paths(t)) all_paths.push_back(p);
    }
  DeltaSpec spec;
  spec.delta = delta;
  spec.strings = all_paths;
  spec.size_bound = 13;
  auto glued = tree_delta(spec);
  CHECK(oracles::tree_strings(glued) == bounded);
}
