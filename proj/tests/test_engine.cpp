#include <doctest.h>

#include "corpus.hpp"
#include "gws/constructions.hpp"
#include "oracles.hpp"

using namespace gws;

TEST_CASE("derive_step follows the derivation relation") {
  Grammar g1 = corpus::g1();  // rules: [if null then a], [if not null then AA]
  SForm start = {FormItem::instance(Sym("A"), Value::integer(2))};
  auto next = derive_step(g1, start, 1, 0);
  REQUIRE(next);
  CHECK(form_to_string(*next) == "A(1) A(1)");
  CHECK_FALSE(derive_step(g1, start, 0, 0));  // null fails on 2

  Grammar g2 = corpus::g2();
  Value bottom = *g2.storage->enc(g2.encoding, InputElement::unit());
  SForm bform = {FormItem::instance(Sym("B"), bottom)};
  // B -> if top=a then b B(pop) is not enabled on "#".
  CHECK_FALSE(derive_step(g2, bform, 3, 0));
  Value a_stack = *g2.storage->instr(Term("push", {Term("a")}), bottom);
  SForm aform = {FormItem::instance(Sym("B"), a_stack)};
  auto stepped = derive_step(g2, aform, 3, 0);
  REQUIRE(stepped);
  CHECK(form_to_string(*stepped) == "b B(#)");
}

TEST_CASE("generate matches the worked languages") {
  Bounds b(300, 16);
  auto g1 = generate(corpus::g1(), b);
  CHECK(oracles::to_set(g1) == oracles::powers_of_two(4));
  CHECK(g1.complete_up_to == 16);

  Bounds b9(300, 9);
  CHECK(oracles::to_set(generate(corpus::g2(), b9)) ==
        oracles::abc_language(3));
  CHECK(oracles::to_set(generate(corpus::g3(), b9)) ==
        oracles::abc_language(3));

  Bounds b10(400, 10);
  CHECK(oracles::to_set(generate(corpus::g7(), b10)) ==
        oracles::squares(3));
}

TEST_CASE("transduce matches the worked transductions") {
  Bounds b(300, 16);
  auto out = transduce(corpus::g1(), InputElement::integer(2), b);
  REQUIRE(out.items.size() == 1);
  CHECK(out.items[0] == corpus::word("aaaa"));

  auto g3 = transduce(corpus::g3(), InputElement::integer(3), b);
  REQUIRE(g3.items.size() == 1);
  CHECK(g3.items[0] == corpus::word("aaabbbccc"));

  auto g4 = transduce(corpus::g4(),
                      InputElement::string(corpus::word("ab")), b);
  REQUIRE(g4.items.size() == 1);
  CHECK(g4.items[0] == corpus::word("ab#b#"));

  // Undefined encoding gives the empty sample.
  auto none = transduce(corpus::g4(),
                        InputElement::string(corpus::word("xz")), b);
  CHECK(none.items.empty());

  // The tree-walking transducer produces the yield from the root.
  TreePtr t = parse_tree_literal("sigma(sigma(a,b),a)");
  auto g5 = transduce(corpus::g5(), InputElement::tree(t), b);
  REQUIRE(g5.items.size() == 1);
  CHECK(g5.items[0] == corpus::word("aba"));
}

TEST_CASE("d-acceptance") {
  Bounds b(300, 16);
  CHECK(d_accept(corpus::g1(), InputElement::integer(3), Bounds(600, 64)) ==
        AcceptOutcome::Accepted);

  Grammar g6 = corpus::g6();
  CHECK(d_accept(g6, InputElement::string(corpus::word("aabbcc")), b) ==
        AcceptOutcome::Accepted);
  CHECK(d_accept(g6, InputElement::string(corpus::word("aabbc")), b) ==
        AcceptOutcome::RejectedWithinBounds);

  // A single looping rule can only exhaust its step budget.
  Grammar loop = corpus::get(R"(
storage s0;
nonterminals A;
terminals x;
initial A;
encoding en;
rules:
  A -> A(id) A(id);
)", "loop");
  CHECK(d_accept(loop, InputElement::unit(), Bounds(50, 8)) ==
        AcceptOutcome::Exhausted);
}

TEST_CASE("generate_trees and yield") {
  Bounds b(300, 13);
  auto trees = generate_trees(corpus::g2rt(), b);
  bool found = false;
  for (const TreePtr& t : trees.tree_items)
    found |= tree_to_string(t) == "a(a(a(sigma(b(b(b(tau))),c(c(c(tau)))))))";
  CHECK(found);

  auto g1rt = generate_trees(corpus::g1rt(), Bounds(200, 8));
  bool binary = false;
  for (const TreePtr& t : g1rt.tree_items)
    binary |= tree_to_string(t) == "+(+(1,1),+(1,1))";
  CHECK(binary);

  Grammar empty = corpus::get(R"(
storage s0;
class rt;
nonterminals A;
terminals a:0;
initial A;
encoding en;
rules:
)", "empty");
  CHECK(generate_trees(empty, Bounds(50, 8)).tree_items.empty());

  CHECK(word_to_string(yield(parse_tree_literal(
            "a(b(c,d), b(eps,c), eps)"))) == "cdc");
  CHECK(yield(parse_tree_literal("eps")).empty());
  CHECK(word_to_string(yield(parse_tree_literal("s(a,b)"))) == "ab");
}

TEST_CASE("accept_final_state simulates deterministic runs") {
  auto conv = convert_acceptance_reg(corpus::anbn(), RegConversion::DeToDf);
  const Grammar& g = conv.grammar;
  CHECK(accept_final_state(g, conv.finals, corpus::word("aabb")));
  CHECK_FALSE(accept_final_state(g, conv.finals, corpus::word("aab")));
  CHECK_FALSE(accept_final_state(g, conv.finals, corpus::word("abab")));
  CHECK_FALSE(accept_final_state(g, conv.finals, corpus::word("axb")));
  for (int n = 0; n <= 6; ++n) {
    auto w = oracles::concat(oracles::repeated("a", n),
                             oracles::repeated("b", n));
    CHECK(accept_final_state(g, conv.finals, w) == (n >= 1));
  }

  // The empty string is accepted iff the initial state is final.
  Grammar triv = corpus::get(R"(
storage s0;
class reg;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> "a" A(id);
)", "triv");
  CHECK(accept_final_state(triv, {Sym("A")}, {}));
  CHECK(accept_final_state(triv, {Sym("A")}, corpus::word("aaa")));
}

TEST_CASE("bounded search properties") {
  // Leftmost and any-position strategies agree on generated languages.
  // (Any-position search needs small inputs: with no emitted terminals the
  // length bound cannot prune, so the form space is exponential.)
  for (auto make : {corpus::g1, corpus::g2, corpus::g3}) {
    Grammar g = make();
    Bounds b(200, 8);
    b.max_input_size = 3;
    CHECK(oracles::to_set(generate(g, b, Strategy::Leftmost)) ==
          oracles::to_set(generate(g, b, Strategy::AnyPosition)));
  }

  // Monotonicity: enlarging bounds never loses items.
  Grammar g2 = corpus::g2();
  auto small = generate(g2, Bounds(200, 6));
  auto large = generate(g2, Bounds(400, 12));
  for (const auto& w : small.items) CHECK(large.contains(w));

  // Deterministic transducers produce at most one output per input.
  for (int n = 0; n <= 4; ++n) {
    CHECK(transduce(corpus::g1(), InputElement::integer(n), Bounds(600, 40))
              .items.size() <= 1);
    CHECK(transduce(corpus::g3(), InputElement::integer(n), Bounds(300, 20))
              .items.size() <= 1);
  }

  // Deterministic REG r-acceptors have prefix-free empty-store languages.
  CHECK(oracles::prefix_free(generate(corpus::anbn(), Bounds(300, 12))));
  CHECK(oracles::prefix_free(generate(corpus::tree_pairs(), Bounds(300, 12))));

  // RT/CF yield: yields of the tree language equal the yield grammar's
  // language.
  Grammar g2rt = corpus::g2rt();
  auto trees = generate_trees(g2rt, Bounds(300, 13));
  std::set<std::vector<Sym>> yields;
  for (const TreePtr& t : trees.tree_items) {
    auto w = yield(t);
    if (w.size() <= 9) yields.insert(w);
  }
  auto direct = generate(yield_grammar(g2rt), Bounds(300, 9));
  CHECK(yields == oracles::to_set(direct));

  // Frontier overflow is a resource error, never a wrong answer.
  Bounds tiny(300, 12);
  tiny.max_forms = 3;
  CHECK_THROWS_AS(generate(corpus::g2(), tiny), Error);
}

TEST_CASE("derivation traces replay step by step") {
  auto traced =
      transduce_with_traces(corpus::g1(), InputElement::integer(2),
                            Bounds(300, 8));
  REQUIRE(traced.size() == 1);
  CHECK(word_to_string(traced[0].first) == "aaaa");
  const DerivationTrace& tr = traced[0].second;
  REQUIRE(tr.steps.size() >= 2);
  CHECK(form_to_string(tr.steps.front().form) == "A(2)");
  CHECK(form_to_string(tr.steps[1].form) == "A(1) A(1)");
  CHECK(form_to_string(tr.steps.back().form) == "a a a a");
}
