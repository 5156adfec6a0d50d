#ifndef GWS_CONSTRUCTIONS_HPP
#define GWS_CONSTRUCTIONS_HPP

#include "gws/lookahead.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Grammar <-> pushdown-automaton constructions, acceptance-mode conversions,
// and the derivation-tree / path constructions relating string, tree, and
// path languages.
// ---------------------------------------------------------------------------

// The end marker of the triple construction.
struct TripleNonterminal {
  Sym from;
  Sym symbol;
  Sym to;  // a nonterminal or the end marker
};

namespace cons_detail {

inline Sym end_marker() { return Sym("omega"); }

inline Sym triple_name(Sym a, Sym g, Sym b) {
  return Sym("<" + a.str() + "," + g.str() + "," + b.str() + ">");
}

// Wraps every predicate leaf p of b into test(p).
inline Test wrap_in_test(const Test& t) {
  switch (t.kind) {
    case Test::Kind::True:
    case Test::Kind::False:
      return t;
    case Test::Kind::Pred:
      return Test::leaf(Term(detail::sym_test(), {t.pred}));
    default: {
      Test out = t;
      for (Test& k : out.kids) k = wrap_in_test(k);
      return out;
    }
  }
}

// Strips test(p) wrappers from leaves (inverse of wrap_in_test on the
// test() fragment; other leaves are left alone).
inline Test strip_test(const Test& t) {
  switch (t.kind) {
    case Test::Kind::True:
    case Test::Kind::False:
      return t;
    case Test::Kind::Pred:
      if (t.pred.head == detail::sym_test() && t.pred.args.size() == 1)
        return Test::leaf(t.pred.args[0]);
      return t;
    default: {
      Test out = t;
      for (Test& k : out.kids) k = strip_test(k);
      return out;
    }
  }
}

// Shape of a pushdown-like storage: the pd(S)/pdp(S) combinators carry a
// base storage and two-argument push; the builtin Pushdown and Counter are
// the plain one-argument form, treated as having the trivial base.
struct PdShape {
  bool is_pd = false;
  bool structured = false;  // push(g,f) with an S-instruction argument
  StoragePtr base;          // the S of Pd(S); trivial for the plain form
};

inline PdShape pd_shape(const StoragePtr& s) {
  PdShape out;
  if (!s) return out;
  if (s->pd_base) {
    out.is_pd = true;
    out.structured = true;
    out.base = s->pd_base;
    return out;
  }
  const std::string& h = s->expr.head.str();
  if (h == "pushdown" || h == "counter") {
    out.is_pd = true;
    out.structured = false;
    out.base = trivial_storage();
  }
  return out;
}

inline bool rule_is_final(const Rule& r) {
  for (const RhsItem& it : r.rhs)
    if (it.is_call()) return false;
  return true;
}

// The single trailing call of a right-linear rule, or nullptr.
inline const RhsItem* trailing_call(const Rule& r) {
  if (r.rhs.empty() || !r.rhs.back().is_call()) return nullptr;
  return &r.rhs.back();
}

inline std::vector<Sym> rule_terminals(const Rule& r) {
  std::vector<Sym> w;
  for (const RhsItem& it : r.rhs)
    if (it.is_terminal()) w.push_back(it.sym);
  return w;
}

}  // namespace cons_detail

// ---------------------------------------------------------------------------
// Grammar to automaton: a CF_ext(S) transducer in normal form is
// simulated by a single-state REG(Pd(S)) transducer over its left-most
// derivations, keeping each nonterminal's S-configuration in its pushdown
// cell.
// ---------------------------------------------------------------------------

inline Grammar to_pushdown_automaton(const Grammar& g_in) {
  using namespace cons_detail;
  Grammar g = cfext_normal_form(g_in) && g_in.class_tag == ClassTag::CFExt
                  ? g_in
                  : normalize_cfext(g_in);
  StoragePtr base = g.storage->identity_base;
  if (!base)
    fail(ErrorKind::Precondition,
         g.name + ": to_pushdown_automaton expects a cf_ext grammar over an "
                  "identity-extended storage");
  Grammar out;
  out.name = g.name + "_pda";
  out.storage = pushdown_of(base);
  out.class_tag = ClassTag::REG;
  out.terminals = g.terminals;
  Sym state("$");
  out.nonterminals = {state};
  out.initial = state;
  out.encoding = Term(Sym(), {Term(g.initial), g.encoding});

  static const Sym kStay("stay"), kPush("push"), kPop("pop");
  for (const Rule& r : g.rules) {
    bool tail = !r.rhs.empty() && r.rhs.back().kind == RhsItem::Kind::TailCall;
    Test guard = Test::conj(
        {wrap_in_test(r.test),
         Test::leaf(Term(detail::sym_top(), {Term(r.lhs)}))});
    Rule nr;
    nr.lhs = state;
    if (tail && r.rhs.size() >= 1 &&
        (r.rhs.size() == 1 || r.rhs[0].is_terminal())) {
      // A -> if b then w B(id)  ~~>  $ -> if test(b) and top=A then w $(stay(B))
      nr.test = guard;
      for (size_t i = 0; i + 1 < r.rhs.size(); ++i)
        nr.rhs.push_back(r.rhs[i]);
      nr.rhs.push_back(RhsItem::call(
          state, {Term(kStay, {Term(r.rhs.back().sym)})}));
      out.rules.push_back(std::move(nr));
    } else if (tail) {
      // A -> if b then C(f) B(id)  ~~>  $ -> ... $(stay(B); push(C,f))
      const RhsItem& call = r.rhs[0];
      nr.test = guard;
      nr.rhs.push_back(RhsItem::call(
          state, {Term(kStay, {Term(r.rhs.back().sym)}),
                  Term(kPush, {Term(call.sym), call.chain[0]})}));
      out.rules.push_back(std::move(nr));
    } else {
      // A -> if b then w  ~~>  pop unless at the bottom cell.
      Rule pop_rule;
      pop_rule.lhs = state;
      pop_rule.test = Test::conj(
          {guard, Test::negate(Test::leaf(Term(detail::sym_bottom())))});
      pop_rule.rhs = r.rhs;
      pop_rule.rhs.push_back(RhsItem::call(state, {Term(kPop)}));
      out.rules.push_back(std::move(pop_rule));
      nr.test = Test::conj({guard, Test::leaf(Term(detail::sym_bottom()))});
      nr.rhs = r.rhs;
      out.rules.push_back(std::move(nr));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The test normal form for grammars over Pushdown, Counter, Pd(S), Pdp(S):
// every rule's test becomes a single top=g conjunct (times test(b) for
// Pd(S)), with the bottom predicate eliminated by marking the pushdown
// symbol of the bottom cell.
// ---------------------------------------------------------------------------

namespace cons_detail {

inline Sym marked(Sym g) { return Sym(g.str() + "^"); }

// Pushdown symbols a grammar ever puts on its pushdown.
inline std::vector<Sym> pushdown_symbols(const Grammar& g, bool structured) {
  std::vector<Sym> out;
  auto add = [&](Sym s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  // Encoding symbol(s).
  if (structured) {
    add(g.encoding.args[0].head);
  } else if (g.encoding.head == detail::sym_unary()) {
    add(g.encoding.args[0].head);
    add(g.encoding.args[1].head);
  } else {
    add(g.encoding.head);
  }
  for (const Rule& r : g.rules)
    for (const RhsItem& it : r.rhs)
      for (const Term& f : it.chain) {
        if (f.head == detail::sym_push() || (f.head == detail::sym_stay() &&
                                             !f.args.empty()))
          add(f.args[0].head);
      }
  return out;
}

}  // namespace cons_detail

inline Grammar cfp_test_normal_form(const Grammar& g_in) {
  using namespace cons_detail;
  PdShape shape = pd_shape(g_in.storage);
  if (!shape.is_pd)
    fail(ErrorKind::Precondition,
         g_in.name + ": test normal form needs a pushdown-like storage");
  Grammar g = desugar(g_in);
  std::vector<Sym> gamma = pushdown_symbols(g, shape.structured);

  bool uses_bottom = false;
  for (const Rule& r : g.rules) {
    std::vector<Term> preds;
    r.test.collect_preds(preds);
    for (const Term& p : preds)
      if (p.head == detail::sym_bottom()) uses_bottom = true;
  }

  Grammar out = g;
  out.rules.clear();
  if (uses_bottom) {
    // Bottom marking: the bottom cell carries g^; pushes add unmarked cells.
    if (shape.structured)
      out.encoding = Term(Sym(), {Term(marked(g.encoding.args[0].head)),
                                  g.encoding.args[1]});
    else if (g.encoding.head == detail::sym_unary())
      out.encoding = Term(detail::sym_unary(),
                          {g.encoding.args[0], Term(marked(g.encoding.args[1].head))});
    else
      out.encoding = Term(marked(g.encoding.head));
  }

  for (size_t ri = 0; ri < g.rules.size(); ++ri) {
    const Rule& r = g.rules[ri];
    std::vector<Conjunct> dnf = to_dnf(r.test);  // desugared: one conjunct
    for (const Conjunct& conj : dnf) {
      std::vector<Sym> top_pos, top_neg;
      int bottom_status = 0;  // +1 required, -1 forbidden, 0 free, 2 contradiction
      Conjunct rest;
      for (const Literal& l : conj) {
        if (l.pred.head == detail::sym_top()) {
          (l.positive ? top_pos : top_neg).push_back(l.pred.args[0].head);
        } else if (l.pred.head == detail::sym_bottom()) {
          int want = l.positive ? 1 : -1;
          if (bottom_status == 0 || bottom_status == want)
            bottom_status = want;
          else
            bottom_status = 2;
        } else {
          rest.push_back(l);
        }
      }
      if (bottom_status == 2) continue;  // bottom and not bottom
      if (top_pos.size() > 1) continue;  // mutually exclusive tops
      std::vector<bool> marks;
      if (!uses_bottom)
        marks = {false};
      else if (bottom_status == 1)
        marks = {true};
      else if (bottom_status == -1)
        marks = {false};
      else
        marks = {false, true};
      for (Sym gs : gamma) {
        if (!top_pos.empty() && top_pos[0] != gs) continue;
        if (std::find(top_neg.begin(), top_neg.end(), gs) != top_neg.end())
          continue;
        for (bool mk : marks) {
          Sym top_sym = (uses_bottom && mk) ? marked(gs) : gs;
          Rule nr;
          nr.lhs = r.lhs;
          nr.rhs = r.rhs;
          bool dropped = false;
          if (uses_bottom) {
            // Rewrite the instructions knowing the current top's markedness.
            for (RhsItem& it : nr.rhs) {
              if (it.kind != RhsItem::Kind::Call) continue;
              bool cur_marked = mk;
              bool known = true;
              for (Term& f : it.chain) {
                if (f.head == detail::sym_push()) {
                  cur_marked = false;
                  known = true;
                } else if (f.head == detail::sym_pop()) {
                  if (known && cur_marked) dropped = true;  // pop at bottom
                  known = false;
                } else if (f.head == detail::sym_stay() && !f.args.empty()) {
                  if (!known)
                    fail(ErrorKind::Precondition,
                         g.name + ": cannot eliminate bottom through "
                                  "stay(g) after pop (rule " +
                             std::to_string(ri) + ")");
                  if (cur_marked) f.args[0] = Term(marked(f.args[0].head));
                }
              }
            }
          }
          if (dropped) continue;
          std::vector<Test> parts;
          for (const Literal& l : rest) {
            Test leaf = Test::leaf(l.pred);
            parts.push_back(l.positive ? leaf : Test::negate(std::move(leaf)));
          }
          parts.push_back(Test::leaf(Term(detail::sym_top(), {Term(top_sym)})));
          nr.test = Test::conj(std::move(parts));
          out.rules.push_back(std::move(nr));
        }
      }
    }
  }
  // Collapse duplicates introduced by instantiation.
  std::vector<Rule> dedup;
  for (Rule& r : out.rules) {
    bool seen = false;
    for (const Rule& d : dedup)
      if (d == r) seen = true;
    if (!seen) dedup.push_back(std::move(r));
  }
  out.rules = std::move(dedup);
  return out;
}

// ---------------------------------------------------------------------------
// Automaton to grammar: the triple construction. Preprocessing
// applies the three assumptions: final rules fire only on a one-cell
// pushdown, no bottom predicate, and tests of the form test(b) and top=g.
// ---------------------------------------------------------------------------

namespace cons_detail {

// Final rules are deferred until the pushdown holds one cell, via a
// bottom-guarded pop-down loop through a fresh halt state.
inline Grammar one_cell_finals(const Grammar& g_in) {
  Grammar g = desugar(g_in);
  Sym halt = fresh_sym(g, "H");
  bool needed = false;
  Grammar out = g;
  out.rules.clear();
  Term bottom(detail::sym_bottom());
  for (const Rule& r : g.rules) {
    if (!rule_is_final(r)) {
      out.rules.push_back(r);
      continue;
    }
    needed = true;
    Rule at_bottom = r;
    at_bottom.test = Test::conj({r.test, Test::leaf(bottom)});
    out.rules.push_back(std::move(at_bottom));
    Rule above = r;
    above.test = Test::conj({r.test, Test::negate(Test::leaf(bottom))});
    above.rhs.push_back(RhsItem::call(halt, {Term(detail::sym_pop())}));
    out.rules.push_back(std::move(above));
  }
  if (needed) {
    out.add_nonterminal(halt);
    Rule down;
    down.lhs = halt;
    down.test = Test::negate(Test::leaf(bottom));
    down.rhs.push_back(RhsItem::call(halt, {Term(detail::sym_pop())}));
    out.rules.push_back(std::move(down));
    Rule stop;
    stop.lhs = halt;
    stop.test = Test::leaf(bottom);
    out.rules.push_back(std::move(stop));
  }
  return out;
}

struct TripleResult {
  Grammar grammar;
  // Push-case rules: output rule index with its return-nonterminal choice.
  struct PushRule {
    size_t rule_index;
    TripleNonterminal callee;  // <B,delta,E>
    Term instruction;          // f
  };
  std::vector<PushRule> push_rules;
};

inline TripleResult to_grammar_core(const Grammar& g_in, bool prune) {
  PdShape shape = pd_shape(g_in.storage);
  if (!shape.is_pd)
    fail(ErrorKind::Precondition,
         g_in.name + ": to_grammar expects a grammar over Pd(S)");
  if (!reg_shaped(g_in))
    fail(ErrorKind::Precondition,
         g_in.name + ": to_grammar expects a right-linear grammar");

  Grammar g = cfp_test_normal_form(one_cell_finals(g_in));
  std::vector<Sym> gamma = pushdown_symbols(g, shape.structured);
  Sym omega = end_marker();
  while (g.is_nonterminal(omega)) omega = Sym(omega.str() + "'");

  TripleResult res;
  Grammar& out = res.grammar;
  out.name = g_in.name + "_cfext";
  out.storage = with_identity(shape.base);
  out.class_tag = ClassTag::CFExt;
  out.terminals = g.terminals;
  out.encoding = g.encoding.args[1];  // e of (g0, e)
  Sym gamma0 = g.encoding.args[0].head;
  out.initial = triple_name(g.initial, gamma0, omega);

  std::vector<Sym> rets = g.nonterminals;  // C ranges over N and omega
  rets.push_back(omega);
  for (Sym a : g.nonterminals)
    for (Sym gs : gamma)
      for (Sym c : rets) out.add_nonterminal(triple_name(a, gs, c));

  // Splits the normalized test into (b over S, top symbol).
  auto split_test = [&](const Rule& r) -> std::pair<Test, Sym> {
    std::vector<Conjunct> dnf = to_dnf(r.test);
    Sym top;
    Conjunct rest;
    for (const Literal& l : dnf.front()) {
      if (l.pred.head == detail::sym_top() && l.positive)
        top = l.pred.args[0].head;
      else
        rest.push_back(l);
    }
    return {strip_test(conjunct_to_test(rest)), top};
  };

  for (const Rule& r : g.rules) {
    auto [b, gs] = split_test(r);
    std::vector<Sym> w = rule_terminals(r);
    auto terminal_items = [&]() {
      std::vector<RhsItem> items;
      for (Sym a : w) items.push_back(RhsItem::terminal(a));
      return items;
    };
    const RhsItem* call = trailing_call(r);
    if (!call) {
      // Final rule (fires at one cell): <A,g,omega> -> if b then w.
      Rule nr;
      nr.lhs = triple_name(r.lhs, gs, omega);
      nr.test = b;
      nr.rhs = terminal_items();
      out.rules.push_back(std::move(nr));
      continue;
    }
    const Term& f = call->chain[0];
    if (f.head == detail::sym_pop()) {
      Rule nr;
      nr.lhs = triple_name(r.lhs, gs, call->sym);
      nr.test = b;
      nr.rhs = terminal_items();
      out.rules.push_back(std::move(nr));
    } else if (f.head == detail::sym_push()) {
      Sym delta = f.args[0].head;
      Term inner = shape.structured ? f.args[1] : Term(detail::sym_id());
      for (Sym c : rets)
        for (Sym e : g.nonterminals) {
          Rule nr;
          nr.lhs = triple_name(r.lhs, gs, c);
          nr.test = b;
          nr.rhs = terminal_items();
          nr.rhs.push_back(
              RhsItem::call(triple_name(call->sym, delta, e), {inner}));
          nr.rhs.push_back(RhsItem::tail_call(triple_name(e, gs, c)));
          res.push_rules.push_back(
              {out.rules.size(), {call->sym, delta, e}, inner});
          out.rules.push_back(std::move(nr));
        }
    } else if (f.head == detail::sym_stay() && !f.args.empty()) {
      Sym delta = f.args[0].head;
      for (Sym c : rets) {
        Rule nr;
        nr.lhs = triple_name(r.lhs, gs, c);
        nr.test = b;
        nr.rhs = terminal_items();
        nr.rhs.push_back(RhsItem::tail_call(triple_name(call->sym, delta, c)));
        out.rules.push_back(std::move(nr));
      }
    } else if (f.head == detail::sym_stay()) {
      for (Sym c : rets) {
        Rule nr;
        nr.lhs = triple_name(r.lhs, gs, c);
        nr.test = b;
        nr.rhs = terminal_items();
        nr.rhs.push_back(RhsItem::tail_call(triple_name(call->sym, gs, c)));
        out.rules.push_back(std::move(nr));
      }
    } else {
      fail(ErrorKind::Precondition,
           g.name + ": unexpected pushdown instruction " + term_to_string(f));
    }
  }
  if (prune) {
    // Useless-triple pruning: only triples that are both productive (some
    // rule closes every call) and reachable from the initial one are kept.
    // Tests are ignored, so this is a pure overapproximation-preserving
    // optimization.
    std::set<uint32_t> productive;
    bool grew = true;
    while (grew) {
      grew = false;
      for (const Rule& r : out.rules) {
        if (productive.count(r.lhs.id())) continue;
        bool all = true;
        for (const RhsItem& it : r.rhs)
          if (it.is_call() && !productive.count(it.sym.id())) all = false;
        if (all) {
          productive.insert(r.lhs.id());
          grew = true;
        }
      }
    }
    auto rule_alive = [&](const Rule& r) {
      if (!productive.count(r.lhs.id())) return false;
      for (const RhsItem& it : r.rhs)
        if (it.is_call() && !productive.count(it.sym.id())) return false;
      return true;
    };
    std::set<uint32_t> reach;
    reach.insert(out.initial.id());
    grew = true;
    while (grew) {
      grew = false;
      for (const Rule& r : out.rules) {
        if (!rule_alive(r) || !reach.count(r.lhs.id())) continue;
        for (const RhsItem& it : r.rhs)
          if (it.is_call() && reach.insert(it.sym.id()).second) grew = true;
      }
    }
    std::vector<Rule> kept;
    std::vector<TripleResult::PushRule> kept_push;
    for (size_t i = 0; i < out.rules.size(); ++i) {
      if (!rule_alive(out.rules[i]) || !reach.count(out.rules[i].lhs.id()))
        continue;
      for (const auto& pr : res.push_rules)
        if (pr.rule_index == i)
          kept_push.push_back({kept.size(), pr.callee, pr.instruction});
      kept.push_back(out.rules[i]);
    }
    out.rules = std::move(kept);
    res.push_rules = std::move(kept_push);
    std::vector<Sym> nts;
    for (Sym n : out.nonterminals)
      if (reach.count(n.id()) && productive.count(n.id()))
        nts.push_back(n);
    out.nonterminals = std::move(nts);
  }
  return res;
}

}  // namespace cons_detail

// REG(Pd(S)) to CF_ext(S) by the triple construction.
inline Grammar to_grammar(const Grammar& g, bool prune = true) {
  return cons_detail::to_grammar_core(g, prune).grammar;
}

// ---------------------------------------------------------------------------
// Collapsing id-tails (sound when T(G) is a partial function): every chain
// of distinct nonterminals linked by id-tail rules and closed by a tail-free
// rule contributes one combined rule.
// ---------------------------------------------------------------------------

inline Grammar collapse_ext(const Grammar& g_in) {
  if (g_in.class_tag != ClassTag::CFExt)
    fail(ErrorKind::Precondition,
         g_in.name + ": collapse_ext expects a cf_ext grammar");
  const Grammar& g = g_in;
  Grammar out = g;
  out.class_tag = ClassTag::CF;
  if (g.storage->identity_base) out.storage = g.storage->identity_base;
  out.rules.clear();

  struct ChainFrame {
    std::vector<Test> tests;
    std::vector<RhsItem> body;
    std::vector<Sym> visited;
  };
  std::function<void(Sym, ChainFrame&)> follow = [&](Sym a, ChainFrame& fr) {
    for (const Rule& r : g.rules) {
      if (r.lhs != a) continue;
      bool tail =
          !r.rhs.empty() && r.rhs.back().kind == RhsItem::Kind::TailCall;
      fr.tests.push_back(r.test);
      size_t mark = fr.body.size();
      for (size_t i = 0; i + (tail ? 1 : 0) < r.rhs.size(); ++i)
        fr.body.push_back(r.rhs[i]);
      if (!tail) {
        Rule nr;
        nr.lhs = fr.visited.front();
        nr.test = Test::conj(fr.tests);
        nr.rhs = fr.body;
        out.rules.push_back(std::move(nr));
      } else {
        Sym next = r.rhs.back().sym;
        if (std::find(fr.visited.begin(), fr.visited.end(), next) ==
            fr.visited.end()) {
          fr.visited.push_back(next);
          follow(next, fr);
          fr.visited.pop_back();
        }
      }
      fr.tests.pop_back();
      fr.body.erase(fr.body.begin() + mark, fr.body.end());
    }
  };
  for (Sym a : g.nonterminals) {
    ChainFrame fr;
    fr.visited = {a};
    follow(a, fr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// A deterministic REG(Pd(S)) transducer becomes a deterministic
// CF(S_LA) transducer. The only nondeterminism of the triple construction is
// the choice of the return nonterminal E of a push rule; an acc look-ahead
// test on the auxiliary grammar G'(<B,d,E>(f)) picks the unique successful
// one. The acc tests for fixed (B,d,f) are declared mutually exclusive.
// ---------------------------------------------------------------------------

inline Grammar determinize_via_lookahead(const Grammar& g, int step_bound) {
  using namespace cons_detail;
  DetResult det = is_deterministic(g);
  if (!det.yes())
    fail(ErrorKind::Precondition,
         g.name + ": determinize_via_lookahead needs a deterministic input");
  PdShape shape = pd_shape(g.storage);
  if (!shape.is_pd)
    fail(ErrorKind::Precondition,
         g.name + ": determinize_via_lookahead expects Pd(S) storage");

  TripleResult core = to_grammar_core(g, true);
  Grammar& tg = core.grammar;

  // Auxiliary look-ahead grammars, keyed canonically by (B, delta, E, f).
  std::vector<LookaheadEntry> registry;
  auto register_for =
      [&](const TripleResult::PushRule& pr) -> Sym {
    Sym callee = triple_name(pr.callee.from, pr.callee.symbol, pr.callee.to);
    Sym name(
        "<acc:" + callee.str().substr(1, callee.str().size() - 2) + ":" +
        term_to_string(pr.instruction) + ">");
    for (const LookaheadEntry& e : registry)
      if (e.name == name) return name;
    Grammar aux = tg;
    aux.name = tg.name + "_la" + std::to_string(registry.size());
    Sym init = fresh_sym(aux, "la");
    aux.add_nonterminal(init);
    aux.initial = init;
    Rule r;
    r.lhs = init;
    r.rhs.push_back(RhsItem::call(callee, {pr.instruction}));
    aux.rules.insert(aux.rules.begin(), std::move(r));
    registry.push_back({name, std::move(aux)});
    return name;
  };

  std::vector<std::pair<Sym, Sym>> exclusive;
  std::map<size_t, Sym> acc_of_rule;
  std::map<std::string, std::vector<Sym>> group;  // by (B, delta, f)
  for (const auto& pr : core.push_rules) {
    Sym name = register_for(pr);
    acc_of_rule[pr.rule_index] = name;
    std::string key = pr.callee.from.str() + "\x01" +
                      pr.callee.symbol.str() + "\x01" +
                      term_to_string(pr.instruction);
    auto& v = group[key];
    if (std::find(v.begin(), v.end(), name) == v.end()) v.push_back(name);
  }
  for (auto& [key, names] : group)
    for (size_t i = 0; i < names.size(); ++i)
      for (size_t j = i + 1; j < names.size(); ++j)
        exclusive.emplace_back(names[i], names[j]);

  StoragePtr la = with_lookahead(shape.base, std::move(registry), step_bound,
                                 std::move(exclusive));
  Grammar out = tg;
  out.name = g.name + "_det";
  out.storage = with_identity(la);
  for (auto& [idx, name] : acc_of_rule)
    out.rules[idx].test =
        Test::conj({out.rules[idx].test, Test::leaf(acc_pred(name))});
  return collapse_ext(out);
}

// ---------------------------------------------------------------------------
// For noetherian S, a CF(S) transducer defining a partial
// function becomes a deterministic CF(S_LA) transducer. For each
// nonterminal, full sign vectors over the acc(G(r_i)) predicates select the
// first applicable successful rule.
// ---------------------------------------------------------------------------

inline Grammar determinize_pf(const Grammar& g_in, int step_bound) {
  if (!g_in.storage->noetherian)
    fail(ErrorKind::Precondition,
         g_in.name + ": determinize_pf needs a noetherian storage type");
  Grammar g = desugar(g_in);

  std::vector<LookaheadEntry> registry;
  std::vector<Sym> acc_names(g.rules.size());
  for (size_t i = 0; i < g.rules.size(); ++i) {
    Sym name("<acc:r" + std::to_string(i) + ">");
    Grammar aux = g;
    aux.name = g.name + "_r" + std::to_string(i);
    Sym init = fresh_sym(aux, "la");
    aux.add_nonterminal(init);
    aux.initial = init;
    Rule r;
    r.lhs = init;
    r.test = g.rules[i].test;
    r.rhs = g.rules[i].rhs;
    aux.rules.insert(aux.rules.begin(), std::move(r));
    registry.push_back({name, std::move(aux)});
    acc_names[i] = name;
  }
  StoragePtr la = with_lookahead(g.storage, std::move(registry), step_bound);

  Grammar out = g;
  out.name = g_in.name + "_det";
  out.storage = la;
  out.rules.clear();
  for (Sym a : g.nonterminals) {
    std::vector<size_t> ris;
    for (size_t i = 0; i < g.rules.size(); ++i)
      if (g.rules[i].lhs == a) ris.push_back(i);
    size_t k = ris.size();
    if (k == 0) continue;
    if (k > 16)
      fail(ErrorKind::Resource,
           g.name + ": too many rules per nonterminal for sign vectors");
    for (size_t mask = 1; mask < (size_t{1} << k); ++mask) {
      std::vector<Test> parts;
      size_t first = k;
      for (size_t j = 0; j < k; ++j) {
        Test leaf = Test::leaf(acc_pred(acc_names[ris[j]]));
        if (mask & (size_t{1} << j)) {
          if (first == k) first = j;
          parts.push_back(std::move(leaf));
        } else {
          parts.push_back(Test::negate(std::move(leaf)));
        }
      }
      Rule nr;
      nr.lhs = a;
      nr.test = Test::conj(std::move(parts));
      nr.rhs = g.rules[ris[first]].rhs;
      out.rules.push_back(std::move(nr));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Acceptance-mode conversions for REG r-acceptors (empty store vs final
// state), and the mark transformation with the RT conversions.
// ---------------------------------------------------------------------------

enum class RegConversion { DeToDf, DfToReg, DfPrefixFreeToDe };

struct RegConversionResult {
  Grammar grammar;
  std::vector<Sym> finals;
};

inline RegConversionResult convert_acceptance_reg(
    const Grammar& g, RegConversion mode,
    const std::vector<Sym>& finals = {}, const Bounds& check_bounds = Bounds());

enum class RtConversion { DeToDf, DfToRt, DfToDeLA };

inline TreePtr mark_tree(const TreePtr& t) {
  static const Sym hash("#");
  if (t->children.empty())
    return make_tree(t->label, {make_tree(hash)});
  std::vector<TreePtr> kids;
  for (const TreePtr& c : t->children) kids.push_back(mark_tree(c));
  return make_tree(t->label, std::move(kids));
}

// Defined only on trees in the image of mark.
inline TreePtr unmark_tree(const TreePtr& t) {
  static const Sym hash("#");
  if (t->label == hash)
    fail(ErrorKind::Precondition, "unmark: bare # node");
  if (t->children.size() == 1 && t->children[0]->children.empty() &&
      t->children[0]->label == hash)
    return make_tree(t->label);
  if (t->children.empty())
    fail(ErrorKind::Precondition,
         "unmark: leaf " + t->label.str() + " not of the form s(#)");
  std::vector<TreePtr> kids;
  for (const TreePtr& c : t->children) kids.push_back(unmark_tree(c));
  return make_tree(t->label, std::move(kids));
}

inline LanguageSample mark_language(const LanguageSample& s) {
  LanguageSample out = s;
  out.tree_items.clear();
  out.items.clear();
  for (const TreePtr& t : s.tree_items) out.tree_items.push_back(mark_tree(t));
  out.sort_items();
  return out;
}

inline LanguageSample unmark_language(const LanguageSample& s) {
  LanguageSample out = s;
  out.tree_items.clear();
  out.items.clear();
  for (const TreePtr& t : s.tree_items)
    out.tree_items.push_back(unmark_tree(t));
  out.sort_items();
  return out;
}

// The marked alphabet D#: # at rank 0, former rank-0 and rank-1 symbols at
// rank 1, higher ranks unchanged.
inline RankedAlphabet marked_alphabet(const RankedAlphabet& delta) {
  RankedAlphabet out;
  out.add(Sym("#"), 0);
  for (auto& [s, r] : delta.entries) out.add(s, r == 0 ? 1 : r);
  return out;
}

inline RegConversionResult convert_acceptance_reg(
    const Grammar& g, RegConversion mode, const std::vector<Sym>& finals,
    const Bounds& check_bounds) {
  RegConversionResult res;
  switch (mode) {
    case RegConversion::DeToDf: {
      if (!is_racceptor_deterministic(g))
        fail(ErrorKind::Precondition,
             g.name + ": DeToDf needs a deterministic REG r-acceptor");
      Grammar out = g;
      Sym q = fresh_sym(out, "Q");
      out.add_nonterminal(q);
      Term id = *g.storage->identity;
      for (Rule& r : out.rules) {
        if (cons_detail::rule_is_final(r))
          r.rhs.push_back(RhsItem::call(q, {id}));
      }
      out.finals = {q};
      res.finals = {q};
      res.grammar = std::move(out);
      return res;
    }
    case RegConversion::DfToReg: {
      // All halting rules realize empty-store acceptance and are removed;
      // final states gain A -> lambda.
      Grammar out = g;
      out.rules.clear();
      for (const Rule& r : g.rules)
        if (!cons_detail::rule_is_final(r)) out.rules.push_back(r);
      for (Sym a : finals) {
        Rule nr;
        nr.lhs = a;
        out.rules.push_back(std::move(nr));
      }
      out.finals.clear();
      res.grammar = std::move(out);
      return res;
    }
    case RegConversion::DfPrefixFreeToDe: {
      LanguageSample s = generate_final_state(g, finals, check_bounds);
      for (size_t i = 0; i < s.items.size(); ++i)
        for (size_t j = 0; j < s.items.size(); ++j) {
          if (i == j) continue;
          const auto &a = s.items[i], &b = s.items[j];
          if (a.size() < b.size() &&
              std::equal(a.begin(), a.end(), b.begin()))
            fail(ErrorKind::Precondition,
                 g.name + ": language is not prefix-free within bounds (" +
                     word_to_string(a) + " < " + word_to_string(b) + ")");
        }
      Grammar out = g;
      out.rules.clear();
      for (const Rule& r : g.rules) {
        bool fin = std::find(finals.begin(), finals.end(), r.lhs) !=
                   finals.end();
        if (!fin) out.rules.push_back(r);
      }
      for (Sym a : finals) {
        Rule nr;
        nr.lhs = a;
        out.rules.push_back(std::move(nr));
      }
      out.finals.clear();
      res.grammar = std::move(out);
      return res;
    }
  }
  fail(ErrorKind::Precondition, "unknown REG conversion");
}

// RT acceptance conversions; `delta` is the unmarked ranked alphabet (needed
// to tell former rank-0 symbols apart inside D#).
inline Grammar convert_acceptance_rt(const Grammar& g, RtConversion mode,
                                     const RankedAlphabet& delta,
                                     int step_bound = 64) {
  using namespace cons_detail;
  switch (mode) {
    case RtConversion::DeToDf: {
      if (!is_racceptor_deterministic(g))
        fail(ErrorKind::Precondition,
             g.name + ": DeToDf needs a deterministic RT r-acceptor");
      Grammar out = g;
      out.terminals = marked_alphabet(g.terminals);
      Sym q = fresh_sym(out, "Q");
      out.add_nonterminal(q);
      Term id = *g.storage->identity;
      for (Rule& r : out.rules) {
        if (r.rhs.size() == 1 && r.rhs[0].is_terminal() &&
            g.terminals.rank(r.rhs[0].sym) == 0)
          r.rhs.push_back(RhsItem::call(q, {id}));
      }
      Rule hash_rule;
      hash_rule.lhs = q;
      hash_rule.rhs.push_back(RhsItem::terminal(Sym("#")));
      out.rules.push_back(std::move(hash_rule));
      return out;
    }
    case RtConversion::DfToRt: {
      // Unmark: new nonterminals B_s remember the pending rank-0 symbol.
      Grammar out = g;
      out.terminals = delta;
      out.rules.clear();
      std::map<std::pair<uint32_t, uint32_t>, Sym> sub;
      auto nt_for = [&](Sym b, Sym s) {
        auto key = std::make_pair(b.id(), s.id());
        auto it = sub.find(key);
        if (it != sub.end()) return it->second;
        Sym f = fresh_sym(out, b.str() + "." + s.str());
        out.add_nonterminal(f);
        sub.emplace(key, f);
        return f;
      };
      static const Sym hash("#");
      std::vector<Sym> delta0 = delta.of_rank(0);
      for (const Rule& r : g.rules) {
        bool leaf_read = r.rhs.size() == 2 && r.rhs[0].is_terminal() &&
                         delta.rank(r.rhs[0].sym) == 0 && r.rhs[1].is_call();
        bool hash_rule = r.rhs.size() == 1 && r.rhs[0].is_terminal() &&
                         r.rhs[0].sym == hash;
        bool lambda_move = r.rhs.size() == 1 && r.rhs[0].is_call();
        if (leaf_read) {
          Rule nr;
          nr.lhs = r.lhs;
          nr.test = r.test;
          nr.rhs.push_back(RhsItem::call(nt_for(r.rhs[1].sym, r.rhs[0].sym),
                                         r.rhs[1].chain));
          out.rules.push_back(std::move(nr));
        } else if (hash_rule) {
          for (Sym s : delta0) {
            Rule nr;
            nr.lhs = nt_for(r.lhs, s);
            nr.test = r.test;
            nr.rhs.push_back(RhsItem::terminal(s));
            out.rules.push_back(std::move(nr));
          }
        } else if (lambda_move) {
          out.rules.push_back(r);
          for (Sym s : delta0) {
            Rule nr;
            nr.lhs = nt_for(r.lhs, s);
            nr.test = r.test;
            nr.rhs.push_back(
                RhsItem::call(nt_for(r.rhs[0].sym, s), r.rhs[0].chain));
            out.rules.push_back(std::move(nr));
          }
        } else {
          out.rules.push_back(r);  // genuine rank >= 1 rule
        }
      }
      return out;
    }
    case RtConversion::DfToDeLA: {
      // Delete #-rules; leaf reads become acc-guarded halts.
      Grammar out = g;
      out.terminals = delta;
      out.rules.clear();
      std::vector<LookaheadEntry> registry;
      static const Sym hash("#");
      auto register_bf = [&](Sym b, const std::vector<Term>& f) {
        Sym name("<acc:" + b.str() + ":" + term_to_string(f[0]) + ">");
        for (const LookaheadEntry& e : registry)
          if (e.name == name) return name;
        Grammar aux = g;
        aux.name = g.name + "_la" + std::to_string(registry.size());
        Sym init = fresh_sym(aux, "la");
        aux.add_nonterminal(init);
        aux.initial = init;
        Rule r;
        r.lhs = init;
        r.rhs.push_back(RhsItem::call(b, f));
        aux.rules.insert(aux.rules.begin(), std::move(r));
        registry.push_back({name, std::move(aux)});
        return name;
      };
      std::vector<Rule> rules;
      for (const Rule& r : g.rules) {
        bool has_hash = false;
        for (const RhsItem& it : r.rhs)
          if (it.is_terminal() && it.sym == hash) has_hash = true;
        if (has_hash) continue;
        bool leaf_read = r.rhs.size() == 2 && r.rhs[0].is_terminal() &&
                         delta.rank(r.rhs[0].sym) == 0 && r.rhs[1].is_call();
        if (leaf_read) {
          Rule nr;
          nr.lhs = r.lhs;
          Sym name = register_bf(r.rhs[1].sym, r.rhs[1].chain);
          nr.test = Test::conj({r.test, Test::leaf(acc_pred(name))});
          nr.rhs.push_back(r.rhs[0]);
          rules.push_back(std::move(nr));
        } else {
          rules.push_back(r);
        }
      }
      out.storage = with_lookahead(g.storage, std::move(registry), step_bound);
      out.rules = std::move(rules);
      return out;
    }
  }
  fail(ErrorKind::Precondition, "unknown RT conversion");
}

// ---------------------------------------------------------------------------
// The derivation trees of a CF(S) grammar are recognized
// deterministically by an RT(S_id) r-acceptor whose internal nodes carry the
// applied rules; yields recover the generated language.
// ---------------------------------------------------------------------------

inline Grammar derivation_tree_acceptor(const Grammar& g_in) {
  Grammar g = desugar(g_in);
  Grammar out;
  out.name = g_in.name + "_dta";
  out.storage = with_identity(g.storage);
  out.class_tag = ClassTag::RT;
  out.encoding = g.encoding;
  out.initial = g.initial;
  out.nonterminals = g.nonterminals;

  static const Sym eps("eps");
  std::vector<Sym> sigma0;
  for (auto& [t, r] : g.terminals.entries) sigma0.push_back(t);
  sigma0.push_back(eps);
  for (Sym s : sigma0) out.terminals.add(s, 0);

  // Leaf nonterminals A_s.
  std::map<uint32_t, Sym> leaf_nt;
  for (Sym s : sigma0) {
    Sym n = fresh_sym(out, "q." + s.str());
    out.add_nonterminal(n);
    leaf_nt[s.id()] = n;
  }
  Term id = *out.storage->identity;

  for (size_t ri = 0; ri < g.rules.size(); ++ri) {
    const Rule& r = g.rules[ri];
    std::string base = "r" + std::to_string(ri + 1);
    Sym rsym(base);
    while (out.is_terminal(rsym) || out.is_nonterminal(rsym) ||
           g.is_terminal(rsym) || g.is_nonterminal(rsym))
      rsym = Sym(rsym.str() + "'");
    out.terminals.add(rsym, std::max<int>(1, static_cast<int>(r.rhs.size())));
    Rule nr;
    nr.lhs = r.lhs;
    nr.test = r.test;
    nr.rhs.push_back(RhsItem::terminal(rsym));
    if (r.rhs.empty()) {
      nr.rhs.push_back(RhsItem::call(leaf_nt[eps.id()], {id}));
    } else {
      for (const RhsItem& it : r.rhs) {
        if (it.is_terminal())
          nr.rhs.push_back(RhsItem::call(leaf_nt[it.sym.id()], {id}));
        else
          nr.rhs.push_back(it);
      }
    }
    out.rules.push_back(std::move(nr));
  }
  for (Sym s : sigma0) {
    Rule nr;
    nr.lhs = leaf_nt[s.id()];
    nr.rhs.push_back(RhsItem::terminal(s));
    out.rules.push_back(std::move(nr));
  }
  return out;
}

// Replaces every right-hand-side tree by its yield: an RT(S) grammar turns
// into a CF(S) grammar over the rank-0 symbols minus eps.
inline Grammar yield_grammar(const Grammar& g) {
  if (g.class_tag != ClassTag::RT)
    fail(ErrorKind::Precondition, g.name + ": yield_grammar needs class rt");
  static const Sym eps("eps");
  Grammar out = g;
  out.name = g.name + "_yield";
  out.class_tag = ClassTag::CF;
  out.terminals = RankedAlphabet{};
  for (auto& [t, r] : g.terminals.entries)
    if (r == 0 && t != eps) out.terminals.add(t, -1);
  out.rules.clear();
  for (const Rule& r : g.rules) {
    Rule nr;
    nr.lhs = r.lhs;
    nr.test = r.test;
    for (const RhsItem& it : r.rhs) {
      if (it.is_call())
        nr.rhs.push_back(it);
      else if (g.terminals.rank(it.sym) == 0 && it.sym != eps)
        nr.rhs.push_back(it);
    }
    out.rules.push_back(std::move(nr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// From trees to paths: a deterministic RT(S) r-acceptor of mark(L)
// yields a deterministic REG(S) r-acceptor G' over the path alphabet with
// tree_D(L(G')) = L. Barred copies of the states read the marked leaves.
// ---------------------------------------------------------------------------

inline Sym path_symbol(Sym s, int i) {
  return Sym(s.str() + "." + std::to_string(i));
}

inline Grammar path_acceptor(const Grammar& g, const RankedAlphabet& delta) {
  if (g.class_tag != ClassTag::RT || !rt_normal_form(g))
    fail(ErrorKind::Precondition,
         g.name + ": path_acceptor needs an RT r-acceptor in normal form");
  Grammar out;
  out.name = g.name + "_paths";
  out.storage = g.storage;
  out.class_tag = ClassTag::REG;
  out.encoding = g.encoding;
  out.initial = g.initial;
  out.nonterminals = g.nonterminals;
  std::map<uint32_t, Sym> bar;
  for (Sym a : g.nonterminals) {
    Sym b(a.str() + "~");
    while (out.is_nonterminal(b)) b = Sym(b.str() + "~");
    out.add_nonterminal(b);
    bar[a.id()] = b;
  }
  for (auto& [s, r] : delta.entries) {
    if (r == 0)
      out.terminals.add(s, -1);
    else
      for (int i = 1; i <= r; ++i) out.terminals.add(path_symbol(s, i), -1);
  }
  static const Sym hash("#");
  for (const Rule& r : g.rules) {
    if (r.rhs.size() == 1 && r.rhs[0].is_call()) {  // lambda move
      out.rules.push_back(r);
      Rule barred;
      barred.lhs = bar[r.lhs.id()];
      barred.test = r.test;
      barred.rhs.push_back(
          RhsItem::call(bar[r.rhs[0].sym.id()], r.rhs[0].chain));
      out.rules.push_back(std::move(barred));
      continue;
    }
    Sym head = r.rhs[0].sym;
    if (head == hash) {  // A -> if b then #   ~~>  A~ -> if b then lambda
      Rule nr;
      nr.lhs = bar[r.lhs.id()];
      nr.test = r.test;
      out.rules.push_back(std::move(nr));
      continue;
    }
    size_t k = r.rhs.size() - 1;
    if (k == 1 && delta.rank(head) == 0) {
      // Marked leaf: read the rank-0 symbol and continue barred.
      Rule nr;
      nr.lhs = r.lhs;
      nr.test = r.test;
      nr.rhs.push_back(RhsItem::terminal(head));
      nr.rhs.push_back(RhsItem::call(bar[r.rhs[1].sym.id()], r.rhs[1].chain));
      out.rules.push_back(std::move(nr));
      continue;
    }
    for (size_t i = 1; i <= k; ++i) {
      Rule nr;
      nr.lhs = r.lhs;
      nr.test = r.test;
      nr.rhs.push_back(RhsItem::terminal(path_symbol(head, static_cast<int>(i))));
      nr.rhs.push_back(RhsItem::call(r.rhs[i].sym, r.rhs[i].chain));
      out.rules.push_back(std::move(nr));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// From paths to trees: a deterministic REG(S) r-acceptor with final
// states, intersected with (Sigma - D0)* D0 and converted to empty-store
// acceptance, simulates on all paths of an input tree: the resulting
// deterministic RT(S) r-acceptor accepts mark(tree_D(L(g, finals))).
// ---------------------------------------------------------------------------

inline Grammar tree_acceptor_from_paths(const Grammar& g_in,
                                        const std::vector<Sym>& finals,
                                        const RankedAlphabet& delta) {
  if (!is_racceptor_deterministic(g_in))
    fail(ErrorKind::Precondition,
         g_in.name +
             ": tree_acceptor_from_paths needs a deterministic REG r-acceptor");
  // Intersect with (Sigma - D0)* D0 by the product construction: state 0
  // before a rank-0 symbol was read, state 1 after.
  Grammar inter = g_in;
  inter.nonterminals.clear();
  inter.rules.clear();
  inter.finals.clear();
  std::map<uint32_t, std::pair<Sym, Sym>> states;
  for (Sym a : g_in.nonterminals) {
    Sym s0(a.str() + ".0"), s1(a.str() + ".1");
    inter.add_nonterminal(s0);
    inter.add_nonterminal(s1);
    states[a.id()] = {s0, s1};
  }
  inter.initial = states[g_in.initial.id()].first;
  std::vector<Sym> new_finals;
  for (Sym a : finals) new_finals.push_back(states[a.id()].second);
  for (const Rule& r : g_in.rules) {
    if (cons_detail::rule_is_final(r)) continue;  // halting: empty-store only
    const RhsItem& call = r.rhs.back();
    if (r.rhs.size() == 1) {  // lambda move, present in both layers
      for (int layer = 0; layer < 2; ++layer) {
        Rule nr;
        nr.lhs = layer ? states[r.lhs.id()].second : states[r.lhs.id()].first;
        nr.test = r.test;
        Sym tgt = layer ? states[call.sym.id()].second
                        : states[call.sym.id()].first;
        nr.rhs.push_back(RhsItem::call(tgt, call.chain));
        inter.rules.push_back(std::move(nr));
      }
      continue;
    }
    Sym a = r.rhs[0].sym;
    bool to_accept = delta.rank(a) == 0;
    Rule nr;
    nr.lhs = states[r.lhs.id()].first;
    nr.test = r.test;
    nr.rhs.push_back(r.rhs[0]);
    Sym tgt = to_accept ? states[call.sym.id()].second
                        : states[call.sym.id()].first;
    nr.rhs.push_back(RhsItem::call(tgt, call.chain));
    inter.rules.push_back(std::move(nr));
  }
  // Empty-store acceptance via the prefix-free remark: the intersected
  // language has rank-0 symbols only at the last position, so it is
  // prefix-free by construction; final states simply become A -> lambda.
  Grammar de = inter;
  de.rules.clear();
  for (const Rule& r : inter.rules) {
    bool fin = std::find(new_finals.begin(), new_finals.end(), r.lhs) !=
               new_finals.end();
    if (!fin) de.rules.push_back(r);
  }
  for (Sym a : new_finals) {
    Rule nr;
    nr.lhs = a;
    de.rules.push_back(std::move(nr));
  }
  de.finals.clear();

  // Simulate on all paths of the input tree.
  Grammar out;
  out.name = g_in.name + "_trees";
  out.storage = de.storage;
  out.class_tag = ClassTag::RT;
  out.encoding = de.encoding;
  out.initial = de.initial;
  out.nonterminals = de.nonterminals;
  out.terminals = marked_alphabet(delta);
  static const Sym hash("#");

  for (auto& [sym, rank] : delta.entries) {
    if (rank == 0) {
      for (const Rule& r : de.rules) {
        if (r.rhs.size() == 2 && r.rhs[0].is_terminal() &&
            r.rhs[0].sym == sym && r.rhs[1].is_call()) {
          // Reads a rank-0 symbol and continues: keep as a D# rank-1 rule.
          out.rules.push_back(r);
        }
      }
      continue;
    }
    // All combinations of per-direction rules with a common left-hand side.
    for (Sym a : de.nonterminals) {
      std::vector<std::vector<const Rule*>> per_dir(rank);
      for (const Rule& r : de.rules) {
        if (r.lhs != a || r.rhs.size() != 2 || !r.rhs[0].is_terminal())
          continue;
        for (int i = 1; i <= rank; ++i)
          if (r.rhs[0].sym == path_symbol(sym, i))
            per_dir[i - 1].push_back(&r);
      }
      bool all = true;
      for (auto& v : per_dir)
        if (v.empty()) all = false;
      if (!all) continue;
      std::vector<size_t> idx(rank, 0);
      while (true) {
        Rule nr;
        nr.lhs = a;
        std::vector<Test> tests;
        nr.rhs.push_back(RhsItem::terminal(sym));
        for (int i = 0; i < rank; ++i) {
          const Rule* r = per_dir[i][idx[i]];
          tests.push_back(r->test);
          nr.rhs.push_back(r->rhs[1]);
        }
        nr.test = Test::conj(std::move(tests));
        out.rules.push_back(std::move(nr));
        int d = rank - 1;
        while (d >= 0 && ++idx[d] == per_dir[d].size()) {
          idx[d] = 0;
          --d;
        }
        if (d < 0) break;
      }
    }
  }
  for (const Rule& r : de.rules) {
    if (r.rhs.size() == 1 && r.rhs[0].is_call()) {
      out.rules.push_back(r);  // lambda move
    } else if (r.rhs.empty()) {
      Rule nr;
      nr.lhs = r.lhs;
      nr.test = r.test;
      nr.rhs.push_back(RhsItem::terminal(hash));
      out.rules.push_back(std::move(nr));
    }
  }
  return out;
}

}  // namespace gws

#endif  // GWS_CONSTRUCTIONS_HPP
