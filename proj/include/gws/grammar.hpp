#ifndef GWS_GRAMMAR_HPP
#define GWS_GRAMMAR_HPP

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "gws/storage.hpp"

namespace gws {

enum class ClassTag { CF, CFExt, REG, RT };

inline std::string class_tag_name(ClassTag c) {
  switch (c) {
    case ClassTag::CF:
      return "cf";
    case ClassTag::CFExt:
      return "cf_ext";
    case ClassTag::REG:
      return "reg";
    case ClassTag::RT:
      return "rt";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Rules.
//
// A right-hand side is a sequence of terminals and calls; for the RT class
// the sequence is a tree in prefix notation (trees are particular strings).
// A TailCall is the trailing B(id) of an extended rule, where id is the
// fresh identity of S_id.
// ---------------------------------------------------------------------------

struct RhsItem {
  enum class Kind { Terminal, Call, TailCall };
  Kind kind = Kind::Terminal;
  Sym sym;                  // terminal symbol or callee nonterminal
  std::vector<Term> chain;  // instruction chain for Call; empty for TailCall

  static RhsItem terminal(Sym s) {
    RhsItem it;
    it.kind = Kind::Terminal;
    it.sym = s;
    return it;
  }
  static RhsItem call(Sym nt, std::vector<Term> chain) {
    RhsItem it;
    it.kind = Kind::Call;
    it.sym = nt;
    it.chain = std::move(chain);
    return it;
  }
  static RhsItem tail_call(Sym nt) {
    RhsItem it;
    it.kind = Kind::TailCall;
    it.sym = nt;
    return it;
  }

  bool is_terminal() const { return kind == Kind::Terminal; }
  bool is_call() const { return kind != Kind::Terminal; }

  friend bool operator==(const RhsItem& a, const RhsItem& b) {
    return a.kind == b.kind && a.sym == b.sym && a.chain == b.chain;
  }
};

struct Rule {
  Sym lhs;
  Test test;
  std::vector<RhsItem> rhs;

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.lhs == b.lhs && a.test == b.test && a.rhs == b.rhs;
  }
};

inline std::uint64_t rule_hash(const Rule& r) {
  std::uint64_t h = r.lhs.id();
  h = hash_combine(h, test_hash(r.test));
  for (const RhsItem& it : r.rhs) {
    h = hash_combine(h, static_cast<int>(it.kind));
    h = hash_combine(h, it.sym.id());
    for (const Term& t : it.chain) h = hash_combine(h, term_hash(t));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Grammars.
// ---------------------------------------------------------------------------

struct Grammar {
  std::string name = "g";
  StoragePtr storage;
  std::vector<Sym> nonterminals;
  RankedAlphabet terminals;  // rank -1 marks an unranked terminal
  Sym initial;
  Term encoding;
  std::vector<Rule> rules;
  ClassTag class_tag = ClassTag::CF;
  std::vector<Sym> finals;  // final states, when acceptance by final state

  bool is_nonterminal(Sym s) const {
    return std::find(nonterminals.begin(), nonterminals.end(), s) !=
           nonterminals.end();
  }
  bool is_terminal(Sym s) const { return terminals.contains(s); }

  void add_nonterminal(Sym s) {
    if (!is_nonterminal(s)) nonterminals.push_back(s);
  }

  std::vector<const Rule*> rules_for(Sym lhs) const {
    std::vector<const Rule*> out;
    for (const Rule& r : rules)
      if (r.lhs == lhs) out.push_back(&r);
    return out;
  }
};

// Deterministic fresh-symbol generation: base, base_1, base_2, ... skipping
// declared symbols, so constructions are reproducible.
inline Sym fresh_sym(const Grammar& g, const std::string& base) {
  Sym cand(base);
  int i = 0;
  while (g.is_nonterminal(cand) || g.is_terminal(cand)) {
    ++i;
    cand = Sym(base + "_" + std::to_string(i));
  }
  return cand;
}

// ---------------------------------------------------------------------------
// DNF machinery over predicate literals. Used by desugaring, the determinism
// checks and the test normal form.
// ---------------------------------------------------------------------------

struct Literal {
  Term pred;
  bool positive = true;
  friend bool operator==(const Literal& a, const Literal& b) {
    return a.positive == b.positive && a.pred == b.pred;
  }
};

using Conjunct = std::vector<Literal>;

// Disjunctive normal form: a list of conjuncts; an empty list is `false`,
// a list containing an empty conjunct is `true`.
inline std::vector<Conjunct> to_dnf(const Test& t) {
  switch (t.kind) {
    case Test::Kind::True:
      return {{}};
    case Test::Kind::False:
      return {};
    case Test::Kind::Pred:
      return {{Literal{t.pred, true}}};
    case Test::Kind::Not: {
      const Test& inner = t.kids[0];
      switch (inner.kind) {
        case Test::Kind::True:
          return {};
        case Test::Kind::False:
          return {{}};
        case Test::Kind::Pred:
          return {{Literal{inner.pred, false}}};
        case Test::Kind::Not:
          return to_dnf(inner.kids[0]);
        case Test::Kind::And: {
          std::vector<Test> kids;
          for (const Test& k : inner.kids) kids.push_back(Test::negate(k));
          return to_dnf(Test::disj(std::move(kids)));
        }
        case Test::Kind::Or: {
          std::vector<Test> kids;
          for (const Test& k : inner.kids) kids.push_back(Test::negate(k));
          return to_dnf(Test::conj(std::move(kids)));
        }
      }
      return {};
    }
    case Test::Kind::And: {
      std::vector<Conjunct> acc = {{}};
      for (const Test& k : t.kids) {
        std::vector<Conjunct> kd = to_dnf(k);
        std::vector<Conjunct> next;
        for (const Conjunct& a : acc)
          for (const Conjunct& b : kd) {
            Conjunct c = a;
            for (const Literal& l : b)
              if (std::find(c.begin(), c.end(), l) == c.end()) c.push_back(l);
            next.push_back(std::move(c));
          }
        acc = std::move(next);
      }
      return acc;
    }
    case Test::Kind::Or: {
      std::vector<Conjunct> acc;
      for (const Test& k : t.kids)
        for (Conjunct& c : to_dnf(k)) acc.push_back(std::move(c));
      return acc;
    }
  }
  return {};
}

// A conjunct is refuted when it contains p and not p, or two positive
// predicates declared mutually exclusive by the storage type.
inline bool conjunct_unsat(const Conjunct& c, const StorageType& s) {
  for (size_t i = 0; i < c.size(); ++i)
    for (size_t j = i + 1; j < c.size(); ++j) {
      if (c[i].pred == c[j].pred && c[i].positive != c[j].positive)
        return true;
      if (c[i].positive && c[j].positive &&
          s.exclusive(c[i].pred, c[j].pred))
        return true;
    }
  return false;
}

inline Test conjunct_to_test(const Conjunct& c) {
  std::vector<Test> kids;
  for (const Literal& l : c) {
    Test leaf = Test::leaf(l.pred);
    kids.push_back(l.positive ? leaf : Test::negate(std::move(leaf)));
  }
  return Test::conj(std::move(kids));
}

// Sound, incomplete: true means b1 and b2 is unsatisfiable on every
// configuration (propositional reasoning plus exclusivity axioms).
inline bool tests_disjoint(const Test& b1, const Test& b2,
                           const StorageType& s) {
  std::vector<Conjunct> d1 = to_dnf(b1), d2 = to_dnf(b2);
  for (const Conjunct& c1 : d1)
    for (const Conjunct& c2 : d2) {
      Conjunct merged = c1;
      for (const Literal& l : c2)
        if (std::find(merged.begin(), merged.end(), l) == merged.end())
          merged.push_back(l);
      if (!conjunct_unsat(merged, s)) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Desugaring.
// ---------------------------------------------------------------------------

// Rewrites every rule into test-DNF form (one rule per disjunct, tests are
// conjunctions of literals; `true` is the empty conjunction), expands
// instruction chains through fresh chain nonterminals, drops rules whose
// test is literally false, and collapses duplicate rules. if-then-else is
// already expanded by the parser.
inline Grammar desugar(const Grammar& g) {
  Grammar out = g;
  out.rules.clear();

  // Chain expansion may add rules for fresh nonterminals.
  std::vector<Rule> extra;
  auto expand_chain = [&](const RhsItem& item) -> RhsItem {
    if (item.kind != RhsItem::Kind::Call || item.chain.size() <= 1)
      return item;
    // A -> ... B(f1;...;fk) ... becomes B'(f1) with B' -> B''(f2), ...
    std::vector<Sym> fresh;
    for (size_t i = 0; i + 1 < item.chain.size(); ++i) {
      Sym f = fresh_sym(out, item.sym.str() + "'" +
                                 (i == 0 ? "" : std::to_string(i)));
      out.add_nonterminal(f);
      fresh.push_back(f);
    }
    for (size_t i = 0; i < fresh.size(); ++i) {
      Rule r;
      r.lhs = fresh[i];
      r.test = Test::truth();
      Sym next = (i + 1 < fresh.size()) ? fresh[i + 1] : item.sym;
      r.rhs.push_back(RhsItem::call(next, {item.chain[i + 1]}));
      extra.push_back(std::move(r));
    }
    return RhsItem::call(fresh[0], {item.chain[0]});
  };

  for (const Rule& r : g.rules) {
    std::vector<Conjunct> dnf = to_dnf(r.test);
    if (dnf.empty()) continue;  // test literally false: rule omitted
    std::vector<RhsItem> rhs;
    rhs.reserve(r.rhs.size());
    for (const RhsItem& it : r.rhs) rhs.push_back(expand_chain(it));
    for (const Conjunct& c : dnf) {
      Rule nr;
      nr.lhs = r.lhs;
      nr.test = conjunct_to_test(c);
      nr.rhs = rhs;
      out.rules.push_back(std::move(nr));
    }
  }
  for (Rule& r : extra) out.rules.push_back(std::move(r));

  // R is a set: collapse duplicates, keeping source order.
  std::vector<Rule> dedup;
  for (Rule& r : out.rules) {
    bool seen = false;
    for (const Rule& d : dedup)
      if (d == r) {
        seen = true;
        break;
      }
    if (!seen) dedup.push_back(std::move(r));
  }
  out.rules = std::move(dedup);
  return out;
}

// ---------------------------------------------------------------------------
// Shape predicates and classification.
// ---------------------------------------------------------------------------

// REG shape: every rule is w or wB(f) (a trailing call; instruction chains
// are allowed, being pure sugar).
inline bool reg_shaped(const Grammar& g) {
  for (const Rule& r : g.rules) {
    for (size_t i = 0; i < r.rhs.size(); ++i) {
      if (r.rhs[i].is_call() && i + 1 != r.rhs.size()) return false;
    }
  }
  return true;
}

// Parses an RT right-hand side (prefix notation) into well-ranked form.
// Returns false if the sequence is not exactly one tree over the ranked
// terminals with calls as rank-0 leaves.
inline bool rt_rhs_well_ranked(const Grammar& g,
                               const std::vector<RhsItem>& rhs) {
  size_t pos = 0;
  std::function<bool()> node = [&]() -> bool {
    if (pos >= rhs.size()) return false;
    const RhsItem& it = rhs[pos++];
    if (it.is_call()) return true;
    auto rk = g.terminals.rank(it.sym);
    if (!rk || *rk < 0) return false;
    for (int i = 0; i < *rk; ++i)
      if (!node()) return false;
    return true;
  };
  return node() && pos == rhs.size();
}

inline bool rt_shaped(const Grammar& g) {
  for (auto& e : g.terminals.entries)
    if (e.second < 0) return false;
  for (const Rule& r : g.rules)
    if (!rt_rhs_well_ranked(g, r.rhs)) return false;
  return true;
}

// RT normal form: A -> if b then B(f) or A -> if b then s B1(f1)...Bk(fk).
inline bool rt_normal_form(const Grammar& g) {
  for (const Rule& r : g.rules) {
    if (r.rhs.size() == 1 && r.rhs[0].is_call()) continue;
    if (r.rhs.empty() || !r.rhs[0].is_terminal()) return false;
    for (size_t i = 1; i < r.rhs.size(); ++i)
      if (!r.rhs[i].is_call() || r.rhs[i].chain.size() > 1) return false;
    auto rk = g.terminals.rank(r.rhs[0].sym);
    if (!rk || static_cast<size_t>(*rk) != r.rhs.size() - 1) return false;
  }
  return true;
}

// REG normal form: w in Delta or lambda in every rule.
inline bool reg_normal_form(const Grammar& g) {
  if (!reg_shaped(g)) return false;
  for (const Rule& r : g.rules) {
    size_t terminals = 0;
    for (const RhsItem& it : r.rhs)
      if (it.is_terminal()) ++terminals;
      else if (it.chain.size() > 1)
        return false;
    if (terminals > 1) return false;
  }
  return true;
}

// CF_ext shape: id-tails only as the final item, at most one.
inline bool cfext_shaped(const Grammar& g) {
  for (const Rule& r : g.rules)
    for (size_t i = 0; i < r.rhs.size(); ++i)
      if (r.rhs[i].kind == RhsItem::Kind::TailCall && i + 1 != r.rhs.size())
        return false;
  return true;
}

inline bool cfext_normal_form(const Grammar& g) {
  for (const Rule& r : g.rules) {
    bool tail = !r.rhs.empty() && r.rhs.back().kind == RhsItem::Kind::TailCall;
    size_t n = r.rhs.size() - (tail ? 1 : 0);
    size_t calls = 0;
    for (size_t i = 0; i < n; ++i)
      if (r.rhs[i].is_call()) ++calls;
    if (calls == 0) continue;                      // w or wB(id)
    if (tail && calls == 1 && n == 1 &&
        r.rhs[0].chain.size() == 1)
      continue;                                    // C(f)B(id)
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Determinism.
// ---------------------------------------------------------------------------

struct DetResult {
  enum class Kind { Yes, No, UnknownSyntactic };
  Kind kind = Kind::Yes;
  std::optional<Value> witness;          // for No: a configuration
  std::pair<size_t, size_t> rule_pair{0, 0};

  bool yes() const { return kind == Kind::Yes; }
};

namespace detail {

// Bounded closure of configurations reachable from encoded inputs by the
// instruction chains appearing in the grammar.
inline std::vector<Value> reachable_configs(const Grammar& g, int input_bound,
                                            size_t cap) {
  std::vector<Value> out;
  std::set<std::string> seen;  // structural key
  auto push = [&](const Value& v) {
    std::string k = v.to_string() + "#" + std::to_string(v.hash());
    if (seen.insert(k).second) out.push_back(v);
  };
  for (const InputElement& u :
       g.storage->enumerate_inputs(g.encoding, input_bound)) {
    if (out.size() > cap) break;
    auto c = g.storage->enc(g.encoding, u);
    if (c) push(*c);
  }
  std::vector<std::vector<Term>> chains;
  for (const Rule& r : g.rules)
    for (const RhsItem& it : r.rhs)
      if (it.kind == RhsItem::Kind::Call) chains.push_back(it.chain);
      else if (it.kind == RhsItem::Kind::TailCall && g.storage->identity)
        chains.push_back({*g.storage->identity});
  for (size_t i = 0; i < out.size() && out.size() < cap; ++i) {
    Value c = out[i];
    for (const auto& ch : chains) {
      auto v = apply_chain(ch, c, *g.storage);
      if (v) push(*v);
      if (out.size() >= cap) break;
    }
  }
  return out;
}

}  // namespace detail

// Transducer determinism: Yes when every pair of distinct same-lhs rules has
// propositionally disjoint tests (with exclusivity axioms); No with a
// reachable witness configuration when bounded search finds one; otherwise
// UnknownSyntactic.
inline DetResult is_deterministic(const Grammar& g0) {
  Grammar g = desugar(g0);
  std::vector<std::pair<size_t, size_t>> candidates;
  for (size_t i = 0; i < g.rules.size(); ++i)
    for (size_t j = i + 1; j < g.rules.size(); ++j) {
      if (g.rules[i].lhs != g.rules[j].lhs) continue;
      if (!tests_disjoint(g.rules[i].test, g.rules[j].test, *g.storage))
        candidates.emplace_back(i, j);
    }
  DetResult res;
  if (candidates.empty()) {
    res.kind = DetResult::Kind::Yes;
    return res;
  }
  for (const Value& c : detail::reachable_configs(g, 4, 2000)) {
    for (auto [i, j] : candidates) {
      if (eval_test(g.rules[i].test, c, *g.storage) == Tri::True &&
          eval_test(g.rules[j].test, c, *g.storage) == Tri::True) {
        res.kind = DetResult::Kind::No;
        res.witness = c;
        res.rule_pair = {i, j};
        return res;
      }
    }
  }
  res.kind = DetResult::Kind::UnknownSyntactic;
  res.rule_pair = candidates.front();
  return res;
}

// r-acceptor determinism for REG(S) and RT(S) r-acceptors in normal form
// over an r-acceptor deterministic storage.
inline bool is_racceptor_deterministic(const Grammar& g) {
  if (!g.storage->racceptor_deterministic(g.encoding))
    fail(ErrorKind::Precondition,
         g.name + ": storage is not r-acceptor deterministic (needs an "
                  "identity and a singleton input set)");
  bool rt = g.class_tag == ClassTag::RT;
  if (rt ? !rt_normal_form(g) : !reg_normal_form(g))
    fail(ErrorKind::Precondition, g.name + ": grammar not in normal form");
  auto read_sym = [&](const Rule& r) -> std::optional<Sym> {
    if (!r.rhs.empty() && r.rhs[0].is_terminal()) return r.rhs[0].sym;
    return std::nullopt;  // lambda move or bare call
  };
  for (size_t i = 0; i < g.rules.size(); ++i)
    for (size_t j = i + 1; j < g.rules.size(); ++j) {
      const Rule &a = g.rules[i], &b = g.rules[j];
      if (a.lhs != b.lhs) continue;
      auto sa = read_sym(a), sb = read_sym(b);
      bool constrained = !sa || !sb || *sa == *sb;
      if (constrained && !tests_disjoint(a.test, b.test, *g.storage))
        return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------

struct ClassificationReport {
  ClassTag declared;
  ClassTag strongest;
  bool normal_form = false;  // for the strongest class
  DetResult deterministic;
  std::optional<bool> racceptor_det;  // set for normal-form REG/RT over
                                      // r-acceptor deterministic storage
  std::vector<std::string> issues;    // inconsistencies, never repaired

  bool ok() const { return issues.empty(); }
};

// Structural validation: every referenced symbol is declared and understood
// by the storage type, the declared class matches the rule shapes, and the
// strongest class the rules satisfy is reported.
inline ClassificationReport validate(const Grammar& g) {
  ClassificationReport rep;
  rep.declared = g.class_tag;
  auto issue = [&](const std::string& m) { rep.issues.push_back(m); };

  if (!g.is_nonterminal(g.initial))
    issue("initial nonterminal " + g.initial.str() + " is not declared");
  for (auto& e : g.terminals.entries)
    if (g.is_nonterminal(e.first))
      issue("symbol " + e.first.str() + " is both terminal and nonterminal");
  if (!g.storage)
    issue("no storage type");
  else if (!g.storage->has_enc(g.encoding))
    issue("encoding " + term_to_string(g.encoding) +
          " is not an encoding symbol of " + g.storage->name);
  for (Sym f : g.finals)
    if (!g.is_nonterminal(f)) issue("final state " + f.str() + " undeclared");

  for (size_t ri = 0; ri < g.rules.size(); ++ri) {
    const Rule& r = g.rules[ri];
    std::string where = "rule " + std::to_string(ri) + " of " + g.name;
    if (!g.is_nonterminal(r.lhs))
      issue(where + ": left-hand side " + r.lhs.str() + " undeclared");
    std::vector<Term> preds;
    r.test.collect_preds(preds);
    for (const Term& p : preds)
      if (g.storage && !g.storage->has_pred(p))
        issue(where + ": unknown predicate " + term_to_string(p));
    for (const RhsItem& it : r.rhs) {
      switch (it.kind) {
        case RhsItem::Kind::Terminal:
          if (!g.is_terminal(it.sym))
            issue(where + ": undeclared terminal " + it.sym.str());
          break;
        case RhsItem::Kind::Call:
          if (!g.is_nonterminal(it.sym))
            issue(where + ": undeclared nonterminal " + it.sym.str());
          if (it.chain.empty())
            issue(where + ": call without an instruction");
          for (const Term& f : it.chain)
            if (g.storage && !g.storage->has_instr(f))
              issue(where + ": unknown instruction " + term_to_string(f));
          break;
        case RhsItem::Kind::TailCall:
          if (!g.is_nonterminal(it.sym))
            issue(where + ": undeclared nonterminal " + it.sym.str());
          if (g.class_tag != ClassTag::CFExt)
            issue(where + ": id-tail call outside a cf_ext grammar");
          break;
      }
    }
  }

  // Declared-class shape consistency.
  if (g.class_tag == ClassTag::REG && !reg_shaped(g))
    issue(g.name + ": declared reg but a rule is not right-linear");
  if (g.class_tag == ClassTag::RT && !rt_shaped(g))
    issue(g.name + ": declared rt but rules are not ranked trees");
  if (g.class_tag == ClassTag::CFExt && !cfext_shaped(g))
    issue(g.name + ": id-tail calls may only appear at the end of a rule");
  if (g.class_tag != ClassTag::CFExt) {
    for (const Rule& r : g.rules)
      for (const RhsItem& it : r.rhs)
        if (it.kind == RhsItem::Kind::TailCall)
          issue(g.name + ": id-tail call in a non-cf_ext grammar");
  }

  // Strongest class.
  if (rt_shaped(g) && !g.terminals.entries.empty())
    rep.strongest = ClassTag::RT;
  else if (reg_shaped(g) && g.class_tag != ClassTag::CFExt)
    rep.strongest = ClassTag::REG;
  else
    rep.strongest = g.class_tag == ClassTag::CFExt ? ClassTag::CFExt
                                                   : ClassTag::CF;
  switch (rep.strongest) {
    case ClassTag::RT:
      rep.normal_form = rt_normal_form(g);
      break;
    case ClassTag::REG:
      rep.normal_form = reg_normal_form(g);
      break;
    case ClassTag::CFExt:
      rep.normal_form = cfext_normal_form(g);
      break;
    case ClassTag::CF:
      rep.normal_form = false;
      break;
  }

  if (rep.ok()) {
    rep.deterministic = is_deterministic(g);
    if ((rep.strongest == ClassTag::REG || rep.strongest == ClassTag::RT) &&
        rep.normal_form && g.storage &&
        g.storage->racceptor_deterministic(g.encoding)) {
      rep.racceptor_det = is_racceptor_deterministic(g);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Normal forms.
// ---------------------------------------------------------------------------

// REG normal form: splits long terminal strings through fresh states joined
// by the identity.
inline Grammar normalize_reg(const Grammar& g0) {
  if (!g0.storage->has_identity())
    fail(ErrorKind::Precondition,
         g0.name + ": normalize_reg needs a storage identity");
  Grammar g = desugar(g0);
  Term id = *g.storage->identity;
  Grammar out = g;
  out.rules.clear();
  for (size_t ri = 0; ri < g.rules.size(); ++ri) {
    const Rule& r = g.rules[ri];
    size_t nterm = 0;
    for (const RhsItem& it : r.rhs)
      if (it.is_terminal()) ++nterm;
    if (nterm <= 1) {
      out.rules.push_back(r);
      continue;
    }
    // A -> if b then a1...anQ  becomes  A -> if b then a1 B1(id), ...
    Sym lhs = r.lhs;
    Test test = r.test;
    for (size_t i = 0; i < r.rhs.size(); ++i) {
      const RhsItem& it = r.rhs[i];
      if (!it.is_terminal()) {  // trailing call
        out.rules.back().rhs.push_back(it);
        break;
      }
      bool last_terminal = (i + 1 == r.rhs.size()) ||
                           !r.rhs[i + 1].is_terminal();
      Rule nr;
      nr.lhs = lhs;
      nr.test = test;
      nr.rhs.push_back(it);
      if (!last_terminal) {
        Sym nxt = fresh_sym(out, r.lhs.str() + "_n");
        out.add_nonterminal(nxt);
        nr.rhs.push_back(RhsItem::call(nxt, {id}));
        lhs = nxt;
        test = Test::truth();
      }
      out.rules.push_back(std::move(nr));
    }
  }
  return out;
}

// RT normal form: splits deep right-hand-side trees through fresh
// nonterminals joined by the identity.
inline Grammar normalize_rt(const Grammar& g0) {
  if (!g0.storage->has_identity())
    fail(ErrorKind::Precondition,
         g0.name + ": normalize_rt needs a storage identity");
  Grammar g = desugar(g0);
  Term id = *g.storage->identity;
  Grammar out = g;
  out.rules.clear();

  // Parse a prefix-form tree into (item, children indices) spans.
  struct Span {
    size_t begin, end;
  };
  std::function<Span(const std::vector<RhsItem>&, size_t)> span =
      [&](const std::vector<RhsItem>& rhs, size_t pos) -> Span {
    const RhsItem& it = rhs[pos];
    if (it.is_call()) return {pos, pos + 1};
    int rk = *g.terminals.rank(it.sym);
    size_t p = pos + 1;
    for (int i = 0; i < rk; ++i) p = span(rhs, p).end;
    return {pos, p};
  };

  std::function<void(Sym, const Test&, const std::vector<RhsItem>&)> emit =
      [&](Sym lhs, const Test& test, const std::vector<RhsItem>& rhs) {
        Rule nr;
        nr.lhs = lhs;
        nr.test = test;
        if (rhs.size() == 1) {  // bare call or rank-0 terminal
          nr.rhs = rhs;
          out.rules.push_back(std::move(nr));
          return;
        }
        nr.rhs.push_back(rhs[0]);
        size_t p = 1;
        while (p < rhs.size()) {
          Span sp = span(rhs, p);
          if (rhs[p].is_call() && sp.end == p + 1) {
            nr.rhs.push_back(rhs[p]);
          } else {
            Sym f = fresh_sym(out, lhs.str() + "_t");
            out.add_nonterminal(f);
            nr.rhs.push_back(RhsItem::call(f, {id}));
            emit(f, Test::truth(),
                 std::vector<RhsItem>(rhs.begin() + sp.begin,
                                      rhs.begin() + sp.end));
          }
          p = sp.end;
        }
        out.rules.push_back(std::move(nr));
      };

  for (const Rule& r : g.rules) emit(r.lhs, r.test, r.rhs);

  // Keep rules in a stable order: originals first (emit recursion appends
  // fresh-rule bodies before their parent rule; reorder by lhs discovery).
  return out;
}

// Lifts a CF(S) grammar to CF_ext(S): the storage gains a fresh identity and
// the class allows id-tails (none are present yet).
inline Grammar lift_to_cfext(const Grammar& g) {
  if (g.class_tag == ClassTag::CFExt) return g;
  Grammar out = g;
  out.storage = with_identity(g.storage);
  out.class_tag = ClassTag::CFExt;
  return out;
}

// CF_ext normal form: every rule becomes one of
//   A -> if b then w B(id)   |   A -> if b then C(f) B(id)   |   A -> if b then w.
// Preserves determinism: continuation nonterminals are fresh with single
// unconditional rules.
inline Grammar normalize_cfext(const Grammar& g0) {
  Grammar g = desugar(g0.class_tag == ClassTag::CF ? lift_to_cfext(g0) : g0);
  if (g.class_tag != ClassTag::CFExt)
    fail(ErrorKind::Precondition,
         g.name + ": normalize_cfext expects a cf or cf_ext grammar");
  Grammar out = g;
  out.rules.clear();
  for (const Rule& r : g.rules) {
    bool tail = !r.rhs.empty() && r.rhs.back().kind == RhsItem::Kind::TailCall;
    std::vector<RhsItem> items(r.rhs.begin(), r.rhs.end() - (tail ? 1 : 0));
    std::optional<Sym> tail_nt;
    if (tail) tail_nt = r.rhs.back().sym;

    Sym lhs = r.lhs;
    Test test = r.test;
    size_t pos = 0;
    while (true) {
      // Maximal terminal prefix.
      std::vector<RhsItem> w;
      while (pos < items.size() && items[pos].is_terminal())
        w.push_back(items[pos++]);
      Rule nr;
      nr.lhs = lhs;
      nr.test = test;
      if (pos == items.size()) {
        nr.rhs = std::move(w);
        if (tail_nt) nr.rhs.push_back(RhsItem::tail_call(*tail_nt));
        out.rules.push_back(std::move(nr));
        break;
      }
      if (!w.empty()) {
        Sym z = fresh_sym(out, r.lhs.str() + "_x");
        out.add_nonterminal(z);
        nr.rhs = std::move(w);
        nr.rhs.push_back(RhsItem::tail_call(z));
        out.rules.push_back(std::move(nr));
        lhs = z;
        test = Test::truth();
        continue;
      }
      // A call first: emit C(f) Z(id).
      const RhsItem& call = items[pos++];
      bool last = pos == items.size();
      if (last && tail_nt) {
        nr.rhs.push_back(call);
        nr.rhs.push_back(RhsItem::tail_call(*tail_nt));
        out.rules.push_back(std::move(nr));
        break;
      }
      Sym z = fresh_sym(out, r.lhs.str() + "_x");
      out.add_nonterminal(z);
      nr.rhs.push_back(call);
      nr.rhs.push_back(RhsItem::tail_call(z));
      out.rules.push_back(std::move(nr));
      if (last) {
        Rule fin;
        fin.lhs = z;
        fin.test = Test::truth();
        out.rules.push_back(std::move(fin));  // Z -> lambda
        break;
      }
      lhs = z;
      test = Test::truth();
    }
  }
  return out;
}

}  // namespace gws

#endif  // GWS_GRAMMAR_HPP
