#ifndef GWS_STORAGE_HPP
#define GWS_STORAGE_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "gws/value.hpp"

namespace gws {

// Predicate evaluation is three-valued: Unknown arises only from look-ahead
// predicates cut off by their step bound, and is turned into a hard error by
// the derivation engine.
enum class Tri { False, True, Unknown };

inline Tri tri_of(bool b) { return b ? Tri::True : Tri::False; }

// ---------------------------------------------------------------------------
// Ranked alphabets (used by encodings, RT terminals and the delta module).
// ---------------------------------------------------------------------------

struct RankedAlphabet {
  std::vector<std::pair<Sym, int>> entries;  // declaration order

  bool contains(Sym s) const {
    for (auto& e : entries)
      if (e.first == s) return true;
    return false;
  }
  std::optional<int> rank(Sym s) const {
    for (auto& e : entries)
      if (e.first == s) return e.second;
    return std::nullopt;
  }
  void add(Sym s, int r) {
    if (!contains(s)) entries.emplace_back(s, r);
  }
  std::vector<Sym> of_rank(int r) const {
    std::vector<Sym> out;
    for (auto& e : entries)
      if (e.second == r) out.push_back(e.first);
    return out;
  }
  int max_rank() const {
    int m = 0;
    for (auto& e : entries) m = std::max(m, e.second);
    return m;
  }
};

inline bool tree_well_ranked(const TreePtr& t, const RankedAlphabet& sigma) {
  auto r = sigma.rank(t->label);
  if (!r || static_cast<size_t>(*r) != t->children.size()) return false;
  for (auto& c : t->children)
    if (!tree_well_ranked(c, sigma)) return false;
  return true;
}

// Parses an alphabet term: {a,b} or {sigma:2, a:0}. Unranked entries get
// rank -1.
inline std::optional<RankedAlphabet> alphabet_of_term(const Term& t) {
  if (t.head.str() != "{}") return std::nullopt;
  RankedAlphabet out;
  for (const Term& e : t.args) {
    if (e.head.str() == ":" && e.args.size() == 2) {
      long long r;
      if (!term_to_int(e.args[1], r)) return std::nullopt;
      out.add(e.args[0].head, static_cast<int>(r));
    } else if (e.is_leaf()) {
      out.add(e.head, -1);
    } else {
      return std::nullopt;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tests: boolean expressions over predicate symbols.
// ---------------------------------------------------------------------------

struct Test {
  enum class Kind { True, False, Pred, Not, And, Or };
  Kind kind = Kind::True;
  Term pred;                // for Kind::Pred
  std::vector<Test> kids;   // Not: 1; And/Or: 2+

  static Test truth() { return Test{}; }
  static Test falsity() {
    Test t;
    t.kind = Kind::False;
    return t;
  }
  static Test leaf(Term p) {
    Test t;
    t.kind = Kind::Pred;
    t.pred = std::move(p);
    return t;
  }
  static Test negate(Test inner) {
    Test t;
    t.kind = Kind::Not;
    t.kids.push_back(std::move(inner));
    return t;
  }
  static Test conj(std::vector<Test> kids) {
    if (kids.empty()) return truth();
    if (kids.size() == 1) return std::move(kids[0]);
    Test t;
    t.kind = Kind::And;
    t.kids = std::move(kids);
    return t;
  }
  static Test disj(std::vector<Test> kids) {
    if (kids.empty()) return falsity();
    if (kids.size() == 1) return std::move(kids[0]);
    Test t;
    t.kind = Kind::Or;
    t.kids = std::move(kids);
    return t;
  }

  bool is_true() const { return kind == Kind::True; }
  bool is_false() const { return kind == Kind::False; }

  friend bool operator==(const Test& a, const Test& b) {
    return a.kind == b.kind && a.pred == b.pred && a.kids == b.kids;
  }

  void collect_preds(std::vector<Term>& out) const {
    if (kind == Kind::Pred) out.push_back(pred);
    for (const Test& k : kids) k.collect_preds(out);
  }
};

inline std::uint64_t test_hash(const Test& t) {
  std::uint64_t h = static_cast<std::uint64_t>(t.kind) + 1;
  h = hash_combine(h, term_hash(t.pred));
  for (const Test& k : t.kids) h = hash_combine(h, test_hash(k));
  return h;
}

inline std::string test_to_string(const Test& t, int prec = 0) {
  switch (t.kind) {
    case Test::Kind::True:
      return "true";
    case Test::Kind::False:
      return "false";
    case Test::Kind::Pred:
      return term_to_string(t.pred);
    case Test::Kind::Not: {
      std::string inner = test_to_string(t.kids[0], 3);
      return "not " + inner;
    }
    case Test::Kind::And: {
      std::string s;
      for (size_t i = 0; i < t.kids.size(); ++i) {
        if (i) s += " and ";
        s += test_to_string(t.kids[i], 2);
      }
      return prec > 1 ? "(" + s + ")" : s;
    }
    case Test::Kind::Or: {
      std::string s;
      for (size_t i = 0; i < t.kids.size(); ++i) {
        if (i) s += " or ";
        s += test_to_string(t.kids[i], 1);
      }
      return prec > 0 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Storage types.
//
// A storage type supplies configurations together with the meanings of its
// predicate, instruction and encoding symbols. Symbol sets are open-ended
// (membership functions rather than finite sets); the built-in types admit
// any symbol drawn from the grammar text. Values are immutable and the
// interpreter is pure, so storage types are safe to share across workers.
// ---------------------------------------------------------------------------

class StorageType;
using StoragePtr = std::shared_ptr<const StorageType>;
struct LookaheadInfo;  // defined in lookahead.hpp

class StorageType {
 public:
  std::string name;
  Term expr;                        // surface expression, e.g. pd(tree)
  bool noetherian = false;          // declared, not inferred
  std::optional<Term> identity;     // an instruction meaning id(C), if any
  StoragePtr identity_base;         // set by with_identity
  StoragePtr pd_base;               // set by pushdown_of
  std::shared_ptr<const LookaheadInfo> lookahead;  // set by with_lookahead

  std::function<bool(const Term&)> has_pred;
  std::function<bool(const Term&)> has_instr;
  std::function<bool(const Term&)> has_enc;
  std::function<Tri(const Term&, const Value&)> pred;
  std::function<std::optional<Value>(const Term&, const Value&)> instr;
  std::function<std::optional<Value>(const Term&, const InputElement&)> enc;
  // Known mutual exclusivity of predicate symbols (sound, not complete).
  std::function<bool(const Term&, const Term&)> exclusive;
  // Kind of input element expected by an encoding symbol.
  std::function<InputElement::Kind(const Term&)> input_kind;
  // All input elements of size <= bound for an encoding, in size order.
  std::function<std::vector<InputElement>(const Term&, int)> enumerate_inputs;

  bool has_identity() const { return identity.has_value(); }
  bool singleton_input(const Term& e) const {
    return input_kind(e) == InputElement::Kind::Unit;
  }
  // r-acceptor determinism of the storage relative to a grammar's encoding:
  // an identity exists and the input set is a singleton.
  bool racceptor_deterministic(const Term& e) const {
    return has_identity() && singleton_input(e);
  }
};

inline Tri eval_pred(const StorageType& s, const Term& p, const Value& c) {
  return s.pred(p, c);
}

inline Tri eval_test(const Test& t, const Value& c, const StorageType& s) {
  switch (t.kind) {
    case Test::Kind::True:
      return Tri::True;
    case Test::Kind::False:
      return Tri::False;
    case Test::Kind::Pred:
      return s.pred(t.pred, c);
    case Test::Kind::Not: {
      Tri v = eval_test(t.kids[0], c, s);
      if (v == Tri::Unknown) return v;
      return v == Tri::True ? Tri::False : Tri::True;
    }
    case Test::Kind::And: {
      bool unknown = false;
      for (const Test& k : t.kids) {
        Tri v = eval_test(k, c, s);
        if (v == Tri::False) return Tri::False;
        if (v == Tri::Unknown) unknown = true;
      }
      return unknown ? Tri::Unknown : Tri::True;
    }
    case Test::Kind::Or: {
      bool unknown = false;
      for (const Test& k : t.kids) {
        Tri v = eval_test(k, c, s);
        if (v == Tri::True) return Tri::True;
        if (v == Tri::Unknown) unknown = true;
      }
      return unknown ? Tri::Unknown : Tri::False;
    }
  }
  return Tri::False;
}

inline std::optional<Value> apply_instruction(const Term& f, const Value& c,
                                              const StorageType& s) {
  return s.instr(f, c);
}

// Applies an instruction chain f1;...;fk left to right; Undefined at any
// prefix makes the whole chain Undefined.
inline std::optional<Value> apply_chain(const std::vector<Term>& chain,
                                        const Value& c, const StorageType& s) {
  Value cur = c;
  for (const Term& f : chain) {
    auto next = s.instr(f, cur);
    if (!next) return std::nullopt;
    cur = std::move(*next);
  }
  return cur;
}

inline std::optional<Value> encode(const Term& e, const InputElement& u,
                                   const StorageType& s) {
  return s.enc(e, u);
}

// ---------------------------------------------------------------------------
// Helpers shared by the builtin definitions.
// ---------------------------------------------------------------------------

namespace detail {

inline const Sym& sym_id() { static Sym s("id"); return s; }
inline const Sym& sym_en() { static Sym s("en"); return s; }
inline const Sym& sym_top() { static Sym s("top="); return s; }
inline const Sym& sym_bottom() { static Sym s("bottom"); return s; }
inline const Sym& sym_push() { static Sym s("push"); return s; }
inline const Sym& sym_pop() { static Sym s("pop"); return s; }
inline const Sym& sym_stay() { static Sym s("stay"); return s; }
inline const Sym& sym_null() { static Sym s("null"); return s; }
inline const Sym& sym_dec() { static Sym s("dec"); return s; }
inline const Sym& sym_first() { static Sym s("first="); return s; }
inline const Sym& sym_empty() { static Sym s("empty"); return s; }
inline const Sym& sym_read() { static Sym s("read"); return s; }
inline const Sym& sym_root_eq() { static Sym s("root="); return s; }
inline const Sym& sym_root() { static Sym s("root"); return s; }
inline const Sym& sym_sel() { static Sym s("sel"); return s; }
inline const Sym& sym_label() { static Sym s("label="); return s; }
inline const Sym& sym_son() { static Sym s("son="); return s; }
inline const Sym& sym_down() { static Sym s("down"); return s; }
inline const Sym& sym_up() { static Sym s("up"); return s; }
inline const Sym& sym_expand() { static Sym s("expand"); return s; }
inline const Sym& sym_test() { static Sym s("test"); return s; }
inline const Sym& sym_acc() { static Sym s("acc"); return s; }
inline const Sym& sym_unary() { static Sym s("unary"); return s; }
inline const Sym& sym_fst() { static Sym s("fst"); return s; }
inline const Sym& sym_snd() { static Sym s("snd"); return s; }
inline const Sym& sym_left() { static Sym s("left."); return s; }
inline const Sym& sym_right() { static Sym s("right."); return s; }

inline bool is_leaf_named(const Term& t, const Sym& s) {
  return t.is_leaf() && t.head == s;
}

// Enumerates all strings over sigma of length <= bound, in length order and
// declaration order within a length.
inline std::vector<InputElement> enumerate_strings(
    const std::vector<Sym>& sigma, int bound) {
  std::vector<InputElement> out;
  std::vector<std::vector<Sym>> level = {{}};
  out.push_back(InputElement::string({}));
  for (int len = 1; len <= bound; ++len) {
    std::vector<std::vector<Sym>> next;
    for (auto& w : level)
      for (Sym a : sigma) {
        std::vector<Sym> w2 = w;
        w2.push_back(a);
        out.push_back(InputElement::string(w2));
        next.push_back(std::move(w2));
      }
    level = std::move(next);
    if (level.empty()) break;
  }
  return out;
}

// Enumerates all well-ranked trees over sigma with <= bound nodes, smallest
// first.
inline std::vector<TreePtr> enumerate_trees(const RankedAlphabet& sigma,
                                            int bound) {
  // by_size[s] lists trees of exactly s nodes.
  std::vector<std::vector<TreePtr>> by_size(bound + 1);
  for (int s = 1; s <= bound; ++s) {
    for (auto& e : sigma.entries) {
      int k = e.second;
      if (k < 0) k = 0;
      if (k == 0) {
        if (s == 1) by_size[s].push_back(make_tree(e.first));
        continue;
      }
      // Distribute s-1 nodes over k children, each >= 1.
      std::vector<std::vector<TreePtr>> stack;
      std::function<void(int, int, std::vector<TreePtr>&)> go =
          [&](int child, int left, std::vector<TreePtr>& acc) {
            if (child == k) {
              if (left == 0)
                by_size[s].push_back(make_tree(e.first, acc));
              return;
            }
            int remaining_children = k - child - 1;
            for (int sz = 1; sz <= left - remaining_children; ++sz) {
              for (const TreePtr& t : by_size[sz]) {
                acc.push_back(t);
                go(child + 1, left - sz, acc);
                acc.pop_back();
              }
            }
          };
      std::vector<TreePtr> acc;
      if (s - 1 >= k) go(0, s - 1, acc);
    }
  }
  std::vector<TreePtr> out;
  for (int s = 1; s <= bound; ++s)
    for (auto& t : by_size[s]) out.push_back(t);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builtin storage types.
// ---------------------------------------------------------------------------

// The trivial storage type: a single configuration, no predicates, only the
// identity instruction.
inline StoragePtr trivial_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "s0";
  s->expr = Term("s0");
  s->noetherian = false;
  s->identity = Term(sym_id());
  static const Sym c0("c0");
  s->has_pred = [](const Term&) { return false; };
  s->has_instr = [](const Term& f) { return is_leaf_named(f, sym_id()); };
  s->has_enc = [](const Term& e) { return is_leaf_named(e, sym_en()); };
  s->pred = [](const Term&, const Value&) { return Tri::False; };
  s->instr = [](const Term& f, const Value& c) -> std::optional<Value> {
    if (is_leaf_named(f, sym_id())) return c;
    return std::nullopt;
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    if (!is_leaf_named(e, sym_en())) return std::nullopt;
    if (u.kind() != InputElement::Kind::Unit) return std::nullopt;
    return Value::atom(c0);
  };
  s->exclusive = [](const Term&, const Term&) { return false; };
  s->input_kind = [](const Term&) { return InputElement::Kind::Unit; };
  s->enumerate_inputs = [](const Term&, int) {
    return std::vector<InputElement>{InputElement::unit()};
  };
  return s;
}

namespace detail {

// Shared implementation of Pushdown and Counter (Counter fixes the alphabet
// to {g0}). Configurations are nonempty atom strings, top at the head.
inline StoragePtr pushdown_like(bool counter) {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = counter ? "counter" : "pushdown";
  s->expr = Term(s->name);
  s->noetherian = false;
  s->identity = Term(sym_stay());
  static const Sym g0("g0");
  auto sym_ok = [counter](const Term& t) {
    return t.is_leaf() && (!counter || t.head == g0);
  };
  s->has_pred = [sym_ok](const Term& p) {
    if (p.head == sym_top() && p.args.size() == 1) return sym_ok(p.args[0]);
    return is_leaf_named(p, sym_bottom());
  };
  s->has_instr = [sym_ok](const Term& f) {
    if (f.head == sym_push() && f.args.size() == 1) return sym_ok(f.args[0]);
    if (f.head == sym_stay() && f.args.size() == 1) return sym_ok(f.args[0]);
    return is_leaf_named(f, sym_pop()) || is_leaf_named(f, sym_stay());
  };
  s->has_enc = [sym_ok, counter](const Term& e) {
    if (e.head == sym_unary() && e.args.size() == 2 && !counter)
      return e.args[0].is_leaf() && e.args[1].is_leaf();
    return sym_ok(e);
  };
  s->pred = [](const Term& p, const Value& c) -> Tri {
    const StrPtr& st = c.as_str();
    if (p.head == sym_top()) return tri_of(st->head == p.args[0].head);
    return tri_of(st->tail == nullptr);  // bottom
  };
  s->instr = [](const Term& f, const Value& c) -> std::optional<Value> {
    const StrPtr& st = c.as_str();
    if (f.head == sym_push()) {
      return Value::string(cons(f.args[0].head, st));
    }
    if (f.head == sym_pop()) {
      if (!st->tail) return std::nullopt;
      return Value::string(st->tail);
    }
    if (f.head == sym_stay()) {
      if (f.args.empty()) return c;
      return Value::string(cons(f.args[0].head, st->tail));
    }
    return std::nullopt;
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    if (e.head == sym_unary()) {
      // Artifact encoding family: unary(g,d) encodes integer n as g^n d.
      if (u.kind() != InputElement::Kind::Int || u.as_int() < 0)
        return std::nullopt;
      StrPtr st = cons(e.args[1].head, nullptr);
      for (long long i = 0; i < u.as_int(); ++i)
        st = cons(e.args[0].head, st);
      return Value::string(st);
    }
    if (u.kind() != InputElement::Kind::Unit) return std::nullopt;
    return Value::string(cons(e.head, nullptr));
  };
  s->exclusive = [](const Term& p, const Term& q) {
    return p.head == sym_top() && q.head == sym_top() &&
           p.args[0].head != q.args[0].head;
  };
  s->input_kind = [](const Term& e) {
    return e.head == sym_unary() ? InputElement::Kind::Int
                                 : InputElement::Kind::Unit;
  };
  s->enumerate_inputs = [](const Term& e, int bound) {
    std::vector<InputElement> out;
    if (e.head == sym_unary()) {
      for (int n = 0; n <= bound; ++n) out.push_back(InputElement::integer(n));
    } else {
      out.push_back(InputElement::unit());
    }
    return out;
  };
  return s;
}

}  // namespace detail

inline StoragePtr pushdown_storage() { return detail::pushdown_like(false); }
inline StoragePtr counter_storage() {
  auto s = detail::pushdown_like(true);
  return s;
}

// Count-down: nonnegative integers with the null test and dec.
inline StoragePtr countdown_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "countdown";
  s->expr = Term("countdown");
  s->noetherian = true;
  s->has_pred = [](const Term& p) { return is_leaf_named(p, sym_null()); };
  s->has_instr = [](const Term& f) { return is_leaf_named(f, sym_dec()); };
  s->has_enc = [](const Term& e) { return is_leaf_named(e, sym_en()); };
  s->pred = [](const Term&, const Value& c) { return tri_of(c.as_int() == 0); };
  s->instr = [](const Term&, const Value& c) -> std::optional<Value> {
    if (c.as_int() == 0) return std::nullopt;
    return Value::integer(c.as_int() - 1);
  };
  s->enc = [](const Term&, const InputElement& u) -> std::optional<Value> {
    if (u.kind() != InputElement::Kind::Int || u.as_int() < 0)
      return std::nullopt;
    return Value::integer(u.as_int());
  };
  s->exclusive = [](const Term&, const Term&) { return false; };
  s->input_kind = [](const Term&) { return InputElement::Kind::Int; };
  s->enumerate_inputs = [](const Term&, int bound) {
    std::vector<InputElement> out;
    for (int n = 0; n <= bound; ++n) out.push_back(InputElement::integer(n));
    return out;
  };
  return s;
}

// One-way: an input string read left to right, symbol by symbol. Encodings
// are finite alphabets, acting as the identity on strings over them.
inline StoragePtr oneway_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "oneway";
  s->expr = Term("oneway");
  s->noetherian = true;
  s->has_pred = [](const Term& p) {
    if (p.head == sym_first() && p.args.size() == 1) return true;
    return is_leaf_named(p, sym_empty());
  };
  s->has_instr = [](const Term& f) { return is_leaf_named(f, sym_read()); };
  s->has_enc = [](const Term& e) {
    return alphabet_of_term(e).has_value();
  };
  s->pred = [](const Term& p, const Value& c) -> Tri {
    const StrPtr& st = c.as_str();
    if (p.head == sym_first())
      return tri_of(st && st->head == p.args[0].head);
    return tri_of(st == nullptr);  // empty
  };
  s->instr = [](const Term&, const Value& c) -> std::optional<Value> {
    const StrPtr& st = c.as_str();
    if (!st) return std::nullopt;
    return Value::string(st->tail);
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    auto sigma = alphabet_of_term(e);
    if (!sigma || u.kind() != InputElement::Kind::Str) return std::nullopt;
    for (Sym a : u.as_str())
      if (!sigma->contains(a)) return std::nullopt;
    return Value::string(str_of(u.as_str()));
  };
  s->exclusive = [](const Term& p, const Term& q) {
    bool pf = p.head == sym_first(), qf = q.head == sym_first();
    if (pf && qf) return p.args[0].head != q.args[0].head;
    // first=a excludes empty and vice versa.
    return (pf && is_leaf_named(q, sym_empty())) ||
           (qf && is_leaf_named(p, sym_empty()));
  };
  s->input_kind = [](const Term&) { return InputElement::Kind::Str; };
  s->enumerate_inputs = [](const Term& e, int bound) {
    auto sigma = alphabet_of_term(e);
    std::vector<Sym> syms;
    if (sigma)
      for (auto& en : sigma->entries) syms.push_back(en.first);
    return enumerate_strings(syms, bound);
  };
  return s;
}

// Tree: an input tree read from the top down; sel(i) selects the i-th
// subtree. Encodings are finite ranked alphabets.
inline StoragePtr tree_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "tree";
  s->expr = Term("tree");
  s->noetherian = true;
  s->has_pred = [](const Term& p) {
    return p.head == sym_root_eq() && p.args.size() == 1;
  };
  s->has_instr = [](const Term& f) {
    long long i;
    return f.head == sym_sel() && f.args.size() == 1 &&
           term_to_int(f.args[0], i) && i >= 1;
  };
  s->has_enc = [](const Term& e) { return alphabet_of_term(e).has_value(); };
  s->pred = [](const Term& p, const Value& c) -> Tri {
    return tri_of(c.as_tree()->label == p.args[0].head);
  };
  s->instr = [](const Term& f, const Value& c) -> std::optional<Value> {
    long long i;
    term_to_int(f.args[0], i);
    const TreePtr& t = c.as_tree();
    if (i < 1 || static_cast<size_t>(i) > t->children.size())
      return std::nullopt;
    return Value::tree(t->children[i - 1]);
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    auto sigma = alphabet_of_term(e);
    if (!sigma || u.kind() != InputElement::Kind::Tree) return std::nullopt;
    if (!tree_well_ranked(u.as_tree(), *sigma)) return std::nullopt;
    return Value::tree(u.as_tree());
  };
  s->exclusive = [](const Term& p, const Term& q) {
    return p.head == sym_root_eq() && q.head == sym_root_eq() &&
           p.args[0].head != q.args[0].head;
  };
  s->input_kind = [](const Term&) { return InputElement::Kind::Tree; };
  s->enumerate_inputs = [](const Term& e, int bound) {
    std::vector<InputElement> out;
    auto sigma = alphabet_of_term(e);
    if (sigma)
      for (auto& t : enumerate_trees(*sigma, bound))
        out.push_back(InputElement::tree(t));
    return out;
  };
  return s;
}

// Tree-walk: a focus walking over an input tree along its edges.
inline StoragePtr treewalk_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "treewalk";
  s->expr = Term("treewalk");
  s->noetherian = false;
  s->identity = Term(sym_stay());
  s->has_pred = [](const Term& p) {
    if (p.head == sym_label() && p.args.size() == 1) return true;
    if (p.head == sym_son() && p.args.size() == 1) {
      long long i;
      return term_to_int(p.args[0], i) && i >= 1;
    }
    return is_leaf_named(p, sym_root());
  };
  s->has_instr = [](const Term& f) {
    if (f.head == sym_down() && f.args.size() == 1) {
      long long i;
      return term_to_int(f.args[0], i) && i >= 1;
    }
    return is_leaf_named(f, sym_up()) || is_leaf_named(f, sym_stay());
  };
  s->has_enc = [](const Term& e) { return alphabet_of_term(e).has_value(); };
  s->pred = [](const Term& p, const Value& c) -> Tri {
    const Focus& fc = c.as_focus();
    const TreeNode* node = fc.tree.get();
    for (uint32_t i : *fc.path) node = node->children[i - 1].get();
    if (p.head == sym_label()) return tri_of(node->label == p.args[0].head);
    if (p.head == sym_son()) {
      long long i;
      term_to_int(p.args[0], i);
      return tri_of(!fc.path->empty() &&
                    fc.path->back() == static_cast<uint32_t>(i));
    }
    return tri_of(fc.path->empty());  // root
  };
  s->instr = [](const Term& f, const Value& c) -> std::optional<Value> {
    const Focus& fc = c.as_focus();
    if (is_leaf_named(f, sym_stay())) return c;
    if (is_leaf_named(f, sym_up())) {
      if (fc.path->empty()) return std::nullopt;
      std::vector<uint32_t> p(*fc.path);
      p.pop_back();
      return Value::focus(fc.tree, std::move(p));
    }
    long long i;
    term_to_int(f.args[0], i);
    const TreeNode* node = fc.tree.get();
    for (uint32_t j : *fc.path) node = node->children[j - 1].get();
    if (i < 1 || static_cast<size_t>(i) > node->children.size())
      return std::nullopt;
    std::vector<uint32_t> p(*fc.path);
    p.push_back(static_cast<uint32_t>(i));
    return Value::focus(fc.tree, std::move(p));
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    auto sigma = alphabet_of_term(e);
    if (!sigma || u.kind() != InputElement::Kind::Tree) return std::nullopt;
    if (!tree_well_ranked(u.as_tree(), *sigma)) return std::nullopt;
    return Value::focus(u.as_tree(), {});
  };
  s->exclusive = [](const Term& p, const Term& q) {
    if (p.head == sym_label() && q.head == sym_label())
      return p.args[0].head != q.args[0].head;
    if (p.head == sym_son() && q.head == sym_son())
      return !(p.args[0] == q.args[0]);
    // The root is nobody's son.
    auto is_root = [](const Term& t) { return is_leaf_named(t, sym_root()); };
    return (is_root(p) && q.head == sym_son()) ||
           (is_root(q) && p.head == sym_son());
  };
  s->input_kind = [](const Term&) { return InputElement::Kind::Tree; };
  s->enumerate_inputs = [](const Term& e, int bound) {
    std::vector<InputElement> out;
    auto sigma = alphabet_of_term(e);
    if (sigma)
      for (auto& t : enumerate_trees(*sigma, bound))
        out.push_back(InputElement::tree(t));
    return out;
  };
  return s;
}

namespace detail {

// Substitutes subtrees for the variables y1..yk in an expand template.
// Returns nullptr if a variable exceeds the available subtrees.
inline TreePtr expand_template(const Term& zeta,
                               const std::vector<TreePtr>& subs) {
  const std::string& h = zeta.head.str();
  if (zeta.is_leaf() && h.size() >= 2 && h[0] == 'y') {
    bool digits = true;
    for (size_t i = 1; i < h.size(); ++i)
      if (!isdigit(static_cast<unsigned char>(h[i]))) digits = false;
    if (digits) {
      size_t i = std::stoul(h.substr(1));
      if (i < 1 || i > subs.size()) return nullptr;
      return subs[i - 1];
    }
  }
  std::vector<TreePtr> kids;
  for (const Term& a : zeta.args) {
    TreePtr k = expand_template(a, subs);
    if (!k) return nullptr;
    kids.push_back(std::move(k));
  }
  return make_tree(zeta.head, std::move(kids));
}

}  // namespace detail

// Tree-pushdown: a tree whose root may be replaced by any tree piece, with
// subtrees bound to variables.
inline StoragePtr treepushdown_storage() {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "treepushdown";
  s->expr = Term("treepushdown");
  s->noetherian = false;
  s->has_pred = [](const Term& p) {
    return p.head == sym_root_eq() && p.args.size() == 1;
  };
  s->has_instr = [](const Term& f) {
    return f.head == sym_expand() && f.args.size() == 1;
  };
  s->has_enc = [](const Term& e) { return e.is_leaf(); };
  s->pred = [](const Term& p, const Value& c) -> Tri {
    return tri_of(c.as_tree()->label == p.args[0].head);
  };
  s->instr = [](const Term& f, const Value& c) -> std::optional<Value> {
    const TreePtr& t = c.as_tree();
    TreePtr out = expand_template(f.args[0], t->children);
    if (!out) return std::nullopt;
    return Value::tree(out);
  };
  s->enc = [](const Term& e, const InputElement& u) -> std::optional<Value> {
    if (u.kind() != InputElement::Kind::Unit) return std::nullopt;
    return Value::tree(make_tree(e.head));
  };
  s->exclusive = [](const Term& p, const Term& q) {
    return p.head == sym_root_eq() && q.head == sym_root_eq() &&
           p.args[0].head != q.args[0].head;
  };
  s->input_kind = [](const Term&) { return InputElement::Kind::Unit; };
  s->enumerate_inputs = [](const Term&, int) {
    return std::vector<InputElement>{InputElement::unit()};
  };
  return s;
}

// ---------------------------------------------------------------------------
// Combinators.
// ---------------------------------------------------------------------------

// S with identity: adds a fresh instruction symbol `id` meaning the identity.
// Defined even if the base already has one.
inline StoragePtr with_identity(StoragePtr base) {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = base->name + "+id";
  s->expr = Term("+id", {base->expr});
  s->noetherian = false;  // id chains never terminate
  s->identity = Term(sym_id());
  s->identity_base = base;
  s->has_pred = base->has_pred;
  s->has_instr = [base](const Term& f) {
    return is_leaf_named(f, sym_id()) || base->has_instr(f);
  };
  s->has_enc = base->has_enc;
  s->pred = base->pred;
  s->instr = [base](const Term& f, const Value& c) -> std::optional<Value> {
    if (is_leaf_named(f, sym_id())) return c;
    return base->instr(f, c);
  };
  s->enc = base->enc;
  s->exclusive = base->exclusive;
  s->input_kind = base->input_kind;
  s->enumerate_inputs = base->enumerate_inputs;
  return s;
}

// Product of two storage types. Configurations are fst/snd-tagged pair
// sequences; instructions and encodings are pairs applied component-wise;
// predicates belong to one side, qualified with left./right. on collision.
// At most one side may take non-unit input elements.
inline StoragePtr product(StoragePtr s1, StoragePtr s2) {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = "product(" + s1->name + ", " + s2->name + ")";
  s->expr = Term("product", {s1->expr, s2->expr});
  s->noetherian = s1->noetherian || s2->noetherian;
  if (s1->identity && s2->identity)
    s->identity = Term(Sym(), {*s1->identity, *s2->identity});

  // Strips a left./right. qualifier; side 0 = unqualified.
  auto resolve = [](const Term& p) -> std::pair<int, Term> {
    const std::string& h = p.head.str();
    if (h.rfind("left.", 0) == 0)
      return {1, Term(Sym(h.substr(5)), p.args)};
    if (h.rfind("right.", 0) == 0)
      return {2, Term(Sym(h.substr(6)), p.args)};
    return {0, p};
  };
  auto side_of = [s1, s2, resolve](const Term& p) -> std::pair<int, Term> {
    auto [q, stripped] = resolve(p);
    if (q == 1) return s1->has_pred(stripped) ? std::make_pair(1, stripped)
                                              : std::make_pair(0, Term());
    if (q == 2) return s2->has_pred(stripped) ? std::make_pair(2, stripped)
                                              : std::make_pair(0, Term());
    bool in1 = s1->has_pred(p), in2 = s2->has_pred(p);
    if (in1 && !in2) return {1, p};
    if (in2 && !in1) return {2, p};
    return {0, Term()};  // ambiguous or unknown: must qualify
  };

  s->has_pred = [side_of](const Term& p) { return side_of(p).first != 0; };
  s->has_instr = [s1, s2](const Term& f) {
    return f.is_tuple() && f.args.size() == 2 && s1->has_instr(f.args[0]) &&
           s2->has_instr(f.args[1]);
  };
  s->has_enc = [s1, s2](const Term& e) {
    return e.is_tuple() && e.args.size() == 2 && s1->has_enc(e.args[0]) &&
           s2->has_enc(e.args[1]);
  };
  auto first_of = [](const Value& c) -> const Value& {
    return c.as_pairs()->value;
  };
  auto second_of = [](const Value& c) -> const Value& {
    return c.as_pairs()->tail->value;
  };
  s->pred = [s1, s2, side_of, first_of, second_of](const Term& p,
                                                   const Value& c) -> Tri {
    auto [side, stripped] = side_of(p);
    if (side == 1) return s1->pred(stripped, first_of(c));
    return s2->pred(stripped, second_of(c));
  };
  s->instr = [s1, s2, first_of, second_of](
                 const Term& f, const Value& c) -> std::optional<Value> {
    auto v1 = s1->instr(f.args[0], first_of(c));
    if (!v1) return std::nullopt;
    auto v2 = s2->instr(f.args[1], second_of(c));
    if (!v2) return std::nullopt;
    return Value::pair_seq(pair_cons(
        sym_fst(), std::move(*v1),
        pair_cons(sym_snd(), std::move(*v2), nullptr)));
  };
  s->enc = [s1, s2](const Term& e, const InputElement& u)
      -> std::optional<Value> {
    bool unit1 = s1->singleton_input(e.args[0]);
    bool unit2 = s2->singleton_input(e.args[1]);
    auto v1 = s1->enc(e.args[0], unit1 ? InputElement::unit() : u);
    if (!v1) return std::nullopt;
    auto v2 = s2->enc(e.args[1], unit2 ? InputElement::unit() : u);
    if (!v2) return std::nullopt;
    return Value::pair_seq(pair_cons(
        sym_fst(), std::move(*v1),
        pair_cons(sym_snd(), std::move(*v2), nullptr)));
  };
  s->exclusive = [s1, s2, side_of](const Term& p, const Term& q) {
    auto [ps, pt] = side_of(p);
    auto [qs, qt] = side_of(q);
    if (ps == 0 || ps != qs) return false;
    return ps == 1 ? s1->exclusive(pt, qt) : s2->exclusive(pt, qt);
  };
  s->input_kind = [s1, s2](const Term& e) {
    auto k1 = s1->input_kind(e.args[0]);
    if (k1 != InputElement::Kind::Unit) return k1;
    return s2->input_kind(e.args[1]);
  };
  s->enumerate_inputs = [s1, s2](const Term& e, int bound) {
    if (s1->input_kind(e.args[0]) != InputElement::Kind::Unit)
      return s1->enumerate_inputs(e.args[0], bound);
    return s2->enumerate_inputs(e.args[1], bound);
  };
  return s;
}

// Pushdown of S: a pushdown whose cells hold a symbol and an S-configuration.
// `pure` restricts the pushdown alphabet to {g0}. stay(g,f) instructions are
// an optional extension, off by default.
inline StoragePtr pushdown_of(StoragePtr base, bool pure = false,
                              bool with_stay_f = false) {
  using namespace detail;
  auto s = std::make_shared<StorageType>();
  s->name = (pure ? "pdp(" : "pd(") + base->name + ")";
  s->expr = Term(pure ? "pdp" : "pd", {base->expr});
  s->noetherian = false;
  s->identity = Term(sym_stay());
  s->pd_base = base;
  static const Sym g0("g0");
  auto sym_ok = [pure](const Term& t) {
    return t.is_leaf() && (!pure || t.head == g0);
  };
  s->has_pred = [base, sym_ok](const Term& p) {
    if (p.head == sym_top() && p.args.size() == 1) return sym_ok(p.args[0]);
    if (is_leaf_named(p, sym_bottom())) return true;
    if (p.head == sym_test() && p.args.size() == 1)
      return base->has_pred(p.args[0]);
    return false;
  };
  s->has_instr = [base, sym_ok, with_stay_f](const Term& f) {
    if (f.head == sym_push() && f.args.size() == 2)
      return sym_ok(f.args[0]) && base->has_instr(f.args[1]);
    if (f.head == sym_stay() && f.args.size() == 1) return sym_ok(f.args[0]);
    if (with_stay_f && f.head == sym_stay() && f.args.size() == 2)
      return sym_ok(f.args[0]) && base->has_instr(f.args[1]);
    return is_leaf_named(f, sym_pop()) || is_leaf_named(f, sym_stay());
  };
  s->has_enc = [base, sym_ok](const Term& e) {
    return e.is_tuple() && e.args.size() == 2 && sym_ok(e.args[0]) &&
           base->has_enc(e.args[1]);
  };
  s->pred = [base](const Term& p, const Value& c) -> Tri {
    const PairSeqPtr& ps = c.as_pairs();
    if (p.head == sym_top()) return tri_of(ps->tag == p.args[0].head);
    if (p.head == sym_test()) return base->pred(p.args[0], ps->value);
    return tri_of(ps->tail == nullptr);  // bottom
  };
  s->instr = [base](const Term& f, const Value& c) -> std::optional<Value> {
    const PairSeqPtr& ps = c.as_pairs();
    if (f.head == sym_push()) {
      auto v = base->instr(f.args[1], ps->value);
      if (!v) return std::nullopt;
      return Value::pair_seq(pair_cons(f.args[0].head, std::move(*v), ps));
    }
    if (f.head == sym_pop()) {
      if (!ps->tail) return std::nullopt;
      return Value::pair_seq(ps->tail);
    }
    if (f.head == sym_stay()) {
      if (f.args.empty()) return c;
      if (f.args.size() == 1)
        return Value::pair_seq(
            pair_cons(f.args[0].head, ps->value, ps->tail));
      auto v = base->instr(f.args[1], ps->value);
      if (!v) return std::nullopt;
      return Value::pair_seq(
          pair_cons(f.args[0].head, std::move(*v), ps->tail));
    }
    return std::nullopt;
  };
  s->enc = [base](const Term& e, const InputElement& u)
      -> std::optional<Value> {
    auto v = base->enc(e.args[1], u);
    if (!v) return std::nullopt;
    return Value::pair_seq(pair_cons(e.args[0].head, std::move(*v), nullptr));
  };
  s->exclusive = [base](const Term& p, const Term& q) {
    if (p.head == sym_top() && q.head == sym_top())
      return p.args[0].head != q.args[0].head;
    if (p.head == sym_test() && q.head == sym_test())
      return base->exclusive(p.args[0], q.args[0]);
    return false;
  };
  s->input_kind = [base](const Term& e) {
    return base->input_kind(e.args[1]);
  };
  s->enumerate_inputs = [base](const Term& e, int bound) {
    return base->enumerate_inputs(e.args[1], bound);
  };
  return s;
}

inline StoragePtr pure_pushdown_of(StoragePtr base) {
  return pushdown_of(std::move(base), true);
}

// Pd^n(S0); iterate_pd(1) is Pushdown up to the constant second component.
inline StoragePtr iterate_pd(int n) {
  if (n < 0) fail(ErrorKind::Precondition, "pd^n requires n >= 0");
  StoragePtr s = trivial_storage();
  for (int i = 0; i < n; ++i) s = pushdown_of(s);
  auto out = std::make_shared<StorageType>(*s);
  out->expr = Term("pd^" + std::to_string(n));
  out->name = "pd^" + std::to_string(n);
  return out;
}

inline StoragePtr builtin_storage(const std::string& name) {
  if (name == "s0" || name == "trivial") return trivial_storage();
  if (name == "pushdown") return pushdown_storage();
  if (name == "counter" || name == "purepushdown") return counter_storage();
  if (name == "countdown") return countdown_storage();
  if (name == "oneway") return oneway_storage();
  if (name == "tree") return tree_storage();
  if (name == "treewalk") return treewalk_storage();
  if (name == "treepushdown") return treepushdown_storage();
  if (name.rfind("pd^", 0) == 0) {
    long long n;
    Term t(name.substr(3));
    if (term_to_int(t, n)) return iterate_pd(static_cast<int>(n));
  }
  fail(ErrorKind::Validation, "unknown storage type: " + name);
}

}  // namespace gws

#endif  // GWS_STORAGE_HPP
