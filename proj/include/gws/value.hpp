#ifndef GWS_VALUE_HPP
#define GWS_VALUE_HPP

#include <cassert>
#include <memory>
#include <optional>
#include <variant>

#include "gws/base.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Ranked trees, shared and immutable.
// ---------------------------------------------------------------------------

struct TreeNode;
using TreePtr = std::shared_ptr<const TreeNode>;

struct TreeNode {
  Sym label;
  std::vector<TreePtr> children;
};

inline TreePtr make_tree(Sym label, std::vector<TreePtr> children = {}) {
  auto n = std::make_shared<TreeNode>();
  n->label = label;
  n->children = std::move(children);
  return n;
}

inline size_t tree_size(const TreePtr& t) {
  size_t n = 1;
  for (const auto& c : t->children) n += tree_size(c);
  return n;
}

inline size_t tree_depth(const TreePtr& t) {
  size_t d = 0;
  for (const auto& c : t->children) d = std::max(d, tree_depth(c));
  return d + 1;
}

inline bool tree_equal(const TreePtr& a, const TreePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->label != b->label || a->children.size() != b->children.size())
    return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!tree_equal(a->children[i], b->children[i])) return false;
  return true;
}

inline std::uint64_t tree_hash(const TreePtr& t) {
  std::uint64_t h = t->label.id() + 0x51ULL;
  for (const auto& c : t->children) h = hash_combine(h, tree_hash(c));
  return h;
}

inline std::string tree_to_string(const TreePtr& t) {
  std::string s = t->label.str();
  if (!t->children.empty()) {
    s += '(';
    for (size_t i = 0; i < t->children.size(); ++i) {
      if (i) s += ',';
      s += tree_to_string(t->children[i]);
    }
    s += ')';
  }
  return s;
}

inline bool tree_less(const TreePtr& a, const TreePtr& b) {
  return tree_to_string(a) < tree_to_string(b);
}

// ---------------------------------------------------------------------------
// Symbol strings as persistent cons lists (top / first element at the head).
// nullptr is the empty string.
// ---------------------------------------------------------------------------

struct StrNode;
using StrPtr = std::shared_ptr<const StrNode>;

struct StrNode {
  Sym head;
  StrPtr tail;
};

inline StrPtr cons(Sym head, StrPtr tail) {
  auto n = std::make_shared<StrNode>();
  n->head = head;
  n->tail = std::move(tail);
  return n;
}

inline StrPtr str_of(const std::vector<Sym>& syms) {
  StrPtr s = nullptr;
  for (auto it = syms.rbegin(); it != syms.rend(); ++it) s = cons(*it, s);
  return s;
}

inline std::vector<Sym> str_to_vector(StrPtr s) {
  std::vector<Sym> out;
  for (; s; s = s->tail) out.push_back(s->head);
  return out;
}

inline bool str_equal(const StrPtr& a, const StrPtr& b) {
  const StrNode *x = a.get(), *y = b.get();
  while (x && y) {
    if (x == y) return true;
    if (x->head != y->head) return false;
    x = x->tail.get();
    y = y->tail.get();
  }
  return x == y;
}

inline std::uint64_t str_hash(const StrPtr& s) {
  std::uint64_t h = 0x517cc1b727220a95ULL;
  for (const StrNode* n = s.get(); n; n = n->tail.get())
    h = hash_combine(h, n->head.id());
  return h;
}

// ---------------------------------------------------------------------------
// Configurations.
//
// A configuration is a closed symbolic value: an atom, an integer, a string
// of atoms, a ranked tree, a focused tree (tree plus node), or a nonempty
// sequence of (atom, configuration) pairs. The pair-sequence form is shared
// by the pushdown-of-S combinator (cells) and by products (a two-entry
// sequence tagged fst/snd).
// ---------------------------------------------------------------------------

struct PairSeqNode;
using PairSeqPtr = std::shared_ptr<const PairSeqNode>;

class Value;

struct Focus {
  TreePtr tree;
  std::shared_ptr<const std::vector<uint32_t>> path;  // 1-based child indices
};

class Value {
 public:
  enum class Kind { Atom, Int, Str, Tree, Focus, PairSeq };

  static Value atom(Sym s) { return Value(s); }
  static Value integer(long long v) { return Value(v); }
  static Value string(StrPtr s) { return Value(std::move(s)); }
  static Value tree(TreePtr t) { return Value(std::move(t)); }
  static Value focus(TreePtr t, std::vector<uint32_t> path) {
    Focus f;
    f.tree = std::move(t);
    f.path = std::make_shared<const std::vector<uint32_t>>(std::move(path));
    return Value(std::move(f));
  }
  static Value focus(Focus f) { return Value(std::move(f)); }
  static Value pair_seq(PairSeqPtr p) { return Value(std::move(p)); }

  Kind kind() const { return static_cast<Kind>(data_.index()); }

  Sym as_atom() const { return std::get<Sym>(data_); }
  long long as_int() const { return std::get<long long>(data_); }
  const StrPtr& as_str() const { return std::get<StrPtr>(data_); }
  const TreePtr& as_tree() const { return std::get<TreePtr>(data_); }
  const Focus& as_focus() const { return std::get<Focus>(data_); }
  const PairSeqPtr& as_pairs() const { return std::get<PairSeqPtr>(data_); }

  bool operator==(const Value& other) const;
  bool operator!=(const Value& other) const { return !(*this == other); }
  std::uint64_t hash() const;
  std::string to_string() const;

 private:
  explicit Value(Sym s) : data_(s) {}
  explicit Value(long long v) : data_(v) {}
  explicit Value(StrPtr s) : data_(std::move(s)) {}
  explicit Value(TreePtr t) : data_(std::move(t)) {}
  explicit Value(Focus f) : data_(std::move(f)) {}
  explicit Value(PairSeqPtr p) : data_(std::move(p)) {}

  std::variant<Sym, long long, StrPtr, TreePtr, Focus, PairSeqPtr> data_;
};

struct PairSeqNode {
  Sym tag;
  Value value;
  PairSeqPtr tail;
  PairSeqNode(Sym t, Value v, PairSeqPtr rest)
      : tag(t), value(std::move(v)), tail(std::move(rest)) {}
};

inline PairSeqPtr pair_cons(Sym tag, Value v, PairSeqPtr tail) {
  return std::make_shared<PairSeqNode>(tag, std::move(v), std::move(tail));
}

inline bool Value::operator==(const Value& o) const {
  if (kind() != o.kind()) return false;
  switch (kind()) {
    case Kind::Atom:
      return as_atom() == o.as_atom();
    case Kind::Int:
      return as_int() == o.as_int();
    case Kind::Str:
      return str_equal(as_str(), o.as_str());
    case Kind::Tree:
      return tree_equal(as_tree(), o.as_tree());
    case Kind::Focus: {
      const Focus &a = as_focus(), &b = o.as_focus();
      return *a.path == *b.path && tree_equal(a.tree, b.tree);
    }
    case Kind::PairSeq: {
      const PairSeqNode *x = as_pairs().get(), *y = o.as_pairs().get();
      while (x && y) {
        if (x == y) return true;
        if (x->tag != y->tag || !(x->value == y->value)) return false;
        x = x->tail.get();
        y = y->tail.get();
      }
      return x == y;
    }
  }
  return false;
}

inline std::uint64_t Value::hash() const {
  std::uint64_t h = static_cast<std::uint64_t>(kind()) * 0x2545f4914f6cdd1dULL;
  switch (kind()) {
    case Kind::Atom:
      return hash_combine(h, as_atom().id());
    case Kind::Int:
      return hash_combine(h, static_cast<std::uint64_t>(as_int()));
    case Kind::Str:
      return hash_combine(h, str_hash(as_str()));
    case Kind::Tree:
      return hash_combine(h, tree_hash(as_tree()));
    case Kind::Focus: {
      h = hash_combine(h, tree_hash(as_focus().tree));
      for (uint32_t i : *as_focus().path) h = hash_combine(h, i);
      return h;
    }
    case Kind::PairSeq: {
      for (const PairSeqNode* n = as_pairs().get(); n; n = n->tail.get()) {
        h = hash_combine(h, n->tag.id());
        h = hash_combine(h, n->value.hash());
      }
      return h;
    }
  }
  return h;
}

inline std::string Value::to_string() const {
  switch (kind()) {
    case Kind::Atom:
      return as_atom().str();
    case Kind::Int:
      return std::to_string(as_int());
    case Kind::Str: {
      std::string s;
      for (const StrNode* n = as_str().get(); n; n = n->tail.get())
        s += n->head.str();
      return s;
    }
    case Kind::Tree:
      return tree_to_string(as_tree());
    case Kind::Focus: {
      std::string s = tree_to_string(as_focus().tree);
      s += " @";
      for (uint32_t i : *as_focus().path) {
        s += '.';
        s += std::to_string(i);
      }
      return s;
    }
    case Kind::PairSeq: {
      // A two-entry fst/snd sequence prints as a product pair.
      const PairSeqNode* n = as_pairs().get();
      static const Sym kFst("fst"), kSnd("snd");
      if (n && n->tag == kFst && n->tail && n->tail->tag == kSnd &&
          !n->tail->tail) {
        return "(" + n->value.to_string() + ", " +
               n->tail->value.to_string() + ")";
      }
      std::string s = "[";
      bool first = true;
      for (; n; n = n->tail.get()) {
        if (!first) s += ' ';
        first = false;
        s += '(';
        s += n->tag.str();
        s += ',';
        s += n->value.to_string();
        s += ')';
      }
      s += ']';
      return s;
    }
  }
  return "?";
}

struct ValueHash {
  size_t operator()(const Value& v) const { return v.hash(); }
};

// ---------------------------------------------------------------------------
// Input elements.
// ---------------------------------------------------------------------------

class InputElement {
 public:
  enum class Kind { Unit, Int, Str, Tree };

  static InputElement unit() { return InputElement(); }
  static InputElement integer(long long v) {
    InputElement e;
    e.data_ = v;
    return e;
  }
  static InputElement string(std::vector<Sym> syms) {
    InputElement e;
    e.data_ = std::move(syms);
    return e;
  }
  static InputElement tree(TreePtr t) {
    InputElement e;
    e.data_ = std::move(t);
    return e;
  }

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  long long as_int() const { return std::get<long long>(data_); }
  const std::vector<Sym>& as_str() const {
    return std::get<std::vector<Sym>>(data_);
  }
  const TreePtr& as_tree() const { return std::get<TreePtr>(data_); }

  size_t size() const {
    switch (kind()) {
      case Kind::Unit:
        return 0;
      case Kind::Int:
        return static_cast<size_t>(as_int() < 0 ? 0 : as_int());
      case Kind::Str:
        return as_str().size();
      case Kind::Tree:
        return tree_size(as_tree());
    }
    return 0;
  }

  std::string to_string() const {
    switch (kind()) {
      case Kind::Unit:
        return "()";
      case Kind::Int:
        return std::to_string(as_int());
      case Kind::Str: {
        std::string s;
        for (Sym x : as_str()) s += x.str();
        return s;
      }
      case Kind::Tree:
        return tree_to_string(as_tree());
    }
    return "?";
  }

 private:
  std::variant<std::monostate, long long, std::vector<Sym>, TreePtr> data_;
};

}  // namespace gws

#endif  // GWS_VALUE_HPP
