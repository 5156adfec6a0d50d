#ifndef GWS_BASE_HPP
#define GWS_BASE_HPP

#include <cctype>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gws {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind {
  Syntax,        // grammar text does not parse
  Validation,    // symbol/class/shape inconsistencies
  Precondition,  // an operation was called outside its contract
  Resource,      // search frontier or step budget exhausted
  Unknown,       // a look-ahead test could not be decided within its bound
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) {
  throw Error(k, msg);
}

// ---------------------------------------------------------------------------
// Interned symbols
//
// Every identifier in the system (nonterminals, terminals, pushdown symbols,
// predicate heads, ...) is an interned string. Symbol universes are
// open-ended: any name appearing in a grammar is admitted, so the "fixed
// infinite" alphabets are realized lazily.
// ---------------------------------------------------------------------------

class Sym {
 public:
  Sym() : id_(0) {}  // the empty symbol
  explicit Sym(std::string_view name) : id_(intern(name)) {}

  uint32_t id() const { return id_; }
  const std::string& str() const { return table().names[id_]; }
  bool empty() const { return id_ == 0; }

  friend bool operator==(Sym a, Sym b) { return a.id_ == b.id_; }
  friend bool operator!=(Sym a, Sym b) { return a.id_ != b.id_; }
  friend bool operator<(Sym a, Sym b) { return a.str() < b.str(); }

 private:
  struct Table {
    std::mutex mu;
    std::deque<std::string> names;  // stable references
    std::unordered_map<std::string_view, uint32_t> index;
    Table() {
      names.emplace_back("");
      index.emplace(names.back(), 0);
    }
  };
  static Table& table() {
    static Table t;
    return t;
  }
  static uint32_t intern(std::string_view name) {
    Table& t = table();
    std::lock_guard<std::mutex> lock(t.mu);
    auto it = t.index.find(name);
    if (it != t.index.end()) return it->second;
    t.names.emplace_back(name);
    uint32_t id = static_cast<uint32_t>(t.names.size() - 1);
    t.index.emplace(t.names.back(), id);
    return id;
  }

  uint32_t id_;
};

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

struct SymHash {
  size_t operator()(Sym s) const { return s.id() * 0x9e3779b97f4a7c15ULL; }
};

// ---------------------------------------------------------------------------
// Terms
//
// A Term is a small first-order term: predicate symbols (top=a, test(null),
// acc(g1)), instruction symbols (pop, push(a,dec), (id,stay), expand(...)),
// and encoding symbols ((A,en), {a,b,c}) are all Terms. A tuple is a Term
// with an empty head; an alphabet set has head "{}".
// ---------------------------------------------------------------------------

struct Term {
  Sym head;
  std::vector<Term> args;

  Term() = default;
  explicit Term(Sym h) : head(h) {}
  explicit Term(std::string_view h) : head(h) {}
  Term(Sym h, std::vector<Term> a) : head(h), args(std::move(a)) {}
  Term(std::string_view h, std::vector<Term> a)
      : head(h), args(std::move(a)) {}

  bool is_leaf() const { return args.empty(); }
  bool is_tuple() const { return head.empty() && !args.empty(); }

  friend bool operator==(const Term& a, const Term& b) {
    return a.head == b.head && a.args == b.args;
  }
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  friend bool operator<(const Term& a, const Term& b) {
    if (a.head != b.head) return a.head < b.head;
    return a.args < b.args;
  }
};

inline std::uint64_t term_hash(const Term& t) {
  std::uint64_t h = t.head.id() + 1;
  for (const Term& a : t.args) h = hash_combine(h, term_hash(a));
  return h;
}

struct TermHash {
  size_t operator()(const Term& t) const { return term_hash(t); }
};

// Identifier characters accepted by the grammar text format. Symbols with
// anything else (or empty names, or a leading digit) print quoted; '#'
// starts a comment, so the bottom marker is written "#".
inline bool ident_char(char c) {
  return isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '\'' || c == '^' || c == '~' || c == '$';
}

inline bool ident_needs_quotes(std::string_view s) {
  if (s.empty()) return true;
  if (s[0] == '<' && s.back() == '>') return false;  // angle identifiers
  for (char c : s)
    if (!ident_char(c)) return true;
  return false;
}

// Renders a term in the surface syntax: `top=a`, `push(a,dec)`, `(id,stay)`,
// `{a,b:2}`, bare heads as-is.
inline std::string term_to_string(const Term& t) {
  std::string out;
  auto render = [](const Term& x, auto&& self, std::string& o) -> void {
    const std::string& h = x.head.str();
    if (x.head.empty()) {  // tuple
      o += '(';
      for (size_t i = 0; i < x.args.size(); ++i) {
        if (i) o += ',';
        self(x.args[i], self, o);
      }
      o += ')';
      return;
    }
    if (h == "{}") {  // alphabet set
      o += '{';
      for (size_t i = 0; i < x.args.size(); ++i) {
        if (i) o += ',';
        self(x.args[i], self, o);
      }
      o += '}';
      return;
    }
    if (h == ":" && x.args.size() == 2) {  // ranked entry
      self(x.args[0], self, o);
      o += ':';
      self(x.args[1], self, o);
      return;
    }
    if (!h.empty() && h.back() == '=' && x.args.size() == 1) {
      o += h;
      self(x.args[0], self, o);
      return;
    }
    if (ident_needs_quotes(h)) {
      o += '"';
      o += h;
      o += '"';
    } else {
      o += h;
    }
    if (!x.args.empty()) {
      o += '(';
      for (size_t i = 0; i < x.args.size(); ++i) {
        if (i) o += ',';
        self(x.args[i], self, o);
      }
      o += ')';
    }
  };
  render(t, render, out);
  return out;
}

inline bool term_to_int(const Term& t, long long& out) {
  if (!t.is_leaf()) return false;
  const std::string& s = t.head.str();
  if (s.empty()) return false;
  size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (size_t j = i; j < s.size(); ++j)
    if (!isdigit(static_cast<unsigned char>(s[j]))) return false;
  out = std::stoll(s);
  return true;
}

inline Term int_term(long long v) { return Term(std::to_string(v)); }

}  // namespace gws

#endif  // GWS_BASE_HPP
