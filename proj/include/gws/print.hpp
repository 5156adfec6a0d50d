#ifndef GWS_PRINT_HPP
#define GWS_PRINT_HPP

#include "gws/lookahead.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Serialization back into the grammar text format, round-trip stable:
// parse(print(g)) yields an identical abstract grammar.
// ---------------------------------------------------------------------------

inline std::string quote_sym(Sym s) {
  if (ident_needs_quotes(s.str())) return "\"" + s.str() + "\"";
  return s.str();
}

inline std::string storage_expr_to_string(const StorageType& s, int indent);

namespace print_detail {

inline std::string indent_str(int n) { return std::string(n, ' '); }

inline std::string rhs_item_to_string(const RhsItem& it) {
  switch (it.kind) {
    case RhsItem::Kind::Terminal:
      return "\"" + it.sym.str() + "\"";
    case RhsItem::Kind::Call: {
      std::string s = quote_sym(it.sym);
      s += '(';
      for (size_t i = 0; i < it.chain.size(); ++i) {
        if (i) s += ';';
        s += term_to_string(it.chain[i]);
      }
      s += ')';
      return s;
    }
    case RhsItem::Kind::TailCall:
      return quote_sym(it.sym) + "(id)";
  }
  return "?";
}

}  // namespace print_detail

inline std::string print_grammar(const Grammar& g, int indent = 0) {
  using print_detail::indent_str;
  std::string pad = indent_str(indent);
  std::string out;
  out += pad + "storage " + storage_expr_to_string(*g.storage, indent) + ";\n";
  out += pad + "class " + class_tag_name(g.class_tag) + ";\n";
  if (!g.nonterminals.empty()) {
    out += pad + "nonterminals ";
    for (size_t i = 0; i < g.nonterminals.size(); ++i) {
      if (i) out += ", ";
      out += quote_sym(g.nonterminals[i]);
    }
    out += ";\n";
  }
  if (!g.terminals.entries.empty()) {
    out += pad + "terminals ";
    for (size_t i = 0; i < g.terminals.entries.size(); ++i) {
      if (i) out += ", ";
      out += quote_sym(g.terminals.entries[i].first);
      if (g.terminals.entries[i].second >= 0)
        out += ":" + std::to_string(g.terminals.entries[i].second);
    }
    out += ";\n";
  }
  out += pad + "initial " + quote_sym(g.initial) + ";\n";
  out += pad + "encoding " + term_to_string(g.encoding) + ";\n";
  if (!g.finals.empty()) {
    out += pad + "finals ";
    for (size_t i = 0; i < g.finals.size(); ++i) {
      if (i) out += ", ";
      out += quote_sym(g.finals[i]);
    }
    out += ";\n";
  }
  out += pad + "rules:\n";
  for (const Rule& r : g.rules) {
    out += pad + "  " + quote_sym(r.lhs) + " ->";
    if (!r.test.is_true()) out += " if " + test_to_string(r.test) + " then";
    for (const RhsItem& it : r.rhs)
      out += " " + print_detail::rhs_item_to_string(it);
    out += " ;\n";
  }
  return out;
}

inline std::string storage_expr_to_string(const StorageType& s, int indent) {
  using print_detail::indent_str;
  if (s.lookahead) {
    const LookaheadInfo& la = *s.lookahead;
    std::string out = "lookahead(" +
                      storage_expr_to_string(*la.base, indent) + ", " +
                      std::to_string(la.step_bound) + ") with {\n";
    for (const LookaheadEntry& e : la.registry) {
      out += indent_str(indent + 2) + "grammar " + e.name.str() + " {\n";
      out += print_grammar(e.grammar, indent + 4);
      out += indent_str(indent + 2) + "}\n";
    }
    for (auto& [a, b] : la.exclusive_accs)
      out += indent_str(indent + 2) + "exclusive " + a.str() + ", " +
             b.str() + ";\n";
    out += indent_str(indent) + "}";
    return out;
  }
  // Reconstruct from the expression term.
  std::function<std::string(const Term&)> go = [&](const Term& t) {
    const std::string& h = t.head.str();
    if (h == "+id") return go(t.args[0]) + "+id";
    if (h == "product") return "product(" + go(t.args[0]) + ", " +
                               go(t.args[1]) + ")";
    if (h == "pd" || h == "pdp")
      return h + "(" + go(t.args[0]) + ")";
    return h;
  };
  return go(s.expr);
}

// Structural equality of grammars (abstract syntax, not names).
inline bool storage_equal(const StorageType& a, const StorageType& b);

inline bool grammar_equal(const Grammar& a, const Grammar& b) {
  return a.class_tag == b.class_tag && a.nonterminals == b.nonterminals &&
         a.terminals.entries == b.terminals.entries &&
         a.initial == b.initial && a.encoding == b.encoding &&
         a.finals == b.finals && a.rules == b.rules &&
         storage_equal(*a.storage, *b.storage);
}

inline bool storage_equal(const StorageType& a, const StorageType& b) {
  if (!(a.expr == b.expr)) return false;
  bool la = a.lookahead != nullptr, lb = b.lookahead != nullptr;
  if (la != lb) return false;
  if (!la) return true;
  const LookaheadInfo &x = *a.lookahead, &y = *b.lookahead;
  if (x.step_bound != y.step_bound ||
      x.registry.size() != y.registry.size() ||
      x.exclusive_accs != y.exclusive_accs || !(x.base->expr == y.base->expr))
    return false;
  for (size_t i = 0; i < x.registry.size(); ++i) {
    if (x.registry[i].name != y.registry[i].name) return false;
    if (!grammar_equal(x.registry[i].grammar, y.registry[i].grammar))
      return false;
  }
  return true;
}

}  // namespace gws

#endif  // GWS_PRINT_HPP
