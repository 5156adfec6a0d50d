#ifndef GWS_DELTA_HPP
#define GWS_DELTA_HPP

#include "gws/constructions.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Path languages and the delta operations: strings over the path alphabet
// are glued into trees (tree_D) and their yields taken (delta_D).
// ---------------------------------------------------------------------------

struct PathAlphabet {
  RankedAlphabet base;
  std::vector<Sym> symbols;  // D0 plus (s,i) as s.i

  static PathAlphabet of(const RankedAlphabet& delta) {
    PathAlphabet out;
    out.base = delta;
    for (auto& [s, r] : delta.entries) {
      if (r == 0)
        out.symbols.push_back(s);
      else
        for (int i = 1; i <= r; ++i)
          out.symbols.push_back(path_symbol(s, i));
    }
    return out;
  }
};

// All root-to-leaf path codes of a tree; one per leaf.
inline void paths_into(const TreePtr& t, std::vector<Sym>& prefix,
                       std::vector<std::vector<Sym>>& out) {
  if (t->children.empty()) {
    prefix.push_back(t->label);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (size_t i = 0; i < t->children.size(); ++i) {
    prefix.push_back(path_symbol(t->label, static_cast<int>(i + 1)));
    paths_into(t->children[i], prefix, out);
    prefix.pop_back();
  }
}

inline std::vector<std::vector<Sym>> paths(const TreePtr& t) {
  std::vector<std::vector<Sym>> out;
  std::vector<Sym> prefix;
  paths_into(t, prefix, out);
  std::sort(out.begin(), out.end(), lenlex_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// DeltaSpec: the target ranked alphabet, a language source (explicit finite
// set, or a grammar with bounds, optionally accepted by final state), and
// the tree size bound for the enumeration.
// ---------------------------------------------------------------------------

struct DeltaSpec {
  RankedAlphabet delta;
  std::optional<std::vector<std::vector<Sym>>> strings;  // explicit source
  std::optional<Grammar> grammar;
  std::vector<Sym> finals;  // with `grammar`: accept by final state if nonempty
  Bounds source_bounds;
  int size_bound = 10;
  // Caller-asserted upper bound on the path lengths of the trees of
  // interest. The default certification demands the sample be complete up
  // to the longest path any tree of size_bound could have, which can be far
  // beyond reach when the alphabet has unary symbols; a caller that knows
  // the shape of the glued trees (re_witness does) may assert less. Trees
  // with longer paths are then outside the enumeration's guarantee.
  std::optional<int> assume_path_length;
};

// The longest root-to-leaf path (in symbols) any tree of at most `size`
// nodes over delta can have.
inline int max_path_length(const RankedAlphabet& delta, int size) {
  bool has_leaf = false;
  int min_arity = 0;
  bool has_internal = false;
  for (auto& [s, r] : delta.entries) {
    if (r == 0) has_leaf = true;
    if (r >= 1) {
      min_arity = has_internal ? std::min(min_arity, r) : r;
      has_internal = true;
    }
  }
  if (!has_leaf || size <= 0) return 0;
  if (!has_internal) return 1;
  // Minimal tree with a path of d nodes: d-1 internal nodes of minimal
  // arity, each padding its other children with single leaves.
  // A path of d+1 symbols needs d internal nodes, each padding its other
  // children with single leaves, plus the path leaf.
  int d = 1;
  while (true) {
    long long need = static_cast<long long>(d) * (1 + (min_arity - 1)) + 1;
    if (need > size) return d;
    ++d;
  }
}

namespace delta_detail {

// A trie over the certified sample, used to prune the top-down tree
// construction: a frontier node is admissible only if every direction has a
// consistent residual and every rank-0 completion closes a full string.
struct Trie {
  struct Node {
    std::vector<std::pair<Sym, int>> kids;
    bool terminal = false;
    int child(Sym s) const {
      for (auto& [k, v] : kids)
        if (k == s) return v;
      return -1;
    }
  };
  std::vector<Node> nodes;

  explicit Trie(const std::vector<std::vector<Sym>>& words) {
    nodes.emplace_back();
    for (const auto& w : words) {
      int cur = 0;
      for (Sym s : w) {
        int nxt = nodes[cur].child(s);
        if (nxt < 0) {
          nxt = static_cast<int>(nodes.size());
          nodes[cur].kids.emplace_back(s, nxt);
          nodes.emplace_back();
        }
        cur = nxt;
      }
      nodes[cur].terminal = true;
    }
  }
};

struct SizedTree {
  TreePtr tree;
  int size;
};

// Enumerates all trees of size <= budget whose every path is accepted from
// trie node v; memoized per node at the largest budget seen.
struct TreeEnum {
  const Trie& trie;
  const RankedAlphabet& delta;
  std::unordered_map<int, std::pair<int, std::vector<SizedTree>>> memo;

  TreeEnum(const Trie& t, const RankedAlphabet& d) : trie(t), delta(d) {}

  const std::vector<SizedTree>& at(int v, int budget) {
    auto it = memo.find(v);
    if (it != memo.end() && it->second.first >= budget) return it->second.second;
    std::vector<SizedTree> out;
    for (auto& [sym, rank] : delta.entries) {
      if (rank == 0) {
        int child = trie.nodes[v].child(sym);
        if (child >= 0 && trie.nodes[child].terminal && budget >= 1)
          out.push_back({make_tree(sym), 1});
        continue;
      }
      if (budget < 1 + rank) continue;
      std::vector<int> dirs(rank);
      bool ok = true;
      for (int i = 1; i <= rank; ++i) {
        dirs[i - 1] = trie.nodes[v].child(path_symbol(sym, i));
        if (dirs[i - 1] < 0) ok = false;
      }
      if (!ok) continue;
      // Cross product of child lists within the size budget.
      std::vector<TreePtr> acc;
      std::function<void(int, int, int)> combine = [&](int i, int left,
                                                       int used) {
        if (i == rank) {
          std::vector<TreePtr> kids = acc;
          out.push_back({make_tree(sym, std::move(kids)), 1 + used});
          return;
        }
        int reserve = rank - i - 1;  // at least one node per later child
        // Copy: at(...) may rehash the memo during recursion.
        std::vector<SizedTree> options = at(dirs[i], left - reserve);
        for (const SizedTree& st : options) {
          if (st.size > left - reserve) continue;
          acc.push_back(st.tree);
          combine(i + 1, left - st.size, used + st.size);
          acc.pop_back();
        }
      };
      combine(0, budget - 1, 0);
    }
    auto& slot = memo[v];
    slot.first = budget;
    slot.second = std::move(out);
    return slot.second;
  }
};

}  // namespace delta_detail

// Fetches and certifies the source sample of a delta spec. When the source
// is a grammar, its bounded sample must be complete up to the longest path
// possible within the tree size bound; a partial sample would over-reject.
inline LanguageSample delta_source_sample(const DeltaSpec& spec) {
  if (spec.strings) {
    LanguageSample s;
    s.items = *spec.strings;
    s.sort_items();
    s.complete_up_to = std::numeric_limits<int>::max() / 2;
    return s;
  }
  if (!spec.grammar)
    fail(ErrorKind::Precondition, "delta: no language source");
  int needed = max_path_length(spec.delta, spec.size_bound);
  if (spec.assume_path_length)
    needed = std::min(needed, *spec.assume_path_length);
  // Strings longer than the longest possible path cannot occur as paths of
  // any admissible tree, so the sample is taken at exactly that length.
  Bounds b = spec.source_bounds;
  b.max_len = needed;
  LanguageSample s =
      spec.finals.empty()
          ? generate(*spec.grammar, b)
          : generate_final_state(*spec.grammar, spec.finals, b);
  if (s.complete_up_to < needed)
    fail(ErrorKind::Precondition,
         spec.grammar->name +
             ": source sample certified only up to length " +
             std::to_string(s.complete_up_to) + " but tree size bound " +
             std::to_string(spec.size_bound) + " needs " +
             std::to_string(needed));
  return s;
}

// tree_D(L): all trees over delta of size <= size_bound whose paths all lie
// in L, by pruned top-down construction over the sample trie.
inline LanguageSample tree_delta(const DeltaSpec& spec) {
  LanguageSample src = delta_source_sample(spec);
  delta_detail::Trie trie(src.items);
  delta_detail::TreeEnum en(trie, spec.delta);
  LanguageSample out;
  out.is_trees = true;
  out.bounds = spec.source_bounds;
  out.complete_up_to = spec.size_bound;
  for (const auto& st : en.at(0, spec.size_bound))
    out.tree_items.push_back(st.tree);
  out.sort_items();
  return out;
}

// delta_D(L) = yield(tree_D(L)).
inline LanguageSample delta_language(const DeltaSpec& spec) {
  LanguageSample trees = tree_delta(spec);
  LanguageSample out;
  out.bounds = trees.bounds;
  out.complete_up_to = spec.size_bound;
  std::set<std::vector<Sym>> items;
  for (const TreePtr& t : trees.tree_items) items.insert(yield(t));
  out.items.assign(items.begin(), items.end());
  out.sort_items();
  return out;
}

// ---------------------------------------------------------------------------
// Continuity: delta_D(L) is the union of delta_D(F) over finite F subsets of
// L. Every produced string is witnessed by the path set of one of its trees.
// ---------------------------------------------------------------------------

struct ContinuityReport {
  struct Witness {
    std::vector<Sym> item;
    std::vector<std::vector<Sym>> finite_subset;
  };
  bool ok = true;
  std::vector<Witness> witnesses;
};

inline ContinuityReport continuity_check(const DeltaSpec& spec) {
  ContinuityReport rep;
  LanguageSample trees = tree_delta(spec);
  std::set<std::vector<Sym>> seen;
  for (const TreePtr& t : trees.tree_items) {
    std::vector<Sym> w = yield(t);
    if (!seen.insert(w).second) continue;
    ContinuityReport::Witness wit;
    wit.item = w;
    wit.finite_subset = paths(t);
    DeltaSpec finite;
    finite.delta = spec.delta;
    finite.strings = wit.finite_subset;
    finite.size_bound = static_cast<int>(tree_size(t));
    LanguageSample sub = delta_language(finite);
    if (!sub.contains(w)) rep.ok = false;
    rep.witnesses.push_back(std::move(wit));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Intersection witness: from linear grammars L, M over a common alphabet and
// a homomorphism h, a linear grammar K and ranked alphabet D with
// delta_D(K) = h(L within M). The trees of tree_D(K) are spines carrying the
// symbols of a word in both L and M, with one handle per symbol spelling its
// h-image, closed by a $ node.
// ---------------------------------------------------------------------------

struct ReWitness {
  Grammar k;
  RankedAlphabet delta;

  // Paths of a glued tree of size <= size_bound: each spine node costs at
  // least three nodes (itself plus its handle) and the closing $ three
  // more, so the spine length is at most (size_bound - 3) / 3 and no path
  // is longer than spine + 3.
  int path_length_bound(int size_bound) const {
    return std::max(1, (size_bound - 3) / 3 + 3);
  }
};

namespace delta_detail {

inline bool is_linear(const Grammar& g) {
  for (const Rule& r : g.rules) {
    int calls = 0;
    for (const RhsItem& it : r.rhs)
      if (it.is_call()) ++calls;
    if (calls > 1) return false;
  }
  return true;
}

}  // namespace delta_detail

inline ReWitness re_witness(const Grammar& l_lin, const Grammar& m_lin,
                            const std::map<Sym, std::vector<Sym>>& hom) {
  if (!delta_detail::is_linear(l_lin) || !delta_detail::is_linear(m_lin))
    fail(ErrorKind::Precondition, "re_witness needs linear grammars");
  std::vector<Sym> sigma;
  for (auto& [s, r] : l_lin.terminals.entries) sigma.push_back(s);
  for (auto& [s, r] : m_lin.terminals.entries)
    if (std::find(sigma.begin(), sigma.end(), s) == sigma.end())
      fail(ErrorKind::Precondition,
           "re_witness needs a common terminal alphabet");
  for (Sym a : sigma)
    if (!hom.count(a))
      fail(ErrorKind::Precondition,
           "homomorphism not total: missing " + a.str());

  static const Sym eps("eps"), dollar("$");
  ReWitness out;
  // The ranked alphabet.
  int m = 1;
  for (auto& [a, img] : hom) m = std::max(m, static_cast<int>(img.size()));
  std::set<uint32_t> omega_seen;
  for (auto& [a, img] : hom)
    for (Sym b : img) {
      if (omega_seen.insert(b.id()).second) out.delta.add(b, 0);
    }
  out.delta.add(eps, 0);
  out.delta.add(Sym("#1"), 1);
  // Spine symbols carry rank 2; symbols shared with the h-images get a
  // decorated copy, since a ranked symbol has one rank.
  std::map<Sym, Sym> spine;
  for (Sym a : sigma) {
    Sym sp = a;
    while (out.delta.contains(sp)) sp = Sym(sp.str() + "'");
    spine[a] = sp;
    out.delta.add(sp, 2);
  }
  out.delta.add(dollar, 2);
  out.delta.add(Sym("#2"), 2);
  for (int k = 3; k <= m; ++k)
    out.delta.add(Sym("#" + std::to_string(k)), k);

  // K: fresh start, subscripted copies of L and M, and the regular part R.
  Grammar& k = out.k;
  k.name = "K";
  k.storage = trivial_storage();
  k.class_tag = ClassTag::CF;
  k.encoding = Term("en");
  Term id("id");
  Sym start("K0"), r0("R0");
  k.add_nonterminal(start);
  k.initial = start;

  auto add_terminal = [&](Sym s) { k.terminals.add(s, -1); };
  auto copy_component = [&](const Grammar& src,
                            const std::string& prefix) -> Sym {
    std::map<uint32_t, Sym> ren;
    for (Sym n : src.nonterminals) {
      Sym nn(prefix + "." + n.str());
      k.add_nonterminal(nn);
      ren[n.id()] = nn;
    }
    for (const Rule& r : src.rules) {
      Rule nr;
      nr.lhs = ren[r.lhs.id()];
      nr.test = Test::truth();
      for (const RhsItem& it : r.rhs) {
        if (it.is_terminal()) {
          Sym t2 = path_symbol(spine.at(it.sym), 2);
          add_terminal(t2);
          nr.rhs.push_back(RhsItem::terminal(t2));
        } else {
          nr.rhs.push_back(RhsItem::call(ren[it.sym.id()], {id}));
        }
      }
      k.rules.push_back(std::move(nr));
    }
    return ren[src.initial.id()];
  };

  Sym l_start = copy_component(l_lin, "L");
  Sym m_start = copy_component(m_lin, "M");

  auto start_rule = [&](Sym component, int dir) {
    Sym end = path_symbol(dollar, dir);
    add_terminal(end);
    add_terminal(eps);
    Rule r;
    r.lhs = start;
    r.rhs.push_back(RhsItem::call(component, {id}));
    r.rhs.push_back(RhsItem::terminal(end));
    r.rhs.push_back(RhsItem::terminal(eps));
    k.rules.push_back(std::move(r));
  };
  start_rule(l_start, 1);
  start_rule(m_start, 2);

  // R = union over a of Sigma2* F_a.
  k.add_nonterminal(r0);
  {
    Rule r;
    r.lhs = start;
    r.rhs.push_back(RhsItem::call(r0, {id}));
    k.rules.push_back(std::move(r));
  }
  for (Sym a : sigma) {
    Sym a2 = path_symbol(spine.at(a), 2);
    add_terminal(a2);
    Rule r;
    r.lhs = r0;
    r.rhs.push_back(RhsItem::terminal(a2));
    r.rhs.push_back(RhsItem::call(r0, {id}));
    k.rules.push_back(std::move(r));
  }
  for (Sym a : sigma) {
    const std::vector<Sym>& img = hom.at(a);
    Sym a1 = path_symbol(spine.at(a), 1);
    add_terminal(a1);
    if (img.empty()) {
      Sym h11 = path_symbol(Sym("#1"), 1);
      add_terminal(h11);
      add_terminal(eps);
      Rule r;
      r.lhs = r0;
      r.rhs.push_back(RhsItem::terminal(a1));
      r.rhs.push_back(RhsItem::terminal(h11));
      r.rhs.push_back(RhsItem::terminal(eps));
      k.rules.push_back(std::move(r));
    } else {
      int kk = static_cast<int>(img.size());
      Sym hk("#" + std::to_string(kk));
      if (kk == 1) hk = Sym("#1");
      for (int i = 1; i <= kk; ++i) {
        Sym hki = path_symbol(hk, i);
        add_terminal(hki);
        add_terminal(img[i - 1]);
        Rule r;
        r.lhs = r0;
        r.rhs.push_back(RhsItem::terminal(a1));
        r.rhs.push_back(RhsItem::terminal(hki));
        r.rhs.push_back(RhsItem::terminal(img[i - 1]));
        k.rules.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace gws

#endif  // GWS_DELTA_HPP
