#ifndef GWS_LOOKAHEAD_HPP
#define GWS_LOOKAHEAD_HPP

#include "gws/engine.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Look-ahead: S_LA extends a storage type with acc(G) predicates that test
// whether a configuration admits a successful derivation of a registered
// grammar, per Acc(G) = { c | A_in(c) =>* w }.
//
// For a noetherian base the search is exact (no derivation is infinite);
// otherwise it is cut at step_bound and a cut-off yields Unknown, which the
// engine surfaces as a hard error, never as false.
// ---------------------------------------------------------------------------

struct LookaheadEntry {
  Sym name;
  Grammar grammar;
};

struct LookaheadInfo {
  StoragePtr base;
  std::vector<LookaheadEntry> registry;
  int step_bound = 64;
  std::vector<std::pair<Sym, Sym>> exclusive_accs;  // declared disjoint pairs
};

// The set of configurations accepted by a grammar, decided by bounded
// derivation search from A_in(c).
inline Tri acc_configuration(const Grammar& g, const Value& c, int step_bound,
                             bool exact) {
  Bounds b;
  b.max_steps = exact ? std::numeric_limits<int>::max() : step_bound;
  b.max_len = std::numeric_limits<int>::max() / 4;
  b.max_forms = 1 << 22;
  switch (d_accept_config(g, c, b)) {
    case AcceptOutcome::Accepted:
      return Tri::True;
    case AcceptOutcome::RejectedWithinBounds:
      return Tri::False;
    case AcceptOutcome::Exhausted:
      return Tri::Unknown;
  }
  return Tri::Unknown;
}

inline StoragePtr with_lookahead(
    StoragePtr base, std::vector<LookaheadEntry> registry, int step_bound,
    std::vector<std::pair<Sym, Sym>> exclusive_accs = {}) {
  using detail::sym_acc;
  for (const LookaheadEntry& e : registry) {
    ClassificationReport rep = validate(e.grammar);
    if (!rep.ok())
      fail(ErrorKind::Validation,
           "look-ahead grammar " + e.name.str() + ": " + rep.issues.front());
  }
  auto info = std::make_shared<LookaheadInfo>();
  info->base = base;
  info->registry = std::move(registry);
  info->step_bound = step_bound;
  info->exclusive_accs = std::move(exclusive_accs);

  auto s = std::make_shared<StorageType>(*base);
  s->name = base->name + "+la";
  s->expr = Term("lookahead", {base->expr, int_term(step_bound)});
  s->lookahead = info;
  s->identity_base = nullptr;

  auto find_entry = [info](Sym name) -> const LookaheadEntry* {
    for (const LookaheadEntry& e : info->registry)
      if (e.name == name) return &e;
    return nullptr;
  };

  s->has_pred = [base, find_entry](const Term& p) {
    if (p.head == sym_acc() && p.args.size() == 1 && p.args[0].is_leaf())
      return find_entry(p.args[0].head) != nullptr;
    return base->has_pred(p);
  };

  // Memoized per (grammar, configuration); only definite answers are cached.
  struct Cache {
    std::mutex mu;
    std::unordered_map<std::uint64_t,
                       std::vector<std::tuple<Sym, Value, bool>>>
        map;
  };
  auto cache = std::make_shared<Cache>();
  bool exact = base->noetherian;
  s->pred = [base, find_entry, cache, info, exact](const Term& p,
                                                   const Value& c) -> Tri {
    if (p.head != sym_acc() || p.args.size() != 1)
      return base->pred(p, c);
    const LookaheadEntry* e = find_entry(p.args[0].head);
    if (!e) return base->pred(p, c);
    std::uint64_t h = hash_combine(c.hash(), e->name.id());
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      auto it = cache->map.find(h);
      if (it != cache->map.end())
        for (auto& [n, v, r] : it->second)
          if (n == e->name && v == c) return tri_of(r);
    }
    Tri r = acc_configuration(e->grammar, c, info->step_bound, exact);
    if (r != Tri::Unknown) {
      std::lock_guard<std::mutex> lock(cache->mu);
      cache->map[h].emplace_back(e->name, c, r == Tri::True);
    }
    return r;
  };

  s->exclusive = [base, info](const Term& p, const Term& q) {
    if (p.head == sym_acc() && q.head == sym_acc() && p.args.size() == 1 &&
        q.args.size() == 1) {
      Sym a = p.args[0].head, b = q.args[0].head;
      for (auto& [x, y] : info->exclusive_accs)
        if ((x == a && y == b) || (x == b && y == a)) return true;
      return false;
    }
    return base->exclusive(p, q);
  };
  return s;
}

inline Term acc_pred(Sym registered_name) {
  return Term(detail::sym_acc(), {Term(registered_name)});
}

}  // namespace gws

#endif  // GWS_LOOKAHEAD_HPP
