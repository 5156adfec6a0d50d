#ifndef GWS_ENGINE_HPP
#define GWS_ENGINE_HPP

#include <deque>
#include <limits>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "gws/grammar.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Bounds and samples.
// ---------------------------------------------------------------------------

struct Bounds {
  int max_steps = 200;       // derivation length
  int max_len = 16;          // output string length / tree size
  long max_forms = 2000000;  // search frontier cap; exceeding is an error
  int max_input_size = -1;   // input enumeration bound; -1 = max_len
  int jobs = 1;              // worker cap for per-input searches

  int input_bound() const { return max_input_size < 0 ? max_len : max_input_size; }

  Bounds() = default;
  Bounds(int steps, int len) : max_steps(steps), max_len(len) {}
  Bounds(int steps, int len, long forms)
      : max_steps(steps), max_len(len), max_forms(forms) {}
};

inline bool lenlex_less(const std::vector<Sym>& a, const std::vector<Sym>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i].str() < b[i].str();
  return false;
}

// A finite, bounded sample of a language of strings or trees, together with
// the bounds it was enumerated under and the length/size below which it is
// proven exhaustive.
struct LanguageSample {
  std::vector<std::vector<Sym>> items;  // length-lexicographic, deduplicated
  std::vector<TreePtr> tree_items;      // filled for tree samples
  bool is_trees = false;
  Bounds bounds;
  int complete_up_to = 0;

  bool contains(const std::vector<Sym>& w) const {
    return std::binary_search(items.begin(), items.end(), w, lenlex_less);
  }
  void sort_items() {
    std::sort(items.begin(), items.end(), lenlex_less);
    items.erase(std::unique(items.begin(), items.end()), items.end());
    std::sort(tree_items.begin(), tree_items.end(),
              [](const TreePtr& a, const TreePtr& b) {
                size_t sa = tree_size(a), sb = tree_size(b);
                if (sa != sb) return sa < sb;
                return tree_to_string(a) < tree_to_string(b);
              });
    tree_items.erase(std::unique(tree_items.begin(), tree_items.end(),
                                 [](const TreePtr& a, const TreePtr& b) {
                                   return tree_equal(a, b);
                                 }),
                     tree_items.end());
  }
};

inline std::string word_to_string(const std::vector<Sym>& w) {
  bool single = true;
  for (Sym s : w)
    if (s.str().size() != 1) single = false;
  std::string out;
  for (size_t i = 0; i < w.size(); ++i) {
    if (!single && i) out += ' ';
    out += w[i].str();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sentential forms.
// ---------------------------------------------------------------------------

struct FormItem {
  Sym sym;
  std::optional<Value> cfg;  // engaged: nonterminal instance A(c)

  static FormItem terminal(Sym s) { return FormItem{s, std::nullopt}; }
  static FormItem instance(Sym nt, Value c) {
    return FormItem{nt, std::move(c)};
  }
  bool is_instance() const { return cfg.has_value(); }

  friend bool operator==(const FormItem& a, const FormItem& b) {
    if (a.sym != b.sym || a.cfg.has_value() != b.cfg.has_value()) return false;
    return !a.cfg || *a.cfg == *b.cfg;
  }
};

using SForm = std::vector<FormItem>;

inline std::string form_to_string(const SForm& f) {
  std::string out;
  if (f.empty()) return "lambda";
  for (const FormItem& it : f) {
    if (!out.empty()) out += ' ';
    if (it.is_instance())
      out += it.sym.str() + "(" + it.cfg->to_string() + ")";
    else
      out += it.sym.str();
  }
  return out;
}

// Instantiates a rule right-hand side at configuration c. Enabled only when
// the test holds and every instruction occurring in the right-hand side is
// defined on c. Returns nullopt when not enabled; throws on an Unknown
// look-ahead outcome.
inline std::optional<std::vector<FormItem>> instantiate(
    const Grammar& g, const Rule& r, const Value& c, size_t rule_index) {
  Tri t = eval_test(r.test, c, *g.storage);
  if (t == Tri::Unknown)
    fail(ErrorKind::Unknown,
         g.name + ": look-ahead test undecided within its step bound (rule " +
             std::to_string(rule_index) + ")");
  if (t == Tri::False) return std::nullopt;
  std::vector<FormItem> out;
  out.reserve(r.rhs.size());
  for (const RhsItem& it : r.rhs) {
    switch (it.kind) {
      case RhsItem::Kind::Terminal:
        out.push_back(FormItem::terminal(it.sym));
        break;
      case RhsItem::Kind::Call: {
        auto v = apply_chain(it.chain, c, *g.storage);
        if (!v) return std::nullopt;
        out.push_back(FormItem::instance(it.sym, std::move(*v)));
        break;
      }
      case RhsItem::Kind::TailCall: {
        if (!g.storage->identity)
          fail(ErrorKind::Validation,
               g.name + ": id-tail call without a storage identity");
        auto v = apply_chain({*g.storage->identity}, c, *g.storage);
        if (!v) return std::nullopt;
        out.push_back(FormItem::instance(it.sym, std::move(*v)));
        break;
      }
    }
  }
  return out;
}

// One derivation step: rewrites the instance at `position` with the rule at
// `rule_index`. Mirrors the derivation relation; NotEnabled is nullopt.
inline std::optional<SForm> derive_step(const Grammar& g, const SForm& sf,
                                        size_t rule_index, size_t position) {
  if (rule_index >= g.rules.size() || position >= sf.size())
    fail(ErrorKind::Precondition, g.name + ": derive_step out of range");
  const FormItem& target = sf[position];
  if (!target.is_instance())
    fail(ErrorKind::Precondition,
         g.name + ": derive_step position is not a nonterminal instance");
  const Rule& r = g.rules[rule_index];
  if (r.lhs != target.sym) return std::nullopt;
  auto body = instantiate(g, r, *target.cfg, rule_index);
  if (!body) return std::nullopt;
  SForm out;
  out.reserve(sf.size() - 1 + body->size());
  out.insert(out.end(), sf.begin(), sf.begin() + position);
  out.insert(out.end(), body->begin(), body->end());
  out.insert(out.end(), sf.begin() + position + 1, sf.end());
  return out;
}

// A recorded derivation: the sequence of sentential forms with the applied
// rule and position (kept only on request).
struct DerivationTrace {
  struct Step {
    SForm form;
    size_t rule_index = 0;
    size_t position = 0;
  };
  std::vector<Step> steps;  // steps[0].form is the initial form
};

// ---------------------------------------------------------------------------
// Bounded search.
// ---------------------------------------------------------------------------

enum class Strategy { Leftmost, AnyPosition };

namespace detail {

struct Form {
  std::vector<Sym> prefix;  // emitted terminal prefix
  SForm rest;               // leading terminals are rolled into prefix
  int terminal_count = 0;   // prefix plus terminals inside rest

  void normalize() {
    size_t i = 0;
    while (i < rest.size() && !rest[i].is_instance()) {
      prefix.push_back(rest[i].sym);
      ++i;
    }
    if (i) rest.erase(rest.begin(), rest.begin() + i);
    terminal_count = static_cast<int>(prefix.size());
    for (const FormItem& it : rest)
      if (!it.is_instance()) ++terminal_count;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0x9ae16a3b2f90404fULL;
    for (Sym s : prefix) h = hash_combine(h, s.id());
    h = hash_combine(h, 0xabcdULL);
    for (const FormItem& it : rest) {
      h = hash_combine(h, it.sym.id());
      if (it.cfg) h = hash_combine(h, it.cfg->hash());
    }
    return h;
  }
  friend bool operator==(const Form& a, const Form& b) {
    return a.prefix == b.prefix && a.rest == b.rest;
  }
};

struct SearchOptions {
  Strategy strategy = Strategy::Leftmost;
  bool stop_on_accept = false;   // d-acceptance
  bool prune_by_length = true;   // off for d-acceptance
  const std::vector<Sym>* finals = nullptr;  // collect prefixes at finals
};

struct SearchOutcome {
  std::vector<std::vector<Sym>> outputs;
  bool accepted = false;
  bool truncated = false;
  int min_live = std::numeric_limits<int>::max();  // terminal count of live forms
};

// Breadth-first closure of the derivation relation from an initial
// configuration, deduplicating sentential forms.
inline SearchOutcome search(const Grammar& g, const Value& c0,
                            const Bounds& bounds, const SearchOptions& opt) {
  SearchOutcome res;
  std::unordered_map<std::uint64_t, std::vector<Form>> visited;
  std::vector<std::pair<Form, int>> queue;
  size_t qhead = 0;
  long live_forms = 0;
  std::set<std::vector<Sym>> outputs;

  auto enqueue = [&](Form f, int step) -> bool {
    f.normalize();
    if (opt.prune_by_length && f.terminal_count > bounds.max_len && !f.rest.empty())
      return true;  // cannot produce anything within max_len
    if (f.rest.empty()) {
      if (opt.prune_by_length && f.terminal_count > bounds.max_len) return true;
      res.accepted = true;
      outputs.insert(f.prefix);
      return !opt.stop_on_accept;
    }
    if (opt.finals && f.rest.size() == 1 && f.rest[0].is_instance() &&
        static_cast<int>(f.prefix.size()) <= bounds.max_len) {
      for (Sym fin : *opt.finals)
        if (fin == f.rest[0].sym) {
          outputs.insert(f.prefix);
          break;
        }
    }
    auto& bucket = visited[f.hash()];
    for (const Form& o : bucket)
      if (o == f) return true;
    if (++live_forms > bounds.max_forms)
      fail(ErrorKind::Resource,
           g.name + ": search frontier exceeded max_forms = " +
               std::to_string(bounds.max_forms));
    bucket.push_back(f);
    queue.emplace_back(std::move(f), step);
    return true;
  };
  (void)qhead;

  Form init;
  init.rest.push_back(FormItem::instance(g.initial, c0));
  if (!enqueue(std::move(init), 0)) {
    res.outputs.assign(outputs.begin(), outputs.end());
    return res;
  }

  while (qhead < queue.size()) {
    Form f = std::move(queue[qhead].first);
    int step = queue[qhead].second;
    ++qhead;
    if (step >= bounds.max_steps) {
      res.truncated = true;
      res.min_live = std::min(res.min_live, f.terminal_count);
      continue;
    }
    std::vector<size_t> positions;
    if (opt.strategy == Strategy::Leftmost) {
      positions.push_back(0);  // rest[0] is the leftmost instance
    } else {
      for (size_t i = 0; i < f.rest.size(); ++i)
        if (f.rest[i].is_instance()) positions.push_back(i);
    }
    for (size_t pos : positions) {
      const FormItem& inst = f.rest[pos];
      for (size_t ri = 0; ri < g.rules.size(); ++ri) {
        const Rule& r = g.rules[ri];
        if (r.lhs != inst.sym) continue;
        auto body = instantiate(g, r, *inst.cfg, ri);
        if (!body) continue;
        Form nf;
        nf.prefix = f.prefix;
        nf.rest.reserve(f.rest.size() - 1 + body->size());
        nf.rest.insert(nf.rest.end(), f.rest.begin(), f.rest.begin() + pos);
        nf.rest.insert(nf.rest.end(), body->begin(), body->end());
        nf.rest.insert(nf.rest.end(), f.rest.begin() + pos + 1, f.rest.end());
        if (!enqueue(std::move(nf), step + 1)) {
          res.outputs.assign(outputs.begin(), outputs.end());
          return res;
        }
      }
    }
  }
  res.outputs.assign(outputs.begin(), outputs.end());
  return res;
}

inline int certified(const SearchOutcome& o, const Bounds& b) {
  if (!o.truncated) return b.max_len;
  return std::max(0, std::min(b.max_len, o.min_live - 1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The engine operations.
// ---------------------------------------------------------------------------

// Exhaustive bounded generation of L(G): inputs are enumerated in size order
// up to bounds.input_bound() and a leftmost derivation closure is run for
// each. complete_up_to certifies exhaustiveness relative to that input
// bound: every live form cut at max_steps already carried more terminals
// than the certified length.
inline LanguageSample generate(const Grammar& g, const Bounds& bounds,
                               Strategy strategy = Strategy::Leftmost) {
  LanguageSample out;
  out.bounds = bounds;
  int complete = bounds.max_len;
  std::set<std::vector<Sym>> items;
  detail::SearchOptions opt;
  opt.strategy = strategy;
  std::vector<InputElement> inputs =
      g.storage->enumerate_inputs(g.encoding, bounds.input_bound());
  auto run_one = [&](const InputElement& u) -> detail::SearchOutcome {
    auto c0 = g.storage->enc(g.encoding, u);
    if (!c0) return {};
    return detail::search(g, *c0, bounds, opt);
  };
  if (bounds.jobs > 1 && inputs.size() > 1) {
    // Per-input searches are independent; results are merged as sets, so
    // the outcome does not depend on scheduling.
    size_t next = 0;
    std::mutex mu;
    auto worker = [&]() {
      for (;;) {
        size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= inputs.size()) return;
          i = next++;
        }
        detail::SearchOutcome o = run_one(inputs[i]);
        std::lock_guard<std::mutex> lock(mu);
        items.insert(o.outputs.begin(), o.outputs.end());
        complete = std::min(complete, detail::certified(o, bounds));
      }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(bounds.jobs, static_cast<int>(inputs.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  } else {
    for (const InputElement& u : inputs) {
      detail::SearchOutcome o = run_one(u);
      items.insert(o.outputs.begin(), o.outputs.end());
      complete = std::min(complete, detail::certified(o, bounds));
    }
  }
  for (auto& w : items)
    if (static_cast<int>(w.size()) <= bounds.max_len) out.items.push_back(w);
  out.sort_items();
  out.complete_up_to = complete;
  return out;
}

// All outputs of the transducer on one input element within bounds.
inline LanguageSample transduce(const Grammar& g, const InputElement& u,
                                const Bounds& bounds) {
  LanguageSample out;
  out.bounds = bounds;
  auto c0 = g.storage->enc(g.encoding, u);
  if (!c0) {
    out.complete_up_to = bounds.max_len;  // encoding undefined: empty sample
    return out;
  }
  auto o = detail::search(g, *c0, bounds, detail::SearchOptions{});
  out.items = std::move(o.outputs);
  out.sort_items();
  out.complete_up_to = detail::certified(o, bounds);
  return out;
}

enum class AcceptOutcome { Accepted, RejectedWithinBounds, Exhausted };

inline std::string accept_outcome_name(AcceptOutcome o) {
  switch (o) {
    case AcceptOutcome::Accepted:
      return "Accepted";
    case AcceptOutcome::RejectedWithinBounds:
      return "RejectedWithinBounds";
    case AcceptOutcome::Exhausted:
      return "Exhausted";
  }
  return "?";
}

// d-acceptance from an already encoded configuration (the entry point used
// by look-ahead tests, which start at arbitrary configurations).
inline AcceptOutcome d_accept_config(const Grammar& g, const Value& c0,
                                     const Bounds& bounds) {
  detail::SearchOptions opt;
  opt.stop_on_accept = true;
  opt.prune_by_length = false;
  auto o = detail::search(g, c0, bounds, opt);
  if (o.accepted) return AcceptOutcome::Accepted;
  return o.truncated ? AcceptOutcome::Exhausted
                     : AcceptOutcome::RejectedWithinBounds;
}

// d-acceptance of an input element: is some terminal string derivable?
inline AcceptOutcome d_accept(const Grammar& g, const InputElement& u,
                              const Bounds& bounds) {
  auto c0 = g.storage->enc(g.encoding, u);
  if (!c0) return AcceptOutcome::RejectedWithinBounds;
  return d_accept_config(g, *c0, bounds);
}

// The yield map: frontier concatenation with eps erased.
inline void yield_into(const TreePtr& t, std::vector<Sym>& out) {
  static const Sym eps("eps");
  if (t->children.empty()) {
    if (t->label != eps) out.push_back(t->label);
    return;
  }
  for (const TreePtr& c : t->children) yield_into(c, out);
}

inline std::vector<Sym> yield(const TreePtr& t) {
  std::vector<Sym> out;
  yield_into(t, out);
  return out;
}

namespace detail {

// Parses a prefix-notation symbol sequence into a tree over the grammar's
// ranked terminal alphabet. Returns nullptr on rank mismatch.
inline TreePtr parse_prefix_tree(const std::vector<Sym>& w,
                                 const RankedAlphabet& sigma) {
  size_t pos = 0;
  std::function<TreePtr()> node = [&]() -> TreePtr {
    if (pos >= w.size()) return nullptr;
    Sym s = w[pos++];
    auto rk = sigma.rank(s);
    if (!rk || *rk < 0) return nullptr;
    std::vector<TreePtr> kids;
    for (int i = 0; i < *rk; ++i) {
      TreePtr k = node();
      if (!k) return nullptr;
      kids.push_back(std::move(k));
    }
    return make_tree(s, std::move(kids));
  };
  TreePtr t = node();
  return (t && pos == w.size()) ? t : nullptr;
}

}  // namespace detail

// Bounded tree generation for RT grammars: all trees of size <= max_len.
inline LanguageSample generate_trees(const Grammar& g, const Bounds& bounds,
                                     Strategy strategy = Strategy::Leftmost) {
  if (g.class_tag != ClassTag::RT)
    fail(ErrorKind::Precondition, g.name + ": generate_trees needs class rt");
  LanguageSample out = generate(g, bounds, strategy);
  out.is_trees = true;
  for (auto& w : out.items) {
    TreePtr t = detail::parse_prefix_tree(w, g.terminals);
    if (!t)
      fail(ErrorKind::Validation,
           g.name + ": generated sequence is not a well-ranked tree: " +
               word_to_string(w));
    out.tree_items.push_back(std::move(t));
  }
  out.sort_items();
  return out;
}

// Bounded language accepted by final state: all w with A_in(c0) =>* w A(c),
// A in finals, |w| <= max_len. Depth-first with prefix sharing; sound for
// arbitrary REG grammars, cheap for deterministic ones.
inline LanguageSample generate_final_state(const Grammar& g,
                                           const std::vector<Sym>& finals,
                                           const Bounds& bounds) {
  if (!reg_shaped(g))
    fail(ErrorKind::Precondition,
         g.name + ": final-state generation needs a right-linear grammar");
  LanguageSample out;
  out.bounds = bounds;
  std::set<std::vector<Sym>> items;
  bool truncated = false;
  int min_live = std::numeric_limits<int>::max();
  auto is_final = [&](Sym s) {
    return std::find(finals.begin(), finals.end(), s) != finals.end();
  };

  std::vector<Sym> prefix;
  // Forms seen since the last terminal was consumed, to cut lambda-cycles.
  std::vector<std::pair<Sym, Value>> lambda_seen;
  std::function<void(Sym, const Value&, int)> go = [&](Sym state,
                                                       const Value& c,
                                                       int steps) {
    if (static_cast<int>(prefix.size()) > bounds.max_len) return;
    if (is_final(state) && static_cast<int>(prefix.size()) <= bounds.max_len)
      items.insert(prefix);
    if (steps >= bounds.max_steps) {
      truncated = true;
      min_live = std::min(min_live, static_cast<int>(prefix.size()));
      return;
    }
    for (size_t ri = 0; ri < g.rules.size(); ++ri) {
      const Rule& r = g.rules[ri];
      if (r.lhs != state) continue;
      auto body = instantiate(g, r, c, ri);
      if (!body) continue;
      size_t emitted = 0;
      std::optional<std::pair<Sym, Value>> next;
      for (FormItem& it : *body) {
        if (it.is_instance())
          next = {it.sym, std::move(*it.cfg)};
        else {
          prefix.push_back(it.sym);
          ++emitted;
        }
      }
      if (next) {
        size_t mark = lambda_seen.size();
        if (emitted == 0) {
          bool cycle = false;
          for (auto& [s2, c2] : lambda_seen)
            if (s2 == next->first && c2 == next->second) cycle = true;
          if (!cycle) {
            lambda_seen.emplace_back(next->first, next->second);
            go(next->first, next->second, steps + 1);
            lambda_seen.erase(lambda_seen.begin() + mark, lambda_seen.end());
          }
        } else {
          std::vector<std::pair<Sym, Value>> saved;
          saved.swap(lambda_seen);
          go(next->first, next->second, steps + 1);
          lambda_seen.swap(saved);
        }
      }
      prefix.resize(prefix.size() - emitted);
    }
  };

  auto c0 = g.storage->enc(
      g.encoding, g.storage->enumerate_inputs(g.encoding, 0).front());
  if (c0) go(g.initial, *c0, 0);
  for (auto& w : items) out.items.push_back(w);
  out.sort_items();
  out.complete_up_to =
      truncated ? std::max(0, std::min(bounds.max_len, min_live - 1))
                : bounds.max_len;
  return out;
}

// Final-state acceptance for a deterministic REG r-acceptor: simulates the
// unique run on w, following lambda-moves, with cycle detection.
inline bool accept_final_state(const Grammar& g, const std::vector<Sym>& finals,
                               const std::vector<Sym>& w) {
  if (!is_racceptor_deterministic(g))
    fail(ErrorKind::Precondition,
         g.name + ": accept_final_state needs an r-acceptor deterministic "
                  "grammar");
  for (Sym a : w)
    if (!g.is_terminal(a)) return false;
  auto is_final = [&](Sym s) {
    return std::find(finals.begin(), finals.end(), s) != finals.end();
  };
  auto c0 = g.storage->enc(g.encoding, InputElement::unit());
  if (!c0) return false;
  Sym state = g.initial;
  Value cfg = *c0;
  size_t pos = 0;
  std::vector<std::tuple<Sym, Value, size_t>> seen;
  while (true) {
    if (pos == w.size() && is_final(state)) return true;
    for (auto& [s2, c2, p2] : seen)
      if (s2 == state && p2 == pos && c2 == cfg) return false;  // lambda cycle
    seen.emplace_back(state, cfg, pos);
    // Normal form: at most one applicable rule.
    const Rule* chosen = nullptr;
    size_t chosen_index = 0;
    for (size_t ri = 0; ri < g.rules.size(); ++ri) {
      const Rule& r = g.rules[ri];
      if (r.lhs != state) continue;
      if (eval_test(r.test, cfg, *g.storage) != Tri::True) continue;
      if (!r.rhs.empty() && r.rhs[0].is_terminal() &&
          (pos >= w.size() || r.rhs[0].sym != w[pos]))
        continue;
      chosen = &r;
      chosen_index = ri;
      break;
    }
    if (!chosen) return false;
    auto body = instantiate(g, *chosen, cfg, chosen_index);
    if (!body) return false;  // an instruction is undefined: the run is stuck
    size_t reads = 0;
    std::optional<std::pair<Sym, Value>> next;
    for (FormItem& it : *body) {
      if (it.is_instance())
        next = {it.sym, std::move(*it.cfg)};
      else
        ++reads;
    }
    pos += reads;
    if (pos > w.size()) return false;
    if (!next) return false;  // halting rule: empty-store end, no final state
    if (reads) seen.clear();
    state = next->first;
    cfg = next->second;
  }
}

// Transduction with a recorded derivation for each output (first found).
inline std::vector<std::pair<std::vector<Sym>, DerivationTrace>>
transduce_with_traces(const Grammar& g, const InputElement& u,
                      const Bounds& bounds) {
  std::vector<std::pair<std::vector<Sym>, DerivationTrace>> out;
  auto c0 = g.storage->enc(g.encoding, u);
  if (!c0) return out;
  struct Node {
    SForm form;
    long parent;
    size_t rule_index, position;
    int step;
  };
  std::vector<Node> nodes;
  std::unordered_map<std::uint64_t, std::vector<long>> visited;
  auto form_hash = [](const SForm& f) {
    std::uint64_t h = 17;
    for (const FormItem& it : f) {
      h = hash_combine(h, it.sym.id());
      if (it.cfg) h = hash_combine(h, it.cfg->hash());
    }
    return h;
  };
  auto seen = [&](const SForm& f) {
    for (long i : visited[form_hash(f)])
      if (nodes[i].form == f) return true;
    return false;
  };
  std::deque<long> queue;
  nodes.push_back({{FormItem::instance(g.initial, *c0)}, -1, 0, 0, 0});
  visited[form_hash(nodes[0].form)].push_back(0);
  queue.push_back(0);
  std::set<std::vector<Sym>> emitted;
  while (!queue.empty()) {
    long cur = queue.front();
    queue.pop_front();
    SForm f = nodes[cur].form;
    int step = nodes[cur].step;
    int terms = 0;
    bool all_terminal = true;
    for (const FormItem& it : f) {
      if (it.is_instance())
        all_terminal = false;
      else
        ++terms;
    }
    if (terms > bounds.max_len) continue;
    if (all_terminal) {
      std::vector<Sym> w;
      for (const FormItem& it : f) w.push_back(it.sym);
      if (emitted.insert(w).second) {
        DerivationTrace tr;
        std::vector<long> chain;
        for (long i = cur; i >= 0; i = nodes[i].parent) chain.push_back(i);
        std::reverse(chain.begin(), chain.end());
        for (size_t k = 0; k < chain.size(); ++k) {
          DerivationTrace::Step st;
          st.form = nodes[chain[k]].form;
          if (k + 1 < chain.size()) {
            st.rule_index = nodes[chain[k + 1]].rule_index;
            st.position = nodes[chain[k + 1]].position;
          }
          tr.steps.push_back(std::move(st));
        }
        out.emplace_back(std::move(w), std::move(tr));
      }
      continue;
    }
    if (step >= bounds.max_steps) continue;
    size_t pos = 0;
    while (pos < f.size() && !f[pos].is_instance()) ++pos;
    for (size_t ri = 0; ri < g.rules.size(); ++ri) {
      auto nf = derive_step(g, f, ri, pos);
      if (!nf || seen(*nf)) continue;
      if (static_cast<long>(nodes.size()) > bounds.max_forms)
        fail(ErrorKind::Resource, g.name + ": trace search exceeded max_forms");
      nodes.push_back({std::move(*nf), cur, ri, pos, step + 1});
      visited[form_hash(nodes.back().form)].push_back(
          static_cast<long>(nodes.size()) - 1);
      queue.push_back(static_cast<long>(nodes.size()) - 1);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return lenlex_less(a.first, b.first);
  });
  return out;
}

}  // namespace gws

#endif  // GWS_ENGINE_HPP
