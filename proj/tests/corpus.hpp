#ifndef GWS_TESTS_CORPUS_HPP
#define GWS_TESTS_CORPUS_HPP

// The worked grammars used throughout the test suite, in the .gws text
// format. Copies of these live under grammars/ for the CLI.

#include "gws/parse.hpp"

namespace corpus {

// Doubling transducer over the count-down storage: T = {(n, a^(2^n))}.
inline const char* G1 = R"(
storage countdown;
class cf;
nonterminals A;
terminals a;
initial A;
encoding en;
rules:
  A -> if null then "a" else A(dec) A(dec);
)";

// Indexed-style grammar for {a^n b^n c^n}: the pushdown counts the a's.
inline const char* G2 = R"(
storage pushdown;
class cf;
nonterminals Ain, A, B, C;
terminals a, b, c;
initial Ain;
encoding "#";
rules:
  Ain -> A(stay);
  A -> "a" A(push(a));
  A -> B(stay) C(stay);
  B -> if top=a then "b" B(pop);
  B -> if top="#" then ;
  C -> if top=a then "c" C(pop);
  C -> if top="#" then ;
)";

// Deterministic variant: the input n arrives encoded as the pushdown a^n#.
inline const char* G3 = R"(
storage pushdown;
class cf;
nonterminals Ain, A, B, C;
terminals a, b, c;
initial Ain;
encoding unary(a, "#");
rules:
  Ain -> A(stay) B(stay) C(stay);
  A -> if top=a then "a" A(pop);
  A -> if top="#" then ;
  B -> if top=a then "b" B(pop);
  B -> if top="#" then ;
  C -> if top=a then "c" C(pop);
  C -> if top="#" then ;
)";

// Suffix transducer over One-way, Sigma = {a,b}: a1..an into
// a1..an#a2..an#...#an#.
inline const char* G4 = R"(
storage oneway;
class cf;
nonterminals A, C;
terminals a, b, "#";
initial A;
encoding {a, b};
rules:
  A -> if first=a then "a" C(read) "#" A(read);
  A -> if first=b then "b" C(read) "#" A(read);
  A -> if empty then ;
  C -> if first=a then "a" C(read);
  C -> if first=b then "b" C(read);
  C -> if empty then ;
)";

// Tree-walking transducer computing prefixes of the yield; from the root it
// produces exactly yield(t). Binary input alphabet {sigma:2, a:0, b:0}.
inline const char* G5 = R"(
storage treewalk;
class cf;
nonterminals L, U;
terminals a, b;
initial U;
encoding {sigma:2, a:0, b:0};
rules:
  L -> if root then ;
  L -> if son=1 then L(up);
  L -> if son=2 then U(up;down(1));
  U -> if label=a then L(stay) "a";
  U -> if label=b then L(stay) "b";
  U -> if label=sigma then U(down(2));
)";

// Alternating (universal) one-way pushdown acceptor of {a^n b^n c^n, n>=1}.
// The branch B checks that the b-block matches the a-count and is followed
// by a c; the branch C skips the b-block and counts the c's. C switches to
// a dedicated popping state D on its first c: a single skip-and-pop state
// would also admit b's interleaved between the c's (e.g. abcb, aabbcbc).
inline const char* G6 = R"(
storage product(oneway+id, pushdown);
class cf;
nonterminals Ain, A, B, C, D;
initial Ain;
encoding ({a,b,c}, "#");
rules:
  Ain -> A((id,stay));
  A -> if first=a then A((read,push(a)));
  A -> if first=b and top=a then B((read,pop)) C((read,stay));
  B -> if first=b and top=a then B((read,pop));
  B -> if first=c and top="#" then ;
  C -> if first=b and top=a then C((read,stay));
  C -> if first=c and top=a then D((read,pop));
  D -> if first=c and top=a then D((read,pop));
  D -> if empty and top="#" then ;
)";

// Preset pushdown automaton generating {a^(n*n), n>=1}.
inline const char* G7 = R"(
storage pd(countdown);
class reg;
nonterminals A, B, C;
terminals a;
initial A;
encoding ("#", en);
rules:
  A -> if not test(null) then "a" B(push($,dec)) else "a";
  B -> if not test(null) then "a" B(push($,dec)) else "a" C(pop);
  C -> if not top="#" then C(pop) else A(push("#",dec);push("#",dec));
)";

// RT variant of G1: n maps to the full binary +-tree of depth n.
inline const char* G1rt = R"(
storage countdown;
class rt;
nonterminals A;
terminals "+":2, "1":0;
initial A;
encoding en;
rules:
  A -> if null then "1" else "+"(A(dec), A(dec));
)";

// RT variant of G2: trees a^n sigma(b^n tau, c^n tau).
inline const char* G2rt = R"(
storage pushdown;
class rt;
nonterminals Ain, A, B, C;
terminals a:1, b:1, c:1, sigma:2, tau:0;
initial Ain;
encoding "#";
rules:
  Ain -> A(stay);
  A -> a(A(push(a)));
  A -> sigma(B(stay), C(stay));
  B -> if top=a then b(B(pop));
  B -> if top="#" then tau;
  C -> if top=a then c(C(pop));
  C -> if top="#" then tau;
)";

// The deterministic REG(Pd(Tree)) transducer for T = {(sigma a a, a),
// (sigma b b, b)}: it inspects both subtrees through the pushdown, which no
// deterministic top-down tree transducer can do without look-ahead.
inline const char* TreePairs = R"(
storage pd(tree);
class reg;
nonterminals A, B, Ca, Cb, Da, Db, E;
terminals a, b;
initial A;
encoding (g0, {sigma:2, a:0, b:0});
rules:
  A -> if test(root=sigma) and top=g0 then B(push(g1, sel(1)));
  B -> if test(root=a) and top=g1 then Ca(pop);
  B -> if test(root=b) and top=g1 then Cb(pop);
  Ca -> if top=g0 then Da(push(g2, sel(2)));
  Cb -> if top=g0 then Db(push(g2, sel(2)));
  Da -> if test(root=a) and top=g2 then "a" E(pop);
  Db -> if test(root=b) and top=g2 then "b" E(pop);
  E -> if top=g0 then ;
)";

// Deterministic finite acceptor (with finals) of the regular path language
// c2*(c1 a | c2 eps | c3 b) over the path alphabet of {c:3, a:0, b:0, eps:0}.
inline const char* PathsEx1 = R"(
storage s0;
class reg;
nonterminals S, T, Pa, Pb, F;
terminals "c.1", "c.2", "c.3", a, b, eps;
initial S;
encoding en;
finals F;
rules:
  S -> "c.2" T(id);
  S -> "c.1" Pa(id);
  S -> "c.3" Pb(id);
  T -> "c.2" T(id);
  T -> "c.1" Pa(id);
  T -> "c.3" Pb(id);
  T -> "eps" F(id);
  Pa -> "a" F(id);
  Pb -> "b" F(id);
)";

// Deterministic pushdown acceptor (with finals) of the path language
// {c1^n w a | w in {b1,b2}^n, n>=0} over the path alphabet of
// {b:2, c:1, a:0}.
inline const char* PathsEx2 = R"(
storage pushdown;
class reg;
nonterminals S, B, Q;
terminals "c.1", "b.1", "b.2", a;
initial S;
encoding "#";
finals Q;
rules:
  S -> "c.1" S(push(c));
  S -> if top=c then "b.1" B(pop);
  S -> if top=c then "b.2" B(pop);
  S -> if top="#" then "a" Q(stay);
  B -> if top=c then "b.1" B(pop);
  B -> if top=c then "b.2" B(pop);
  B -> if top="#" then "a" Q(stay);
)";

// {a^n b^n} as a REG(Pushdown) r-acceptor: G2 with the C-branch dropped and
// the pop-loop made r-acceptor deterministic (read b while popping).
inline const char* AnBn = R"(
storage pushdown;
class reg;
nonterminals Ain, A, B;
terminals a, b;
initial Ain;
encoding "#";
rules:
  Ain -> A(stay);
  A -> "a" A(push(a));
  A -> if top=a then "b" B(pop);
  B -> if top=a then "b" B(pop);
  B -> if top="#" then ;
)";

inline gws::Grammar get(const char* text, const std::string& name) {
  return gws::parse_grammar(text, name);
}

inline gws::Grammar g1() { return get(G1, "g1"); }
inline gws::Grammar g2() { return get(G2, "g2"); }
inline gws::Grammar g3() { return get(G3, "g3"); }
inline gws::Grammar g4() { return get(G4, "g4"); }
inline gws::Grammar g5() { return get(G5, "g5"); }
inline gws::Grammar g6() { return get(G6, "g6"); }
inline gws::Grammar g7() { return get(G7, "g7"); }
inline gws::Grammar g1rt() { return get(G1rt, "g1rt"); }
inline gws::Grammar g2rt() { return get(G2rt, "g2rt"); }
inline gws::Grammar tree_pairs() { return get(TreePairs, "tree_pairs"); }
inline gws::Grammar paths_ex1() { return get(PathsEx1, "paths_ex1"); }
inline gws::Grammar paths_ex2() { return get(PathsEx2, "paths_ex2"); }
inline gws::Grammar anbn() { return get(AnBn, "anbn"); }

// Convenience: a word from a character string (one symbol per character).
inline std::vector<gws::Sym> word(const std::string& chars) {
  std::vector<gws::Sym> out;
  for (char c : chars) out.push_back(gws::Sym(std::string(1, c)));
  return out;
}

inline std::vector<std::vector<gws::Sym>> words(
    const std::vector<std::string>& ws) {
  std::vector<std::vector<gws::Sym>> out;
  for (const auto& w : ws) out.push_back(word(w));
  return out;
}

}  // namespace corpus

#endif  // GWS_TESTS_CORPUS_HPP
