#include <doctest.h>

#include <sstream>

#include "gws/cli.hpp"

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = gws::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string grammar_path(const std::string& name) {
  return std::string(GWS_SOURCE_DIR) + "/grammars/" + name + ".gws";
}

}  // namespace

TEST_CASE("cli generate") {
  auto r = run({"generate", grammar_path("g2"), "--max-len", "9"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\nabc\n") != std::string::npos);
  CHECK(r.out.find("aaabbbccc\n") != std::string::npos);
  CHECK(r.out.find("# complete_up_to=9") != std::string::npos);

  auto j = run({"--json", "generate", grammar_path("g1"), "--max-len", "8",
                "--max-steps", "300"});
  CHECK(j.code == 0);
  auto parsed = nlohmann::json::parse(j.out);
  CHECK(parsed["command"] == "generate");
  CHECK(parsed["complete_up_to"] == 8);
  CHECK(parsed["items"].size() == 4);  // lambda, a, aa, aaaa
}

TEST_CASE("cli transduce and accept") {
  auto r = run({"transduce", grammar_path("g1"), "--input", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("aaaa\n", 0) == 0);

  auto tr = run({"transduce", grammar_path("g1"), "--input", "2", "--trace"});
  CHECK(tr.code == 0);
  CHECK(tr.out.find("A(2)") != std::string::npos);
  CHECK(tr.out.find("=> A(1) A(1)") != std::string::npos);

  auto acc = run({"accept", grammar_path("g6"), "--input", "aabbcc"});
  CHECK(acc.code == 0);
  CHECK(acc.out == "Accepted\n");
  auto rej = run({"accept", grammar_path("g6"), "--input", "aabbc"});
  CHECK(rej.code == 0);
  CHECK(rej.out == "RejectedWithinBounds\n");
}

TEST_CASE("cli validate and trees") {
  auto r = run({"validate", grammar_path("g2")});
  CHECK(r.code == 0);
  CHECK(r.out.find("strongest: cf") != std::string::npos);
  CHECK(r.out.find("deterministic: no (witness #)") != std::string::npos);

  auto t = run({"trees", grammar_path("g1rt"), "--max-len", "8",
                "--max-steps", "200"});
  CHECK(t.code == 0);
  CHECK(t.out.find("+(+(1,1),+(1,1))\n") != std::string::npos);
}

TEST_CASE("cli construct and equiv round trip") {
  std::string tmp = "/tmp/gws_test_pda.gws";
  auto c = run({"construct", "to-pda", grammar_path("g2"), "-o", tmp});
  CHECK(c.code == 0);
  auto e = run({"equiv", grammar_path("g2"), tmp, "--max-len", "9",
                "--max-steps", "400"});
  CHECK(e.code == 0);
  CHECK(e.out == "EQUAL up to 9\n");

  // Different languages give a witness.
  auto d = run({"equiv", grammar_path("g2"), grammar_path("anbn"),
                "--max-len", "8", "--max-steps", "300"});
  CHECK(d.code == 0);
  CHECK(d.out.rfind("DIFFERS:", 0) == 0);

  auto m = run({"construct", "mark", "--tree", "s(a,b)"});
  CHECK(m.code == 0);
  CHECK(m.out == "s(a(#),b(#))\n");
}

TEST_CASE("cli delta") {
  auto r = run({"delta", grammar_path("paths_ex1"), "--alphabet",
                "c:3,a:0,b:0,eps:0", "--size-bound", "13", "--max-steps",
                "300"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ab\n") != std::string::npos);
  CHECK(r.out.find("aaaabbbb\n") != std::string::npos);

  // Explicit path files, one string per line.
  std::string tmp = "/tmp/gws_paths.txt";
  {
    std::ofstream f(tmp);
    f << "c.1 a\nc.2 eps\nc.3 b\n";
  }
  auto x = run({"delta", "--paths-file", tmp, "--alphabet",
                "c:3,a:0,b:0,eps:0", "--size-bound", "6"});
  CHECK(x.code == 0);
  CHECK(x.out.find("ab\n") != std::string::npos);
}

TEST_CASE("cli error discipline") {
  // Domain errors exit 1.
  std::string bad = "/tmp/gws_bad.gws";
  {
    std::ofstream f(bad);
    f << "storage pushdown;\nnonterminals A;\nterminals a;\ninitial A;\n"
         "encoding \"#\";\nrules:\n  A -> if first=a then \"a\";\n";
  }
  auto r = run({"validate", bad});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown predicate") != std::string::npos);

  // Resource exhaustion exits 2 and never masquerades as an answer.
  auto x = run({"generate", grammar_path("g2"), "--max-len", "9",
                "--max-forms", "4"});
  CHECK(x.code == 2);
  CHECK(x.out.empty());
}

TEST_CASE("cli re-witness") {
  std::string l = "/tmp/gws_l.gws", m = "/tmp/gws_m.gws";
  {
    std::ofstream f(l);
    f << "storage s0;\nclass cf;\nnonterminals S;\nterminals a, b;\n"
         "initial S;\nencoding en;\nrules:\n  S -> \"a\" S(id) \"b\";\n"
         "  S -> ;\n";
  }
  {
    std::ofstream f(m);
    f << "storage s0;\nclass cf;\nnonterminals S, T;\nterminals a, b;\n"
         "initial S;\nencoding en;\nrules:\n  S -> \"a\" S(id);\n"
         "  S -> T(id);\n  T -> \"b\" T(id);\n  T -> ;\n";
  }
  auto r = run({"re-witness", l, m, "--hom", "a=c;b="});
  CHECK(r.code == 0);
  CHECK(r.out.find("# alphabet") != std::string::npos);
  CHECK(r.out.find("storage s0;") != std::string::npos);
  // The emitted grammar reparses.
  auto nl = r.out.find('\n');
  gws::Grammar k = gws::parse_grammar(r.out.substr(nl + 1), "k");
  CHECK(k.initial == gws::Sym("K0"));
}
