#ifndef GWS_PARSE_HPP
#define GWS_PARSE_HPP

#include "gws/lookahead.hpp"

namespace gws {

// ---------------------------------------------------------------------------
// Grammar text format (.gws):
//
//   # comment
//   storage pd(countdown);
//   class reg;                          (optional; inferred when absent)
//   nonterminals A, B, C;
//   terminals a, b, c;                  (ranked: sigma:2, a:0, eps:0)
//   initial A;
//   encoding (#, en);
//   finals Q;                           (optional)
//   rules:
//     A -> if not test(null) then "a" B(push($,dec)) else "a";
//     B -> if top=# then ;
//
// Right-hand sides are whitespace-separated quoted terminals and calls
// B(f) / B(f1;f2); RT rules carry one tree term sigma(B(f), "a").
// ---------------------------------------------------------------------------

namespace parser_detail {

enum class Tok { Ident, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0, col = 0;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::string file)
      : src_(src), file_(std::move(file)) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (c == '"') {
      advance();
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        s += src_[pos_];
        advance();
      }
      if (pos_ >= src_.size()) err("unterminated string literal", t);
      advance();
      t.kind = Tok::String;
      t.text = s;
      return t;
    }
    if (c == '<') {  // angle identifier, e.g. <A,g,B>
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '>') {
        s += src_[pos_];
        advance();
      }
      if (pos_ >= src_.size()) err("unterminated '<' identifier", t);
      s += '>';
      advance();
      t.kind = Tok::Ident;
      t.text = s;
      return t;
    }
    if (ident_char(c)) {
      std::string s;
      while (pos_ < src_.size() && ident_char(src_[pos_])) {
        s += src_[pos_];
        advance();
      }
      t.kind = Tok::Ident;
      t.text = s;
      return t;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      t.kind = Tok::Punct;
      t.text = "->";
      return t;
    }
    advance();
    t.kind = Tok::Punct;
    t.text = std::string(1, c);
    return t;
  }

  [[noreturn]] void err(const std::string& msg, const Token& at) const {
    fail(ErrorKind::Syntax, file_ + ":" + std::to_string(at.line) + ":" +
                                std::to_string(at.col) + ": " + msg);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

}  // namespace parser_detail

class GrammarParser {
 public:
  GrammarParser(std::string_view src, std::string file)
      : lex_(src, std::move(file)) {
    shift();
  }

  Grammar parse_grammar_file() {
    Grammar g = parse_grammar_body("");
    expect_end();
    return g;
  }

 private:
  using Token = parser_detail::Token;
  using Tok = parser_detail::Tok;

  parser_detail::Lexer lex_;
  Token cur_;

  void shift() { cur_ = lex_.next(); }
  bool at_ident(const char* s) const {
    return cur_.kind == Tok::Ident && cur_.text == s;
  }
  bool at_punct(const char* s) const {
    return cur_.kind == Tok::Punct && cur_.text == s;
  }
  void expect_punct(const char* s) {
    if (!at_punct(s)) lex_.err(std::string("expected '") + s + "'", cur_);
    shift();
  }
  void expect_ident(const char* s) {
    if (!at_ident(s)) lex_.err(std::string("expected '") + s + "'", cur_);
    shift();
  }
  void expect_end() {
    if (cur_.kind != Tok::End) lex_.err("trailing input", cur_);
  }
  std::string take_name() {
    if (cur_.kind != Tok::Ident && cur_.kind != Tok::String)
      lex_.err("expected an identifier", cur_);
    std::string s = cur_.text;
    shift();
    return s;
  }

  // ---- storage expressions ----

  StoragePtr parse_storage_expr() {
    StoragePtr s = parse_storage_primary();
    while (at_punct("+")) {
      shift();
      expect_ident("id");
      s = with_identity(s);
    }
    return s;
  }

  StoragePtr parse_storage_primary() {
    if (cur_.kind != Tok::Ident) lex_.err("expected a storage type", cur_);
    std::string name = cur_.text;
    shift();
    if (name == "product") {
      expect_punct("(");
      StoragePtr a = parse_storage_expr();
      expect_punct(",");
      StoragePtr b = parse_storage_expr();
      expect_punct(")");
      return product(a, b);
    }
    if (name == "pd" || name == "pdp") {
      if (at_punct("(")) {
        shift();
        StoragePtr a = parse_storage_expr();
        expect_punct(")");
        return pushdown_of(a, name == "pdp");
      }
      return name == "pd" ? pushdown_storage() : counter_storage();
    }
    if (name == "lookahead") {
      expect_punct("(");
      StoragePtr base = parse_storage_expr();
      expect_punct(",");
      long long bound;
      Token at = cur_;
      if (!term_to_int(Term(take_name()), bound))
        lex_.err("expected a step bound", at);
      expect_punct(")");
      expect_ident("with");
      expect_punct("{");
      std::vector<LookaheadEntry> registry;
      std::vector<std::pair<Sym, Sym>> exclusive;
      while (!at_punct("}")) {
        if (at_ident("grammar")) {
          shift();
          Sym nm(take_name());
          expect_punct("{");
          Grammar inner = parse_grammar_body(nm.str());
          expect_punct("}");
          registry.push_back({nm, std::move(inner)});
        } else if (at_ident("exclusive")) {
          shift();
          Sym a(take_name());
          expect_punct(",");
          Sym b(take_name());
          expect_punct(";");
          exclusive.emplace_back(a, b);
        } else {
          lex_.err("expected 'grammar' or 'exclusive'", cur_);
        }
      }
      shift();  // }
      return with_lookahead(base, std::move(registry),
                            static_cast<int>(bound), std::move(exclusive));
    }
    return builtin_storage(name);
  }

  // ---- terms (instructions, encodings, predicates) ----

  Term parse_term() {
    if (at_punct("(")) {  // tuple
      shift();
      std::vector<Term> args;
      args.push_back(parse_term());
      while (at_punct(",")) {
        shift();
        args.push_back(parse_term());
      }
      expect_punct(")");
      if (args.size() == 1) return args[0];
      return Term(Sym(), std::move(args));
    }
    if (at_punct("{")) return parse_alphabet_term();
    std::string head = take_name();
    if (at_punct("(")) {
      shift();
      std::vector<Term> args;
      if (!at_punct(")")) {
        args.push_back(parse_term());
        while (at_punct(",")) {
          shift();
          args.push_back(parse_term());
        }
      }
      expect_punct(")");
      return Term(Sym(head), std::move(args));
    }
    return Term(Sym(head));
  }

  Term parse_alphabet_term() {
    expect_punct("{");
    std::vector<Term> entries;
    if (!at_punct("}")) {
      while (true) {
        std::string sym = take_name();
        if (at_punct(":")) {
          shift();
          Token at = cur_;
          Term rank(take_name());
          long long r;
          if (!term_to_int(rank, r)) lex_.err("expected a rank", at);
          entries.push_back(Term(":", {Term(Sym(sym)), rank}));
        } else {
          entries.push_back(Term(Sym(sym)));
        }
        if (!at_punct(",")) break;
        shift();
      }
    }
    expect_punct("}");
    return Term("{}", std::move(entries));
  }

  std::vector<Term> parse_chain() {
    std::vector<Term> chain;
    chain.push_back(parse_term());
    while (at_punct(";")) {
      shift();
      chain.push_back(parse_term());
    }
    return chain;
  }

  // ---- tests ----

  Test parse_test() { return parse_or(); }

  Test parse_or() {
    std::vector<Test> kids;
    kids.push_back(parse_and());
    while (at_ident("or")) {
      shift();
      kids.push_back(parse_and());
    }
    return Test::disj(std::move(kids));
  }

  Test parse_and() {
    std::vector<Test> kids;
    kids.push_back(parse_unary_test());
    while (at_ident("and")) {
      shift();
      kids.push_back(parse_unary_test());
    }
    return Test::conj(std::move(kids));
  }

  Test parse_unary_test() {
    if (at_ident("not")) {
      shift();
      return Test::negate(parse_unary_test());
    }
    if (at_punct("(")) {
      shift();
      Test t = parse_test();
      expect_punct(")");
      return t;
    }
    if (at_ident("true")) {
      shift();
      return Test::truth();
    }
    if (at_ident("false")) {
      shift();
      return Test::falsity();
    }
    return parse_pred_atom();
  }

  Test parse_pred_atom() {
    if (cur_.kind != Tok::Ident) lex_.err("expected a predicate", cur_);
    std::string head = cur_.text;
    shift();
    if (at_punct("=")) {
      shift();
      std::string val = take_name();
      return Test::leaf(Term(Sym(head + "="), {Term(Sym(val))}));
    }
    if (at_punct("(")) {
      if (head == "test") {
        // test(b) abbreviates b with every leaf p replaced by test(p).
        shift();
        Test inner = parse_test();
        expect_punct(")");
        return wrap_test(inner);
      }
      shift();
      std::vector<Term> args;
      if (!at_punct(")")) {
        args.push_back(parse_term());
        while (at_punct(",")) {
          shift();
          args.push_back(parse_term());
        }
      }
      expect_punct(")");
      return Test::leaf(Term(Sym(head), std::move(args)));
    }
    return Test::leaf(Term(Sym(head)));
  }

  static Test wrap_test(const Test& t) {
    switch (t.kind) {
      case Test::Kind::True:
      case Test::Kind::False:
        return t;
      case Test::Kind::Pred:
        return Test::leaf(Term(detail::sym_test(), {t.pred}));
      default: {
        Test out = t;
        for (Test& k : out.kids) k = wrap_test(k);
        return out;
      }
    }
  }

  // ---- rules ----

  // Parses one rule item (terminal, call, or RT tree node in prefix form).
  void parse_rhs_item(const Grammar& g, std::vector<RhsItem>& items) {
    bool quoted = cur_.kind == Tok::String;
    std::string name = take_name();
    if (!at_punct("(")) {
      if (quoted || (g.class_tag == ClassTag::RT && g.is_terminal(Sym(name))))
        items.push_back(RhsItem::terminal(Sym(name)));
      else
        lex_.err("terminal symbols must be quoted; calls need an "
                 "instruction list",
                 cur_);
      return;
    }
    if (g.is_nonterminal(Sym(name))) {
      shift();
      std::vector<Term> chain = parse_chain();
      expect_punct(")");
      items.push_back(RhsItem::call(Sym(name), std::move(chain)));
      return;
    }
    (void)quoted;
    if (g.class_tag != ClassTag::RT)
      lex_.err("call of undeclared nonterminal " + name, cur_);
    // RT tree node: children in prefix order.
    items.push_back(RhsItem::terminal(Sym(name)));
    shift();
    if (!at_punct(")")) {
      while (true) {
        parse_rhs_item(g, items);
        if (!at_punct(",")) break;
        shift();
      }
    }
    expect_punct(")");
  }

  // Parses rule right-hand-side items up to ';' or 'else'.
  std::vector<RhsItem> parse_rhs_items(const Grammar& g) {
    std::vector<RhsItem> items;
    while (!at_punct(";") && !at_ident("else")) {
      if (cur_.kind != Tok::Ident && cur_.kind != Tok::String)
        lex_.err("expected a rule item", cur_);
      parse_rhs_item(g, items);
    }
    return items;
  }

  void finish_rule(Grammar& g, Sym lhs, Test test,
                   std::vector<RhsItem> items) {
    // Mark a trailing B(id) of a cf_ext grammar as an id-tail call.
    if (g.class_tag == ClassTag::CFExt && !items.empty()) {
      RhsItem& last = items.back();
      if (last.kind == RhsItem::Kind::Call && last.chain.size() == 1 &&
          last.chain[0] == Term(detail::sym_id()))
        last = RhsItem::tail_call(last.sym);
    }
    Rule r;
    r.lhs = lhs;
    r.test = std::move(test);
    r.rhs = std::move(items);
    g.rules.push_back(std::move(r));
  }

  // ---- grammar body ----

  Grammar parse_grammar_body(const std::string& name) {
    Grammar g;
    if (!name.empty()) g.name = name;
    bool have_class = false;
    while (true) {
      if (at_ident("storage")) {
        shift();
        g.storage = parse_storage_expr();
        expect_punct(";");
      } else if (at_ident("class")) {
        shift();
        std::string c = take_name();
        if (c == "cf")
          g.class_tag = ClassTag::CF;
        else if (c == "cf_ext")
          g.class_tag = ClassTag::CFExt;
        else if (c == "reg")
          g.class_tag = ClassTag::REG;
        else if (c == "rt")
          g.class_tag = ClassTag::RT;
        else
          lex_.err("unknown class tag " + c, cur_);
        have_class = true;
        expect_punct(";");
      } else if (at_ident("nonterminals")) {
        shift();
        while (true) {
          g.add_nonterminal(Sym(take_name()));
          if (!at_punct(",")) break;
          shift();
        }
        expect_punct(";");
      } else if (at_ident("terminals")) {
        shift();
        while (true) {
          std::string s = take_name();
          int rank = -1;
          if (at_punct(":")) {
            shift();
            Token at = cur_;
            long long r;
            if (!term_to_int(Term(take_name()), r))
              lex_.err("expected a rank", at);
            rank = static_cast<int>(r);
          }
          g.terminals.add(Sym(s), rank);
          if (!at_punct(",")) break;
          shift();
        }
        expect_punct(";");
      } else if (at_ident("initial")) {
        shift();
        g.initial = Sym(take_name());
        expect_punct(";");
      } else if (at_ident("encoding")) {
        shift();
        g.encoding = parse_term();
        expect_punct(";");
      } else if (at_ident("finals")) {
        shift();
        while (true) {
          g.finals.push_back(Sym(take_name()));
          if (!at_punct(",")) break;
          shift();
        }
        expect_punct(";");
      } else if (at_ident("rules")) {
        shift();
        expect_punct(":");
        break;
      } else {
        lex_.err("expected a grammar section", cur_);
      }
    }
    if (!have_class) {
      // Infer: ranked terminals mean rt; the other tags must be declared.
      bool ranked = !g.terminals.entries.empty();
      for (auto& e : g.terminals.entries)
        if (e.second < 0) ranked = false;
      g.class_tag = ranked ? ClassTag::RT : ClassTag::CF;
    }
    // Rules until '}' (nested grammar) or end of input.
    while (cur_.kind == Tok::Ident && !at_punct("}")) {
      Sym lhs(take_name());
      expect_punct("->");
      Test test = Test::truth();
      if (at_ident("if")) {
        shift();
        test = parse_test();
        expect_ident("then");
      }
      std::vector<RhsItem> items = parse_rhs_items(g);
      if (at_ident("else")) {
        shift();
        std::vector<RhsItem> other = parse_rhs_items(g);
        expect_punct(";");
        finish_rule(g, lhs, test, std::move(items));
        finish_rule(g, lhs, Test::negate(test), std::move(other));
      } else {
        expect_punct(";");
        finish_rule(g, lhs, std::move(test), std::move(items));
      }
    }
    return g;
  }
};

// Parses and validates a grammar from text. Inconsistencies are reported as
// validation errors naming the grammar and rule.
inline Grammar parse_grammar(std::string_view text,
                             const std::string& name = "grammar") {
  GrammarParser p(text, name);
  Grammar g = p.parse_grammar_file();
  g.name = name;
  ClassificationReport rep = validate(g);
  if (!rep.ok()) fail(ErrorKind::Validation, rep.issues.front());
  return g;
}

// Parses a tree literal like sigma(a,b); bare leaves need no quotes.
inline TreePtr parse_tree_literal(std::string_view text) {
  parser_detail::Lexer lex(text, "<tree>");
  std::function<TreePtr(parser_detail::Token&)> node =
      [&](parser_detail::Token& cur) -> TreePtr {
    if (cur.kind != parser_detail::Tok::Ident &&
        cur.kind != parser_detail::Tok::String)
      lex.err("expected a tree node label", cur);
    Sym label(cur.text);
    cur = lex.next();
    std::vector<TreePtr> kids;
    if (cur.kind == parser_detail::Tok::Punct && cur.text == "(") {
      cur = lex.next();
      while (true) {
        kids.push_back(node(cur));
        if (cur.kind == parser_detail::Tok::Punct && cur.text == ",") {
          cur = lex.next();
          continue;
        }
        break;
      }
      if (cur.kind != parser_detail::Tok::Punct || cur.text != ")")
        lex.err("expected ')'", cur);
      cur = lex.next();
    }
    return make_tree(label, std::move(kids));
  };
  parser_detail::Token cur = lex.next();
  TreePtr t = node(cur);
  if (cur.kind != parser_detail::Tok::End) lex.err("trailing input", cur);
  return t;
}

}  // namespace gws

#endif  // GWS_PARSE_HPP
