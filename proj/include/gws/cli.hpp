#ifndef GWS_CLI_HPP
#define GWS_CLI_HPP

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gws/delta.hpp"
#include "gws/parse.hpp"
#include "gws/print.hpp"

namespace gws::cli {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Grammar load_grammar(const std::string& path) {
  return parse_grammar(read_file(path), path);
}

inline InputElement parse_input(const Grammar& g, const std::string& text) {
  switch (g.storage->input_kind(g.encoding)) {
    case InputElement::Kind::Unit:
      return InputElement::unit();
    case InputElement::Kind::Int: {
      try {
        return InputElement::integer(std::stoll(text));
      } catch (...) {
        fail(ErrorKind::Validation, "expected an integer input: " + text);
      }
    }
    case InputElement::Kind::Str: {
      std::vector<Sym> syms;
      if (text.find_first_of(" ,") != std::string::npos) {
        std::string cur;
        for (char c : text) {
          if (c == ' ' || c == ',') {
            if (!cur.empty()) syms.push_back(Sym(cur));
            cur.clear();
          } else {
            cur += c;
          }
        }
        if (!cur.empty()) syms.push_back(Sym(cur));
      } else {
        for (char c : text) syms.push_back(Sym(std::string(1, c)));
      }
      return InputElement::string(std::move(syms));
    }
    case InputElement::Kind::Tree:
      return InputElement::tree(parse_tree_literal(text));
  }
  fail(ErrorKind::Validation, "unsupported input kind");
}

inline RankedAlphabet parse_alphabet_flag(const std::string& text) {
  // c:3,a:0,b:0,eps:0
  RankedAlphabet out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    auto colon = cur.find(':');
    if (colon == std::string::npos)
      fail(ErrorKind::Validation, "alphabet entries need ranks: " + cur);
    out.add(Sym(cur.substr(0, colon)), std::stoi(cur.substr(colon + 1)));
    cur.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ' ')
      flush();
    else
      cur += c;
  }
  flush();
  return out;
}

inline std::vector<Sym> parse_symbol_list(const std::string& text) {
  std::vector<Sym> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(Sym(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(Sym(cur));
  return out;
}

inline json bounds_json(const Bounds& b) {
  return json{{"max_steps", b.max_steps},
              {"max_len", b.max_len},
              {"max_forms", b.max_forms},
              {"max_input_size", b.input_bound()}};
}

inline void emit_sample(const LanguageSample& s, const std::string& command,
                        bool as_json, std::ostream& out) {
  if (as_json) {
    json j;
    j["command"] = command;
    j["bounds"] = bounds_json(s.bounds);
    j["complete_up_to"] = s.complete_up_to;
    json items = json::array();
    if (s.is_trees)
      for (const TreePtr& t : s.tree_items) items.push_back(tree_to_string(t));
    else
      for (const auto& w : s.items) {
        json syms = json::array();
        for (Sym x : w) syms.push_back(x.str());
        items.push_back(syms);
      }
    j["items"] = items;
    out << j.dump(2) << "\n";
    return;
  }
  if (s.is_trees)
    for (const TreePtr& t : s.tree_items) out << tree_to_string(t) << "\n";
  else
    for (const auto& w : s.items) out << word_to_string(w) << "\n";
  out << "# complete_up_to=" << s.complete_up_to
      << " max_len=" << s.bounds.max_len << " max_steps=" << s.bounds.max_steps
      << "\n";
}

struct BoundsFlags {
  Bounds bounds;
  void attach(CLI::App* cmd) {
    cmd->add_option("--max-len", bounds.max_len, "output length / tree size");
    cmd->add_option("--max-steps", bounds.max_steps, "derivation steps");
    cmd->add_option("--max-forms", bounds.max_forms, "search frontier cap");
    cmd->add_option("--max-input", bounds.max_input_size,
                    "input enumeration size bound (default: max-len)");
  }
};

inline int run(std::vector<std::string> args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"grammars-with-storage workbench"};
  app.require_subcommand(1);
  bool as_json = false;
  int jobs = 1;
  app.add_flag("--format-json,--json", as_json, "machine-readable output");
  app.add_option("--jobs", jobs, "worker cap for the search engine");

  std::string file, file2, input_text, output_path, mode, alphabet_text,
      finals_text, hom_text, tree_text, paths_file;
  int step_bound = 64;
  int size_bound = 10;
  bool no_prune = false, trees_out = false, do_unmark = false, trace = false;

  auto* validate_cmd = app.add_subcommand("validate", "classify a grammar");
  validate_cmd->add_option("file", file)->required();

  auto* generate_cmd =
      app.add_subcommand("generate", "bounded language of a grammar");
  generate_cmd->add_option("file", file)->required();
  BoundsFlags gen_b;
  gen_b.attach(generate_cmd);
  generate_cmd->add_option("--finals", finals_text,
                           "accept by final state instead of empty store");

  auto* transduce_cmd =
      app.add_subcommand("transduce", "outputs on one input element");
  transduce_cmd->add_option("file", file)->required();
  transduce_cmd->add_option("--input", input_text)->required();
  transduce_cmd->add_flag("--trace", trace, "print one derivation per output");
  BoundsFlags tr_b;
  tr_b.attach(transduce_cmd);

  auto* accept_cmd = app.add_subcommand("accept", "d-acceptance of an input");
  accept_cmd->add_option("file", file)->required();
  accept_cmd->add_option("--input", input_text)->required();
  BoundsFlags ac_b;
  ac_b.attach(accept_cmd);

  auto* trees_cmd = app.add_subcommand("trees", "bounded tree language");
  trees_cmd->add_option("file", file)->required();
  BoundsFlags trees_b;
  trees_b.attach(trees_cmd);

  auto* construct_cmd =
      app.add_subcommand("construct", "apply a grammar construction");
  std::string construct_name;
  construct_cmd->add_option("name", construct_name)->required();
  construct_cmd->add_option("file", file);
  construct_cmd->add_option("-o,--output", output_path);
  construct_cmd->add_option("--step-bound", step_bound);
  construct_cmd->add_option("--mode", mode);
  construct_cmd->add_option("--alphabet", alphabet_text);
  construct_cmd->add_option("--finals", finals_text);
  construct_cmd->add_option("--tree", tree_text);
  construct_cmd->add_flag("--no-prune", no_prune);
  construct_cmd->add_flag("--unmark", do_unmark);
  BoundsFlags cons_b;
  cons_b.attach(construct_cmd);

  auto* delta_cmd = app.add_subcommand("delta", "delta operation on a path language");
  delta_cmd->add_option("file", file, "grammar source (.gws)");
  delta_cmd->add_option("--paths-file", paths_file,
                        "finite path language, one string per line");
  delta_cmd->add_option("--alphabet", alphabet_text)->required();
  delta_cmd->add_option("--size-bound", size_bound)->required();
  delta_cmd->add_option("--finals", finals_text);
  delta_cmd->add_flag("--trees", trees_out, "emit tree_D instead of delta_D");
  BoundsFlags delta_b;
  delta_b.attach(delta_cmd);

  auto* rew_cmd = app.add_subcommand(
      "re-witness", "spine-with-handles witness grammar from two linear grammars");
  rew_cmd->add_option("L", file)->required();
  rew_cmd->add_option("M", file2)->required();
  rew_cmd->add_option("--hom", hom_text, "a=bc;b=;c=d")->required();

  auto* equiv_cmd =
      app.add_subcommand("equiv", "bounded language equivalence");
  equiv_cmd->add_option("a", file)->required();
  equiv_cmd->add_option("b", file2)->required();
  BoundsFlags eq_b;
  eq_b.attach(equiv_cmd);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  auto sample_bounds = [&](BoundsFlags& b) {
    b.bounds.jobs = std::max(1, jobs);
    return b.bounds;
  };

  try {
    if (*validate_cmd) {
      Grammar g = load_grammar(file);
      ClassificationReport rep = validate(g);
      auto det_str = [&]() -> std::string {
        switch (rep.deterministic.kind) {
          case DetResult::Kind::Yes:
            return "yes";
          case DetResult::Kind::No:
            return "no (witness " + rep.deterministic.witness->to_string() +
                   ")";
          default:
            return "unknown-syntactic";
        }
      };
      if (as_json) {
        json j;
        j["command"] = "validate";
        j["result"] =
            json{{"declared", class_tag_name(rep.declared)},
                 {"strongest", class_tag_name(rep.strongest)},
                 {"normal_form", rep.normal_form},
                 {"deterministic", det_str()},
                 {"racceptor_deterministic",
                  rep.racceptor_det ? json(*rep.racceptor_det) : json()}};
        out << j.dump(2) << "\n";
      } else {
        out << "declared: " << class_tag_name(rep.declared) << "\n";
        out << "strongest: " << class_tag_name(rep.strongest)
            << (rep.normal_form ? " (normal form)" : "") << "\n";
        out << "deterministic: " << det_str() << "\n";
        if (rep.racceptor_det)
          out << "r-acceptor deterministic: "
              << (*rep.racceptor_det ? "yes" : "no") << "\n";
      }
      return 0;
    }
    if (*generate_cmd) {
      Grammar g = load_grammar(file);
      LanguageSample s;
      if (!finals_text.empty())
        s = generate_final_state(g, parse_symbol_list(finals_text),
                                 sample_bounds(gen_b));
      else if (g.class_tag == ClassTag::RT)
        s = generate_trees(g, sample_bounds(gen_b));
      else
        s = generate(g, sample_bounds(gen_b));
      emit_sample(s, "generate", as_json, out);
      return 0;
    }
    if (*transduce_cmd) {
      Grammar g = load_grammar(file);
      InputElement u = parse_input(g, input_text);
      if (trace) {
        auto res = transduce_with_traces(g, u, sample_bounds(tr_b));
        for (auto& [w, tr] : res) {
          out << word_to_string(w) << "\n";
          for (size_t i = 0; i < tr.steps.size(); ++i) {
            char head[16];
            std::snprintf(head, sizeof head, "%3zu ", i);
            out << "  " << head << (i ? "=> " : "   ")
                << form_to_string(tr.steps[i].form) << "\n";
          }
        }
        return 0;
      }
      LanguageSample s = transduce(g, u, sample_bounds(tr_b));
      emit_sample(s, "transduce", as_json, out);
      return 0;
    }
    if (*accept_cmd) {
      Grammar g = load_grammar(file);
      InputElement u = parse_input(g, input_text);
      AcceptOutcome o = d_accept(g, u, sample_bounds(ac_b));
      if (as_json)
        out << json{{"command", "accept"},
                    {"result", accept_outcome_name(o)}}
                   .dump(2)
            << "\n";
      else
        out << accept_outcome_name(o) << "\n";
      return o == AcceptOutcome::Exhausted ? 2 : 0;
    }
    if (*trees_cmd) {
      Grammar g = load_grammar(file);
      LanguageSample s = generate_trees(g, sample_bounds(trees_b));
      emit_sample(s, "trees", as_json, out);
      return 0;
    }
    if (*construct_cmd) {
      if (construct_name == "mark") {
        if (tree_text.empty())
          fail(ErrorKind::Validation, "construct mark needs --tree");
        TreePtr t = parse_tree_literal(tree_text);
        out << tree_to_string(do_unmark ? unmark_tree(t) : mark_tree(t))
            << "\n";
        return 0;
      }
      Grammar g = load_grammar(file);
      Grammar result;
      if (construct_name == "to-pda") {
        result = to_pushdown_automaton(g);
      } else if (construct_name == "to-grammar") {
        result = to_grammar(g, !no_prune);
      } else if (construct_name == "collapse-ext") {
        result = collapse_ext(g);
      } else if (construct_name == "det-la") {
        result = determinize_via_lookahead(g, step_bound);
      } else if (construct_name == "det-pf") {
        result = determinize_pf(g, step_bound);
      } else if (construct_name == "cfp-normal") {
        result = cfp_test_normal_form(g);
      } else if (construct_name == "normalize") {
        if (g.class_tag == ClassTag::REG)
          result = normalize_reg(g);
        else if (g.class_tag == ClassTag::RT)
          result = normalize_rt(g);
        else
          result = normalize_cfext(g);
      } else if (construct_name == "conv-reg") {
        RegConversion m;
        if (mode == "de-to-df")
          m = RegConversion::DeToDf;
        else if (mode == "df-to-reg")
          m = RegConversion::DfToReg;
        else if (mode == "df-pf-to-de")
          m = RegConversion::DfPrefixFreeToDe;
        else
          fail(ErrorKind::Validation, "conv-reg --mode: de-to-df | df-to-reg | df-pf-to-de");
        auto res = convert_acceptance_reg(
            g, m, parse_symbol_list(finals_text), cons_b.bounds);
        result = res.grammar;
        result.finals = res.finals;
      } else if (construct_name == "conv-rt") {
        RtConversion m;
        if (mode == "de-to-df")
          m = RtConversion::DeToDf;
        else if (mode == "df-to-rt")
          m = RtConversion::DfToRt;
        else if (mode == "df-to-de-la")
          m = RtConversion::DfToDeLA;
        else
          fail(ErrorKind::Validation, "conv-rt --mode: de-to-df | df-to-rt | df-to-de-la");
        result = convert_acceptance_rt(g, m, parse_alphabet_flag(alphabet_text),
                                       step_bound);
      } else if (construct_name == "deriv-trees") {
        result = derivation_tree_acceptor(g);
      } else if (construct_name == "yield-grammar") {
        result = yield_grammar(g);
      } else if (construct_name == "path-acceptor") {
        result = path_acceptor(g, parse_alphabet_flag(alphabet_text));
      } else if (construct_name == "tree-acceptor") {
        result = tree_acceptor_from_paths(g, parse_symbol_list(finals_text),
                                          parse_alphabet_flag(alphabet_text));
      } else {
        fail(ErrorKind::Validation,
             "unknown construction: " + construct_name);
      }
      std::string text = print_grammar(result);
      if (output_path.empty()) {
        out << text;
      } else {
        std::ofstream o(output_path);
        o << text;
      }
      return 0;
    }
    if (*delta_cmd) {
      DeltaSpec spec;
      spec.delta = parse_alphabet_flag(alphabet_text);
      spec.size_bound = size_bound;
      spec.source_bounds = sample_bounds(delta_b);
      if (!paths_file.empty()) {
        std::vector<std::vector<Sym>> strings;
        std::istringstream in(read_file(paths_file));
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          std::vector<Sym> w;
          std::string cur;
          for (char c : line + " ") {
            if (c == ' ' || c == '\t') {
              if (!cur.empty()) w.push_back(Sym(cur));
              cur.clear();
            } else {
              cur += c;
            }
          }
          strings.push_back(std::move(w));
        }
        spec.strings = std::move(strings);
      } else if (!file.empty()) {
        spec.grammar = load_grammar(file);
        spec.finals = finals_text.empty() ? spec.grammar->finals
                                          : parse_symbol_list(finals_text);
      } else {
        fail(ErrorKind::Validation, "delta needs a grammar or --paths-file");
      }
      LanguageSample s = trees_out ? tree_delta(spec) : delta_language(spec);
      emit_sample(s, "delta", as_json, out);
      return 0;
    }
    if (*rew_cmd) {
      Grammar l = load_grammar(file), m = load_grammar(file2);
      std::map<Sym, std::vector<Sym>> hom;
      std::string entry;
      for (char c : hom_text + ";") {
        if (c == ';') {
          if (!entry.empty()) {
            auto eq = entry.find('=');
            if (eq == std::string::npos)
              fail(ErrorKind::Validation, "--hom entries look like a=bc");
            std::vector<Sym> img;
            for (char d : entry.substr(eq + 1))
              img.push_back(Sym(std::string(1, d)));
            hom[Sym(entry.substr(0, eq))] = img;
          }
          entry.clear();
        } else {
          entry += c;
        }
      }
      ReWitness w = re_witness(l, m, hom);
      out << "# alphabet ";
      for (size_t i = 0; i < w.delta.entries.size(); ++i) {
        if (i) out << ", ";
        out << w.delta.entries[i].first.str() << ":"
            << w.delta.entries[i].second;
      }
      out << "\n" << print_grammar(w.k);
      return 0;
    }
    if (*equiv_cmd) {
      Grammar a = load_grammar(file), b = load_grammar(file2);
      Bounds bounds = sample_bounds(eq_b);
      bool rt = a.class_tag == ClassTag::RT;
      if (rt != (b.class_tag == ClassTag::RT))
        fail(ErrorKind::Precondition,
             "equiv: cannot compare a tree language with a string language");
      LanguageSample sa = rt ? generate_trees(a, bounds) : generate(a, bounds);
      LanguageSample sb = rt ? generate_trees(b, bounds) : generate(b, bounds);
      int upto = std::min({bounds.max_len, sa.complete_up_to,
                           sb.complete_up_to});
      if (upto < bounds.max_len)
        fail(ErrorKind::Resource,
             "equiv: samples certified only up to " + std::to_string(upto) +
                 " < requested " + std::to_string(bounds.max_len));
      auto keys = [&](const LanguageSample& s) {
        std::set<std::string> out_keys;
        if (rt)
          for (const TreePtr& t : s.tree_items) {
            if (static_cast<int>(tree_size(t)) <= upto)
              out_keys.insert(tree_to_string(t));
          }
        else
          for (const auto& w : s.items)
            if (static_cast<int>(w.size()) <= upto)
              out_keys.insert(word_to_string(w));
        return out_keys;
      };
      std::set<std::string> ka = keys(sa), kb = keys(sb);
      if (ka == kb) {
        if (as_json)
          out << json{{"command", "equiv"},
                      {"result", "equal"},
                      {"up_to", upto}}
                     .dump(2)
              << "\n";
        else
          out << "EQUAL up to " << upto << "\n";
        return 0;
      }
      std::string witness;
      for (const auto& k : ka)
        if (!kb.count(k)) {
          witness = k;
          break;
        }
      if (witness.empty())
        for (const auto& k : kb)
          if (!ka.count(k)) {
            witness = k;
            break;
          }
      if (as_json)
        out << json{{"command", "equiv"},
                    {"result", "differs"},
                    {"witness", witness}}
                   .dump(2)
            << "\n";
      else
        out << "DIFFERS: " << witness << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Resource:
      case ErrorKind::Unknown:
        return 2;
      default:
        return 1;
    }
  }
  err << "error: no command\n";
  return 1;
}

}  // namespace gws::cli

#endif  // GWS_CLI_HPP
