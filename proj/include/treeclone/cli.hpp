#pragma once

// The treeclone command line. Exit codes: 0 success or positive verdict,
// 1 negative verdict, 2 usage or input error, 3 inconclusive at the caps.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "treeclone/corpus.hpp"
#include "treeclone/deciders.hpp"
#include "treeclone/dfta.hpp"
#include "treeclone/preclone.hpp"
#include "treeclone/psv.hpp"
#include "treeclone/reclang.hpp"

namespace treeclone::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, negative = 1, usage = 2, inconclusive = 3 };

struct Globals {
  bool json = false;
  bool verbose = false;
  bool timings = false;
  std::size_t max_rank = 0;  // 0: default cap
};

namespace detail {

inline json table_json(const Transf& t) { return json(t.table()); }

inline json witness_json(const std::vector<WitnessItem>& items) {
  json arr = json::array();
  for (const auto& w : items) {
    json o;
    o["role"] = w.role;
    o["term"] = w.term;
    if (w.value.carrier_size() > 0) o["table"] = table_json(w.value);
    arr.push_back(std::move(o));
  }
  return arr;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("expected a comma-separated list of integers, got '" + s + "'");
    }
    out.push_back(std::stoul(part));
  }
  return out;
}

// A pg-pair operand: an automaton file (its syntactic pg-pair) or the name
// of a built-in preclone: T_exists, T_path, T_<p>, T_<p>,<q>.
inline std::optional<ReferenceSpec> reference_from_name(const std::string& name) {
  if (name == "T_exists") return ReferenceSpec{Reference::exists, 2, 0};
  if (name == "T_path") return ReferenceSpec{Reference::path, 2, 0};
  if (name.rfind("T_", 0) != 0) return std::nullopt;
  const std::string rest = name.substr(2);
  try {
    auto nums = parse_size_list(rest);
    if (nums.size() == 1) return ReferenceSpec{Reference::mod, nums[0], 0};
    if (nums.size() == 2) return ReferenceSpec{Reference::threshold, nums[0], nums[1]};
  } catch (const Error&) {
  }
  return std::nullopt;
}

inline PgPairTrunc load_pgpair(const std::string& arg, std::size_t K) {
  if (!std::filesystem::exists(arg)) {
    if (auto spec = reference_from_name(arg)) return build_reference_preclone(*spec, K);
  }
  return syntactic_pgpair(load_dfta(arg), K);
}

}  // namespace detail

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"treeclone: tree automata, syntactic preclones and definability checks", "treeclone"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_flag("--json", g_.json, "Machine-readable output");
    app.add_flag("--verbose", g_.verbose, "Print tables next to witness terms");
    app.add_flag("--timings", g_.timings, "Report wall-clock timings");
    app.add_option("--max-rank", g_.max_rank, "Rank cap K of truncations");

    std::function<int()> action;
    std::vector<std::string> inputs;

    // min
    std::string a_path, b_path, tree_text, out_path;
    auto* min = app.add_subcommand("min", "Minimize an automaton and print it with canonical state names");
    min->add_option("automaton", a_path)->required();
    min->add_option("-o,--output", out_path, "Write the automaton to this file");
    min->callback([&] { action = [&] { return cmd_min(a_path, out_path); }; });

    auto* member = app.add_subcommand("member", "Test whether a rank-0 tree is accepted");
    member->add_option("automaton", a_path)->required();
    member->add_option("tree", tree_text)->required();
    member->callback([&] { action = [&] { return cmd_member(a_path, tree_text); }; });

    auto* eval = app.add_subcommand("eval", "Evaluate a tree: a state for rank 0, a table otherwise");
    eval->add_option("automaton", a_path)->required();
    eval->add_option("tree", tree_text)->required();
    eval->callback([&] { action = [&] { return cmd_eval(a_path, tree_text); }; });

    std::string op;
    auto* boolean = app.add_subcommand("bool", "Boolean combination: union, intersection, difference, xor, complement");
    boolean->add_option("op", op)->required()->check(
        CLI::IsMember({"union", "intersection", "difference", "xor", "complement"}));
    boolean->add_option("a", a_path)->required();
    boolean->add_option("b", b_path);
    boolean->callback([&] { action = [&] { return cmd_bool(op, a_path, b_path); }; });

    auto* equal = app.add_subcommand("equal", "Compare the languages of two automata");
    equal->add_option("a", a_path)->required();
    equal->add_option("b", b_path)->required();
    equal->callback([&] { action = [&] { return cmd_equal(a_path, b_path); }; });

    auto* synt = app.add_subcommand("synt", "Print the truncated syntactic pg-pair");
    synt->add_option("automaton", a_path)->required();
    synt->callback([&] { action = [&] { return cmd_synt(a_path); }; });

    std::string side;
    std::vector<std::string> right_trees;
    std::size_t k1 = 0, k2 = 0;
    auto* quot = app.add_subcommand("quotient", "Left or right quotient of the language of an automaton");
    quot->add_option("side", side)->required()->check(CLI::IsMember({"left", "right"}));
    quot->add_option("automaton", a_path)->required();
    quot->add_option("trees", right_trees, "right: the tuple v; left: the context u")->required();
    quot->add_option("--k1", k1, "Variables left of the hole (left quotient)");
    quot->add_option("--k2", k2, "Variables right of the hole (left quotient)");
    quot->callback([&] { action = [&] { return cmd_quotient(side, a_path, right_trees, k1, k2); }; });

    std::string logic;
    std::size_t n_max = 6;
    auto* check = app.add_subcommand("check", "Decide definability in TL(EX), TL(EF) or FO[Succ]");
    check->add_option("logic", logic)->required()->check(CLI::IsMember({"ex", "ef", "fosucc"}));
    check->add_option("automaton", a_path)->required();
    check->add_option("--max-permutation-arity", n_max, "Largest arity for the permutation clause");
    check->callback([&] { action = [&] { return cmd_check(logic, a_path, n_max); }; });

    std::size_t power = 1, max_power = 4, budget = 2'000'000;
    auto* divide = app.add_subcommand("divide", "Does the first pg-pair divide a power of the second?");
    divide->add_option("t", a_path)->required();
    divide->add_option("s", b_path)->required();
    divide->add_option("--power", power, "Exponent m of the power")->check(CLI::PositiveNumber);
    divide->add_option("--budget", budget, "Search node budget");
    divide->callback([&] { action = [&] { return cmd_divide(a_path, b_path, power, budget); }; });

    auto* psv = app.add_subcommand("psv-member", "Is the first pg-pair in the pseudovariety generated by the second?");
    psv->add_option("t", a_path)->required();
    psv->add_option("s", b_path)->required();
    psv->add_option("--max-power", max_power, "Largest exponent searched")->check(CLI::PositiveNumber);
    psv->add_option("--budget", budget, "Search node budget per exponent");
    psv->callback([&] { action = [&] { return cmd_psv(a_path, b_path, max_power, budget); }; });

    std::string name, emit = "automaton", arities = "0,2";
    std::vector<std::size_t> params;
    auto* corpus = app.add_subcommand("corpus", "Emit a built-in automaton or preclone");
    corpus->add_option("name", name)->required()->check(CLI::IsMember(
        {"exists", "modcount", "modthreshold", "path", "next", "root-label", "all-ones", "T_exists", "T_p", "T_pq",
         "T_path"}));
    corpus->add_option("params", params, "Integer parameters (p r, p q r, ...)");
    corpus->add_option("--emit", emit)->check(CLI::IsMember({"automaton", "preclone"}));
    corpus->add_option("--arities", arities, "Letter ranks of the Boolean alphabet");
    corpus->callback([&] { action = [&] { return cmd_corpus(name, params, emit, arities); }; });

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out_ << app.help();
      return ok;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      return usage;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
      const int code = action();
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      emit_report(ms);
      return code;
    } catch (const ArityOverflow& e) {
      err_ << "inconclusive: " << e.what() << "\n";
      return inconclusive;
    } catch (const FormatError& e) {
      err_ << "error: " << e.what() << "\n";
      return usage;
    } catch (const ParseError& e) {
      err_ << "error: tree " << e.what() << "\n";
      return usage;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return usage;
    }
  }

 private:
  // ---- report assembly ----------------------------------------------------

  void begin(std::string verb, std::vector<std::string> inputs) {
    report_ = json::object();
    report_["verb"] = std::move(verb);
    report_["inputs"] = std::move(inputs);
    report_["caps"] = json::object();
    text_.clear();
  }

  void emit_report(double ms) {
    if (g_.json) {
      json t = json::object();
      if (g_.timings) t["total_ms"] = ms;
      report_["timings"] = t;
      out_ << report_.dump(2) << "\n";
    } else {
      out_ << text_;
      if (g_.timings) out_ << "time: " << ms << " ms\n";
    }
  }

  std::size_t cap_for(const RankedAlphabet& a) const {
    return g_.max_rank ? g_.max_rank : default_rank_cap(a);
  }

  Tree parse_input_tree(const Dfta& a, const std::string& text) { return parse_tree(text, a.alphabet()); }

  // ---- verbs --------------------------------------------------------------

  int cmd_min(const std::string& path, const std::string& out_path) {
    begin("min", {path});
    const Dfta m = minimize(load_dfta(path));
    const std::string text = format_dfta(m);
    report_["verdict"] = {{"states", m.num_states()}, {"automaton", text}};
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw Error("cannot write '" + out_path + "'");
      f << text;
      text_ = "min: " + std::to_string(m.num_states()) + " states written to " + out_path + "\n";
    } else {
      text_ = text;
    }
    return ok;
  }

  int cmd_member(const std::string& path, const std::string& tree) {
    begin("member", {path, tree});
    const Dfta a = load_dfta(path);
    const Tree t = parse_input_tree(a, tree);
    if (t.rank() != 0) throw Error("member expects a tree without variables");
    const State q = evaluate(a, t);
    const bool yes = a.is_final(q);
    report_["verdict"] = yes ? "yes" : "no";
    report_["state"] = a.state_name(q);
    text_ = std::string("member: ") + (yes ? "yes" : "no") + "\n";
    if (g_.verbose) text_ += "state: " + a.state_name(q) + "\n";
    return yes ? ok : negative;
  }

  int cmd_eval(const std::string& path, const std::string& tree) {
    begin("eval", {path, tree});
    const Dfta a = load_dfta(path);
    const Tree t = parse_input_tree(a, tree);
    if (t.rank() == 0) {
      const State q = evaluate(a, t);
      report_["verdict"] = a.state_name(q);
      text_ = "eval: " + a.state_name(q) + "\n";
    } else {
      const Transf f = tau_eval(a, t);
      report_["verdict"] = detail::table_json(f);
      report_["rank"] = t.rank();
      text_ = "eval: rank " + std::to_string(t.rank()) + " " + format_table(f) + "\n";
    }
    return ok;
  }

  int cmd_bool(const std::string& op, const std::string& a_path, const std::string& b_path) {
    begin("bool", b_path.empty() ? std::vector<std::string>{a_path} : std::vector<std::string>{a_path, b_path});
    report_["op"] = op;
    const Dfta a = load_dfta(a_path);
    std::optional<Dfta> r;
    if (op == "complement") {
      if (!b_path.empty()) throw Error("complement takes a single automaton");
      r = complement(a);
    } else {
      if (b_path.empty()) throw Error(op + " needs two automata");
      const Dfta b = load_dfta(b_path);
      const BoolOp bop = op == "union"          ? BoolOp::union_
                         : op == "intersection" ? BoolOp::intersection
                         : op == "difference"   ? BoolOp::difference
                                                : BoolOp::symmetric_difference;
      r = product(a, b, bop);
    }
    const std::string text = format_dfta(*r);
    report_["verdict"] = {{"states", r->num_states()}, {"empty", is_empty(*r)}, {"automaton", text}};
    text_ = text;
    return ok;
  }

  int cmd_equal(const std::string& a_path, const std::string& b_path) {
    begin("equal", {a_path, b_path});
    const Dfta a = load_dfta(a_path), b = load_dfta(b_path);
    if (!same_alphabet(a.alphabet(), b.alphabet())) throw AlphabetMismatch("automata use different alphabets");
    // Lift both languages to the product carrier and compare accepting sets.
    auto prod = std::make_shared<const Dfta>(product(a, b, BoolOp::intersection));
    auto sat = std::make_shared<const PgPairTrunc>(saturate(*prod, 1));
    std::vector<Transf> la, lb;
    const std::size_t nb = b.num_states();
    for (const auto& e : sat->preclone.level(0)) {
      const State q = e.value.value();
      if (a.is_final(static_cast<State>(q / nb))) la.push_back(e.value);
      if (b.is_final(static_cast<State>(q % nb))) lb.push_back(e.value);
    }
    const bool yes = lang_equal(RecLang(prod, sat, 0, la), RecLang(prod, sat, 0, lb));
    report_["verdict"] = yes ? "yes" : "no";
    text_ = std::string("equal: ") + (yes ? "yes" : "no") + "\n";
    return yes ? ok : negative;
  }

  int cmd_synt(const std::string& path) {
    begin("synt", {path});
    const Dfta a = load_dfta(path);
    const std::size_t K = cap_for(*a.alphabet());
    report_["caps"]["max_rank"] = K;
    const auto pg = syntactic_pgpair(a, K);
    json letters = json::array();
    text_.clear();
    for (std::size_t s = 0; s < pg.alphabet->size(); ++s) {
      const auto& sym = (*pg.alphabet)[s];
      letters.push_back({{"letter", sym.name}, {"table", detail::table_json(pg.letter_map[s])}});
      text_ += "letter " + sym.name + ": " + format_table(pg.letter_map[s]) + "\n";
    }
    json levels = json::array();
    for (std::size_t k = 0; k <= K; ++k) {
      json lvl = json::array();
      for (const auto& e : pg.preclone.level(k)) {
        lvl.push_back({{"table", detail::table_json(e.value)},
                       {"proper", e.proper()},
                       {"witness", e.witness ? print_tree(*e.witness) : "?"}});
      }
      levels.push_back(std::move(lvl));
    }
    text_ += format_truncation(pg.preclone);
    for (const auto& w : pg.preclone.warnings()) err_ << "warning: " << w << "\n";
    report_["verdict"] = {{"states", pg.carrier_size()}, {"level_sizes", pg.preclone.level_sizes()},
                          {"letters", letters}, {"levels", levels}};
    return ok;
  }

  int cmd_quotient(const std::string& side, const std::string& path, const std::vector<std::string>& trees,
                   std::size_t k1, std::size_t k2) {
    std::vector<std::string> in{path};
    in.insert(in.end(), trees.begin(), trees.end());
    begin("quotient", in);
    report_["side"] = side;
    const Dfta a = minimize(load_dfta(path));
    const RecLang L = RecLang::from_dfta(a);
    std::optional<RecLang> r;
    if (side == "right") {
      std::vector<Tree> comps;
      for (const auto& t : trees) comps.push_back(parse_input_tree(a, t));
      r = right_quotient(L, TreeTuple(std::move(comps)));
    } else {
      if (trees.size() != 1) throw Error("left quotient takes exactly one context tree");
      r = left_quotient(L, parse_input_tree(a, trees[0]), k1, k2);
    }
    const auto trunc = r->saturation();
    json acc = json::array();
    text_ = "quotient: rank " + std::to_string(r->rank()) + ", " + std::to_string(r->accepting().size()) +
            " of " + std::to_string(r->reachable().size()) + " reachable elements accepted\n";
    for (const auto& e : r->reachable()) {
      if (!r->contains_element(e.value)) continue;
      const std::string w = e.witness ? print_tree(*e.witness) : "?";
      acc.push_back({{"table", detail::table_json(e.value)}, {"witness", w}});
      text_ += "accept " + w + (g_.verbose ? " " + format_table(e.value) : std::string()) + "\n";
    }
    report_["verdict"] = {{"rank", r->rank()}, {"accepted", acc}, {"reachable", r->reachable().size()}};
    return ok;
  }

  int cmd_check(const std::string& logic, const std::string& path, std::size_t n_max) {
    begin("check", {path});
    report_["logic"] = logic;
    const Dfta a = load_dfta(path);
    std::size_t K = cap_for(*a.alphabet());
    if (logic == "ef") K = std::max(K, std::max<std::size_t>(1, a.alphabet()->max_rank()));
    report_["caps"]["max_rank"] = K;
    const auto pg = syntactic_pgpair(a, K);
    Verdict v = logic == "ex" ? check_ex(pg) : logic == "fosucc" ? check_fosucc(pg) : check_ef(pg, {n_max});
    if (logic == "ef") report_["caps"]["max_permutation_arity"] = n_max;
    report_["verdict"] = v.yes ? "yes" : "no";
    report_["clauses_checked"] = v.clauses_checked;
    if (!v.yes) {
      report_["condition"] = v.condition;
      report_["equation"] = v.equation;
      report_["witness"] = detail::witness_json(v.witness);
      report_["lhs"] = detail::table_json(*v.lhs);
      report_["rhs"] = detail::table_json(*v.rhs);
    }
    text_ = render_verdict(v, g_.verbose);
    return v.yes ? ok : negative;
  }

  json certificate_json(const std::vector<CertificateLine>& cert, std::string& text) {
    json arr = json::array();
    for (const auto& line : cert) {
      json comps = json::array();
      text += line.generator_term + " ↦ (";
      for (std::size_t j = 0; j < line.components.size(); ++j) {
        comps.push_back({{"term", line.component_terms[j]}, {"table", detail::table_json(line.components[j])}});
        text += (j ? ", " : "") + line.component_terms[j];
        if (g_.verbose) text += format_table(line.components[j]);
      }
      text += ")\n";
      arr.push_back({{"generator", line.generator_term},
                     {"table", detail::table_json(line.generator)},
                     {"image", comps}});
    }
    return arr;
  }

  std::size_t pair_cap(const std::string& t, const std::string& s) {
    if (g_.max_rank) return g_.max_rank;
    std::size_t K = 2;
    for (const auto& path : {t, s}) {
      if (std::filesystem::exists(path)) K = std::max(K, default_rank_cap(*load_dfta(path).alphabet()));
    }
    return K;
  }

  int cmd_divide(const std::string& t_arg, const std::string& s_arg, std::size_t m, std::size_t budget) {
    begin("divide", {t_arg, s_arg});
    const std::size_t K = pair_cap(t_arg, s_arg);
    report_["caps"]["max_rank"] = K;
    report_["caps"]["power"] = m;
    report_["caps"]["budget"] = budget;
    const auto t = detail::load_pgpair(t_arg, K);
    const auto s = detail::load_pgpair(s_arg, K);
    DivisionOptions opts;
    opts.node_budget = budget;
    const auto d = divides(t, s.preclone, m, K, opts);
    report_["verdict"] = to_string(d.outcome);
    text_ = std::string("divide: ") + to_string(d.outcome) + "\n";
    if (d.outcome == Outcome::yes) {
      report_["witness"] = certificate_json(d.certificate, text_);
    } else {
      report_["reason"] = d.reason;
      text_ += "reason: " + d.reason + "\n";
    }
    return d.outcome == Outcome::yes ? ok : d.outcome == Outcome::no ? negative : inconclusive;
  }

  int cmd_psv(const std::string& t_arg, const std::string& s_arg, std::size_t m_cap, std::size_t budget) {
    begin("psv-member", {t_arg, s_arg});
    const std::size_t K = pair_cap(t_arg, s_arg);
    report_["caps"]["max_rank"] = K;
    report_["caps"]["max_power"] = m_cap;
    report_["caps"]["budget"] = budget;
    const auto t = detail::load_pgpair(t_arg, K);
    const auto s = detail::load_pgpair(s_arg, K);
    DivisionOptions opts;
    opts.node_budget = budget;
    const auto r = member_generated(t, s, K, m_cap, opts);
    const std::string label = r.label();
    report_["verdict"] = label;
    report_["bound"] = r.bound ? json(*r.bound) : json(nullptr);
    report_["searched_up_to"] = r.searched_up_to;
    text_ = "psv-member: " + label + "\n";
    text_ += "bound: " + (r.bound ? std::to_string(*r.bound) : std::string("overflow")) +
             ", searched m <= " + std::to_string(r.searched_up_to) + "\n";
    if (r.outcome == Outcome::yes) {
      report_["power"] = r.power;
      text_ += "power: " + std::to_string(r.power) + "\n";
      report_["witness"] = certificate_json(r.certificate, text_);
      return ok;
    }
    report_["reason"] = r.reason;
    text_ += "reason: " + r.reason + "\n";
    return label == "no" ? negative : inconclusive;
  }

  int cmd_corpus(const std::string& name, const std::vector<std::size_t>& params, const std::string& emit,
                 const std::string& arity_list) {
    std::vector<std::string> in{name};
    for (auto p : params) in.push_back(std::to_string(p));
    begin("corpus", in);
    report_["emit"] = emit;
    const auto alph = boolean_alphabet(detail::parse_size_list(arity_list));
    const std::size_t K = cap_for(*alph);
    auto need = [&](std::size_t n) {
      if (params.size() != n) {
        throw Error("corpus entry '" + name + "' takes " + std::to_string(n) + " integer parameter(s)");
      }
    };
    std::optional<Dfta> a;
    std::optional<ReferenceSpec> ref;
    if (name == "exists") need(0), a = build_exists(alph);
    else if (name == "modcount") need(2), a = build_modcount(params[0], params[1], alph);
    else if (name == "modthreshold") need(3), a = build_modthreshold(params[0], params[1], params[2], alph);
    else if (name == "path") need(0), a = build_path(alph);
    else if (name == "next") need(0), a = build_next(alph);
    else if (name == "root-label") need(0), a = build_root_label(alph);
    else if (name == "all-ones") need(0), a = build_all_ones(alph);
    else if (name == "T_exists") need(0), ref = ReferenceSpec{Reference::exists, 2, 0};
    else if (name == "T_p") need(1), ref = ReferenceSpec{Reference::mod, params[0], 0};
    else if (name == "T_pq") need(2), ref = ReferenceSpec{Reference::threshold, params[0], params[1]};
    else if (name == "T_path") need(0), ref = ReferenceSpec{Reference::path, 2, 0};

    if (a && emit == "automaton") {
      text_ = format_dfta(*a);
      report_["verdict"] = {{"states", a->num_states()}, {"automaton", text_}};
      return ok;
    }
    if (ref && emit == "automaton") throw Error("'" + name + "' is a preclone; use --emit preclone");
    report_["caps"]["max_rank"] = K;
    const auto pg = a ? syntactic_pgpair(*a, K) : build_reference_preclone(*ref, K, alph);
    text_ = format_truncation(pg.preclone);
    report_["verdict"] = {{"level_sizes", pg.preclone.level_sizes()}, {"preclone", text_}};
    return ok;
  }

  std::ostream& out_;
  std::ostream& err_;
  Globals g_;
  json report_;
  std::string text_;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return Runner(out, err).run(argc, argv);
}

}  // namespace treeclone::cli
