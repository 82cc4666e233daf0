#include <catch_amalgamated.hpp>

#include <fstream>

#include "support/oracles.hpp"

using namespace treeclone;

namespace {

std::string data(const std::string& name) { return std::string(TREECLONE_DATA) + "/" + name; }

Tree tree(const Dfta& a, const char* s) { return parse_tree(s, a.alphabet()); }

}  // namespace

TEST_CASE("evaluate on the exists automaton", "[algebra]") {
  auto a = build_exists();
  const State F = *a.find_state("F"), T = *a.find_state("T");
  CHECK(evaluate(a, tree(a, "1_0")) == T);
  CHECK(evaluate(a, tree(a, "0_2(0_0,0_0)")) == F);
  CHECK(evaluate(a, tree(a, "0_2(0_0, 0_2(1_0,0_0))")) == T);
  CHECK_THROWS_AS(evaluate(a, tree(a, "0_2(v1,0_0)")), ArityError);
  CHECK_THROWS_AS(evaluate(a, parse_tree("true", make_alphabet({{"true", 0}}))), AlphabetMismatch);
}

TEST_CASE("tau_eval values", "[algebra]") {
  auto a = build_exists();
  CHECK(tau_eval(a, Tree::unit(a.alphabet())) == Transf::identity(2));
  CHECK_FALSE(tau_eval(a, Tree::unit(a.alphabet())).proper());
  auto c = tau_eval(a, tree(a, "0_2(v1, 1_0)"));
  CHECK(c == Transf::constant(2, 1, *a.find_state("T")));
  CHECK(c.proper());
}

TEST_CASE("tau_eval is a morphism and restricts to evaluate", "[algebra][property]") {
  oracle::Rng rng(3);
  for (const auto& entry : oracle::corpus()) {
    const auto& a = entry.automaton;
    for (int i = 0; i < 300; ++i) {
      const std::size_t n = rng() % 3;
      auto f = oracle::random_tree(rng, a.alphabet(), n, 4);
      auto gs = oracle::random_tuple(rng, a.alphabet(), n, n == 0 ? 0 : rng() % 3, 3);
      std::vector<Transf> tg;
      for (const auto& g : gs) tg.push_back(tau_eval(a, g));
      CHECK(tau_eval(a, compose_trees(f, TreeTuple(gs))) == compose_transf(tau_eval(a, f), tg));
      auto t = oracle::random_tree(rng, a.alphabet(), 0, 6);
      CHECK(tau_eval(a, t).value() == evaluate(a, t));
    }
  }
}

TEST_CASE("corpus automata agree with their predicates", "[algebra]") {
  oracle::Rng rng(5);
  auto alph = boolean_alphabet();
  const auto trees = oracle::all_trees(alph, 3);
  CHECK(trees.size() == 202);
  for (const auto& entry : oracle::corpus(alph)) {
    INFO(entry.name);
    for (const auto& t : trees) CHECK(accepts(entry.automaton, t) == entry.predicate(t));
    for (int i = 0; i < 500; ++i) {
      auto t = oracle::random_tree(rng, alph, 0, 8);
      CHECK(accepts(entry.automaton, t) == entry.predicate(t));
    }
  }
}

TEST_CASE("Boolean operations", "[algebra]") {
  auto ex = build_exists();
  CHECK(is_empty(product(ex, complement(ex), BoolOp::intersection)));
  CHECK_FALSE(is_empty(ex));
  auto even = build_modcount(2, 0), odd = build_modcount(2, 1);
  CHECK(is_empty(complement(product(even, odd, BoolOp::union_))));
  CHECK(is_empty(product(even, odd, BoolOp::intersection)));
  CHECK(same_language(complement(complement(ex)), ex));
  CHECK_FALSE(same_language(ex, build_path()));

  oracle::Rng rng(9);
  auto alph = boolean_alphabet();
  const auto entries = oracle::corpus(alph);
  for (int i = 0; i < 1000; ++i) {
    const auto& x = entries[rng() % entries.size()];
    const auto& y = entries[rng() % entries.size()];
    auto t = oracle::random_tree(rng, alph, 0, 6);
    const bool px = x.predicate(t), py = y.predicate(t);
    CHECK(accepts(product(x.automaton, y.automaton, BoolOp::union_), t) == (px || py));
    CHECK(accepts(product(x.automaton, y.automaton, BoolOp::intersection), t) == (px && py));
    CHECK(accepts(product(x.automaton, y.automaton, BoolOp::difference), t) == (px && !py));
    CHECK(accepts(product(x.automaton, y.automaton, BoolOp::symmetric_difference), t) == (px != py));
    CHECK(accepts(complement(x.automaton), t) == !px);
  }
  CHECK_THROWS_AS(product(ex, build_exists(boolean_alphabet({0, 1, 2})), BoolOp::union_), AlphabetMismatch);
}

TEST_CASE("minimize examples", "[algebra]") {
  auto dup = load_dfta(data("dup.dfta"));
  CHECK(dup.num_states() == 3);
  auto m = minimize(dup);
  CHECK(m.num_states() == 2);
  CHECK(same_language(m, dup));
  CHECK(minimize(m) == m);
  CHECK(minimize(build_modcount(3, 0)).num_states() == 3);
  CHECK(m == minimize(build_exists(dup.alphabet())));
  // The state reached by the smallest tree comes first.
  CHECK(evaluate(m, tree(m, "0_0")) == 0);
}

TEST_CASE("minimize of an empty language", "[algebra]") {
  auto alph = make_alphabet({{"f", 1}, {"a", 0}});
  // Every tree reaches a; no state is final.
  Dfta a(alph, {"a", "b"}, {Transf::tabulate(2, 1, [](std::span<const State>) { return State{0}; }),
                             Transf::constant(2, 0, 0)},
         {false, true});
  auto m = minimize(a);
  CHECK(m.num_states() == 1);
  CHECK(is_empty(m));
  auto none = make_alphabet({{"f", 1}});
  Dfta b(none, {"s"}, {Transf::identity(1)}, {true});
  CHECK(is_empty(b));
  CHECK(minimize(b).num_states() == 1);
}

TEST_CASE("minimize preserves languages and matches Nerode classes", "[algebra][property]") {
  oracle::Rng rng(21);
  auto alph = boolean_alphabet();
  const auto deep = oracle::all_trees(alph, 4);
  for (const auto& entry : oracle::corpus(alph)) {
    INFO(entry.name);
    auto canonical = minimize(entry.automaton);
    CHECK(canonical.num_states() == entry.minimal_states);
    CHECK(oracle::nerode_classes(alph, entry.predicate, 3) == entry.minimal_states);
    for (int v = 0; v < 3; ++v) {
      auto variant = oracle::random_variant(entry.automaton, rng);
      auto m = minimize(variant);
      CHECK(m == canonical);
      for (std::size_t i = 0; i < deep.size(); i += 7) CHECK(accepts(m, deep[i]) == accepts(variant, deep[i]));
      for (int i = 0; i < 200; ++i) {
        auto t = oracle::random_tree(rng, alph, 0, 10);
        CHECK(accepts(m, t) == entry.predicate(t));
      }
    }
  }
}

TEST_CASE("minimize keeps only distinguishable states", "[algebra]") {
  auto alph = boolean_alphabet();
  const auto trees = oracle::all_trees(alph, 3);
  const auto ctxs = oracle::all_contexts(alph, 3);
  for (const auto& entry : oracle::corpus(alph)) {
    INFO(entry.name);
    auto m = minimize(entry.automaton);
    std::vector<std::optional<Tree>> rep(m.num_states());
    for (const auto& t : trees) {
      auto& r = rep[evaluate(m, t)];
      if (!r) r = t;
    }
    for (std::size_t p = 0; p < rep.size(); ++p) {
      REQUIRE(rep[p]);
      for (std::size_t q = p + 1; q < rep.size(); ++q) {
        bool separated = false;
        for (const auto& c : ctxs) {
          if (accepts(m, oracle::substitute(c, {*rep[p]})) != accepts(m, oracle::substitute(c, {*rep[q]}))) {
            separated = true;
            break;
          }
        }
        CHECK(separated);
      }
    }
  }
}

TEST_CASE("automaton files", "[algebra]") {
  for (const char* f : {"exists.dfta", "dup.dfta", "rootlabel.dfta", "even.dfta", "boolexpr.dfta"}) {
    INFO(f);
    auto a = load_dfta(data(f));
    CHECK(parse_dfta(format_dfta(a)) == a);
  }
  CHECK(same_language(load_dfta(data("exists.dfta")), build_exists()));
  CHECK(same_language(load_dfta(data("even.dfta")), build_modcount(2, 0)));
  CHECK(same_language(load_dfta(data("rootlabel.dfta")), build_root_label()));
  auto b = load_dfta(data("boolexpr.dfta"));
  CHECK(accepts(b, tree(b, "and(true,or(false,not(false)))")));
  CHECK_FALSE(accepts(b, tree(b, "and(true,not(true))")));
}

TEST_CASE("automaton file errors name line and token", "[algebra]") {
  const std::string head = "alphabet: a/0 f/1\nstates: p q\nfinal: q\n";
  auto error_of = [](const std::string& text) -> std::pair<std::size_t, std::string> {
    try {
      parse_dfta(text, "t.dfta");
    } catch (const FormatError& e) {
      return {e.line(), e.token()};
    }
    return {0, "<none>"};
  };
  CHECK(error_of(head + "trans: a() -> p\nf(p) -> q\n") == std::pair<std::size_t, std::string>{5, "f(q)"});
  CHECK(error_of(head + "trans: a() -> p\nf(p) -> r\nf(q) -> q\n").second == "r");
  CHECK(error_of(head + "trans: a() -> p\nf(p) -> q\nf(q) -> q\nf(p) -> p\n") ==
        std::pair<std::size_t, std::string>{7, "f"});
  CHECK(error_of(head + "trans: b() -> p\n").second == "b");
  CHECK(error_of(head + "trans: a(p) -> p\n").second == "a");
  CHECK(error_of("alphabet: a/x\n").second == "a/x");
  CHECK(error_of("states: p\nfinal: p\n").second == "");
  CHECK(error_of(head + "bogus line\n") == std::pair<std::size_t, std::string>{4, "bogus line"});
  CHECK_NOTHROW(parse_dfta(head + "trans: a -> p\nf(p) -> q   # comment\nf(q) -> q\n"));
  CHECK_THROWS_AS(load_dfta(data("missing.dfta")), FormatError);
  try {
    parse_dfta(head + "trans: a() -> p\n", "t.dfta");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("t.dfta") != std::string::npos);
  }
}

TEST_CASE("quotient examples", "[algebra]") {
  auto a = build_exists();
  auto L = RecLang::from_dfta(a);
  auto u = tree(a, "0_2(v1, 1_0)");
  auto Q = left_quotient(L, u, 0, 0);
  oracle::Rng rng(13);
  for (int i = 0; i < 50; ++i) CHECK(Q.contains(oracle::random_tree(rng, a.alphabet(), 0, 6)));
  CHECK(Q.accepting().size() == Q.reachable().size());

  auto R = right_quotient(L, TreeTuple({tree(a, "1_0")}));
  CHECK(R.rank() == 1);
  CHECK(R.accepting().size() == R.reachable().size());

  CHECK(lang_equal(left_quotient(L, Tree::unit(a.alphabet()), 0, 0), L));
  CHECK_THROWS_AS(left_quotient(L, u, 1, 0), ArityError);
  CHECK_THROWS_AS(right_quotient(L, TreeTuple({u})), ArityError);
}

TEST_CASE("language equality", "[algebra]") {
  auto a = build_exists();
  auto L = RecLang::from_dfta(a);
  CHECK(lang_equal(L, L));
  auto prod = std::make_shared<const Dfta>(product(a, complement(a), BoolOp::union_));
  auto pick = [&](bool first) {
    std::vector<Transf> acc;
    RecLang probe(prod, 0, {});
    for (const auto& e : probe.reachable()) {
      const State s = e.value.value();
      const bool in_a = a.is_final(static_cast<State>(s / 2));
      if (in_a == first) acc.push_back(e.value);
    }
    return RecLang(prod, 0, acc);
  };
  CHECK_FALSE(lang_equal(pick(true), pick(false)));
  CHECK(same_language(complement(complement(a)), a));
  CHECK_THROWS_AS(lang_equal(L, RecLang::from_dfta(build_path())), Error);
  CHECK_THROWS_AS(RecLang(prod, 0, {Transf::constant(4, 0, 1)}), Error);
}

TEST_CASE("quotients agree with direct evaluation", "[algebra][property]") {
  oracle::Rng rng(17);
  auto alph = boolean_alphabet();
  const auto entries = oracle::corpus(alph);
  for (int i = 0; i < 200; ++i) {
    const auto& entry = entries[rng() % entries.size()];
    auto L0 = RecLang::from_dfta(entry.automaton);
    const std::size_t n = rng() % 3;
    std::vector<Tree> vs;
    for (std::size_t j = 0; j < n; ++j) vs.push_back(oracle::random_tree(rng, alph, 0, 3));
    auto Ln = right_quotient(L0, TreeTuple(vs));
    const std::size_t k1 = n == 0 ? 0 : rng() % (n + 1);
    const std::size_t k2 = n - k1 == 0 ? 0 : rng() % (n - k1 + 1);
    auto u = oracle::random_tree(rng, alph, k1 + 1 + k2, 3);
    auto Q = left_quotient(Ln, u, k1, k2);
    for (int j = 0; j < 5; ++j) {
      auto t = oracle::random_tree(rng, alph, Q.rank(), 3);
      std::vector<Tree> args(k1, Tree::unit(alph));
      args.push_back(t);
      args.insert(args.end(), k2, Tree::unit(alph));
      auto ut = oracle::substitute(u, args);
      CHECK(Q.contains(t) == entry.predicate(oracle::substitute(ut, vs)));
    }
  }
}
