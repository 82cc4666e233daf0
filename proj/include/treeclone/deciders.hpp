#pragma once

// Definability tests for rank-0 tree languages, evaluated on the truncated
// syntactic pg-pair: TL(EX), TL(EF) and FO[Succ]. All quantifications over
// S_1 range over its proper elements.

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "treeclone/preclone.hpp"

namespace treeclone {

class ArityOverflow : public Error {
 public:
  using Error::Error;
};

struct WitnessItem {
  std::string role;
  Transf value;
  std::string term;
};

struct Verdict {
  std::string logic;  // EX, EF, FOSucc
  bool yes = true;
  std::string condition;  // id of the failed clause
  std::string equation;
  std::vector<WitnessItem> witness;
  std::optional<Transf> lhs;
  std::optional<Transf> rhs;
  std::size_t rank_cap = 0;
  std::vector<std::string> clauses_checked;
};

struct Failure {
  std::string condition;
  std::string equation;
  std::vector<WitnessItem> witness;
  Transf lhs;
  Transf rhs;
};

struct EfOptions {
  std::size_t max_permutation_arity = 6;
};

struct Preorder {
  std::size_t rank = 0;
  std::vector<Transf> elements;
  std::vector<std::vector<bool>> rel;  // rel[s][t]: s <= t

  bool holds(std::size_t s, std::size_t t) const { return rel[s][t]; }
};

// s <= t iff s = u.t for some u in P_1 (the unit included).
inline Preorder compute_preorder(const PrecloneTrunc& p, std::size_t rank = 0) {
  if (p.num_levels() < 2) throw Error("the preorder needs a rank cap of at least 1");
  if (rank >= p.num_levels()) throw Error("preorder level above the rank cap");
  Preorder o;
  o.rank = rank;
  const auto& lvl = p.level(rank);
  for (const auto& e : lvl) o.elements.push_back(e.value);
  o.rel.assign(lvl.size(), std::vector<bool>(lvl.size(), false));
  for (std::size_t t = 0; t < lvl.size(); ++t) {
    for (const auto& u : p.level(1)) {
      auto s = p.find(compose_transf(u.value, {lvl[t].value}));
      if (s) o.rel[*s][t] = true;
    }
  }
  return o;
}

namespace detail {

inline std::string term_of(const PrecloneTrunc& p, const Transf& t) { return witness_text(p, t); }

// Letter images of one rank, each with the term of its first letter.
struct Letter {
  Transf value;
  std::string term;
};

inline std::vector<Letter> letters_of_rank(const PgPairTrunc& pg, std::size_t n) {
  std::vector<Letter> out;
  for (std::size_t s = 0; s < pg.letter_map.size(); ++s) {
    const auto& t = pg.letter_map[s];
    if (t.rank() != n) continue;
    if (std::any_of(out.begin(), out.end(), [&](const Letter& l) { return l.value == t; })) continue;
    out.push_back({t, print_tree(Tree::letter(pg.alphabet, s))});
  }
  return out;
}

inline std::vector<std::size_t> letter_ranks(const PgPairTrunc& pg) {
  std::vector<std::size_t> r;
  for (const auto& t : pg.letter_map) r.push_back(t.rank());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

inline Transf constant(std::size_t carrier, State v) { return Transf::constant(carrier, 0, v); }

inline WitnessItem item(const PrecloneTrunc& p, std::string role, const Transf& t) {
  return {std::move(role), t, term_of(p, t)};
}

// Value of a rank-n element on constant arguments.
inline State apply(const Transf& f, const std::vector<State>& args) { return f(args); }

inline std::vector<State> rank0_values(const PrecloneTrunc& p) {
  std::vector<State> v;
  for (const auto& e : p.level(0)) v.push_back(e.value.value());
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single clauses. Each returns the first failing instance in enumeration
// order, or nothing.

inline std::optional<Failure> clause_ex(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const auto m = rank1_monoid(p);
  for (std::size_t e : m.proper_idempotents()) {
    for (std::size_t x : m.proper) {
      if (m(e, x) != e) {
        return Failure{"ex", "e.x = e",
                       {detail::item(p, "e", m.elements[e]), detail::item(p, "x", m.elements[x])},
                       m.elements[m(e, x)], m.elements[e]};
      }
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_fosucc_aperiodic(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const auto m = rank1_monoid(p);
  const std::size_t l = m.proper.size();
  for (std::size_t x : m.proper) {
    const std::size_t a = m.power(x, l), b = m.power(x, l + 1);
    if (a != b) {
      return Failure{"fosucc-1a", "x^l = x^(l+1), l = " + std::to_string(l),
                     {detail::item(p, "x", m.elements[x])}, m.elements[a], m.elements[b]};
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_fosucc_idempotents(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const auto m = rank1_monoid(p);
  const auto idem = m.proper_idempotents();
  auto prod = [&](std::initializer_list<std::size_t> xs) {
    std::size_t r = m.identity;
    for (std::size_t x : xs) r = m(r, x);
    return r;
  };
  for (std::size_t e : idem) {
    for (std::size_t f : idem) {
      for (std::size_t x : m.proper) {
        for (std::size_t y : m.proper) {
          for (std::size_t z : m.proper) {
            const std::size_t lhs = prod({e, x, f, y, e, z, f});
            const std::size_t rhs = prod({e, z, f, y, e, x, f});
            if (lhs != rhs) {
              return Failure{"fosucc-1b", "exfyezf = ezfyexf",
                             {detail::item(p, "e", m.elements[e]), detail::item(p, "f", m.elements[f]),
                              detail::item(p, "x", m.elements[x]), detail::item(p, "y", m.elements[y]),
                              detail::item(p, "z", m.elements[z])},
                             m.elements[lhs], m.elements[rhs]};
            }
          }
        }
      }
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_fosucc_swap(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const auto m = rank1_monoid(p);
  const std::size_t q = p.carrier_size();
  const auto vals = detail::rank0_values(p);
  for (const auto& x : p.level(2)) {
    for (std::size_t e : m.proper_idempotents()) {
      const Transf& et = m.elements[e];
      for (std::size_t s = 0; s < vals.size(); ++s) {
        for (std::size_t t = 0; t < vals.size(); ++t) {
          const State es = et.table()[vals[s]], ett = et.table()[vals[t]];
          const State lhs = x.value.table()[es * q + ett];
          const State rhs = x.value.table()[ett * q + es];
          if (lhs != rhs) {
            return Failure{"fosucc-2", "x.(e.s + e.t) = x.(e.t + e.s)",
                           {detail::item(p, "x", x.value), detail::item(p, "e", et),
                            detail::item(p, "s", p.element(0, s).value),
                            detail::item(p, "t", p.element(0, t).value)},
                           detail::constant(q, lhs), detail::constant(q, rhs)};
          }
        }
      }
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_ef_ltrivial(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const auto m = rank1_monoid(p);
  for (std::size_t u : m.proper) {
    for (std::size_t v : m.proper) {
      const std::size_t w = omega_power(m, m(u, v));
      const std::size_t lhs = m(v, w);
      if (lhs != w) {
        return Failure{"ef-i", "v(uv)^w = (uv)^w",
                       {detail::item(p, "u", m.elements[u]), detail::item(p, "v", m.elements[v])},
                       m.elements[lhs], m.elements[w]};
      }
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_ef_permutation(const PgPairTrunc& pg, const EfOptions& opts = {}) {
  const auto& p = pg.preclone;
  const std::size_t q = p.carrier_size();
  const auto vals = detail::rank0_values(p);
  for (std::size_t n : detail::letter_ranks(pg)) {
    if (n < 2) continue;
    if (n > opts.max_permutation_arity) {
      throw ArityOverflow("permutation clause refused at arity " + std::to_string(n) + " (limit " +
                          std::to_string(opts.max_permutation_arity) + ")");
    }
    for (const auto& a : detail::letters_of_rank(pg, n)) {
      std::optional<Failure> fail;
      detail::for_each_tuple(std::vector<std::size_t>(n, vals.size()), [&](const std::vector<std::size_t>& s) {
        if (fail) return;
        std::vector<State> args(n);
        for (std::size_t i = 0; i < n; ++i) args[i] = vals[s[i]];
        const State lhs = a.value(args);
        std::vector<std::size_t> pi(n);
        std::iota(pi.begin(), pi.end(), 0);
        while (std::next_permutation(pi.begin(), pi.end())) {
          std::vector<State> perm(n);
          for (std::size_t i = 0; i < n; ++i) perm[i] = args[pi[i]];
          const State rhs = a.value(perm);
          if (lhs != rhs) {
            Failure f{"ef-ii", "a.(s1 + ... + sn) = a.(s_pi(1) + ... + s_pi(n))", {}, detail::constant(q, lhs),
                      detail::constant(q, rhs)};
            f.witness.push_back({"a", a.value, a.term});
            for (std::size_t i = 0; i < n; ++i) {
              f.witness.push_back(detail::item(p, "s" + std::to_string(i + 1), p.element(0, s[i]).value));
            }
            std::string ps;
            for (std::size_t i = 0; i < n; ++i) ps += (i ? "," : "") + std::to_string(pi[i] + 1);
            f.witness.push_back({"pi", Transf(), "(" + ps + ")"});
            fail = std::move(f);
            return;
          }
        }
      });
      if (fail) return fail;
    }
  }
  return std::nullopt;
}

inline std::optional<Failure> clause_ef_absorb(const PgPairTrunc& pg) {
  const auto& p = pg.preclone;
  const std::size_t q = p.carrier_size();
  const auto vals = detail::rank0_values(p);
  const auto order = compute_preorder(p, 0);
  for (std::size_t n : detail::letter_ranks(pg)) {
    if (n < 2) continue;
    for (const auto& a : detail::letters_of_rank(pg, n)) {
      std::optional<Failure> fail;
      detail::for_each_tuple(std::vector<std::size_t>(n, vals.size()), [&](const std::vector<std::size_t>& s) {
        if (fail || !order.holds(s[1], s[0])) return;
        std::vector<State> args(n);
        for (std::size_t i = 0; i < n; ++i) args[i] = vals[s[i]];
        const State lhs = a.value(args);
        args[0] = args[1];
        const State rhs = a.value(args);
        if (lhs != rhs) {
          Failure f{"ef-iii", "a.(s1 + s2 + ...) = a.(s2 + s2 + ...) for s2 <= s1", {},
                    detail::constant(q, lhs), detail::constant(q, rhs)};
          f.witness.push_back({"a", a.value, a.term});
          for (std::size_t i = 0; i < n; ++i) {
            f.witness.push_back(detail::item(p, "s" + std::to_string(i + 1), p.element(0, s[i]).value));
          }
          fail = std::move(f);
        }
      });
      if (fail) return fail;
    }
  }
  return std::nullopt;
}

// Arities p >= 1 only: at p = 0 the premise holds for any two constants.
inline std::optional<Failure> clause_ef_substitution(const PgPairTrunc& pg) {
  const auto& pr = pg.preclone;
  const std::size_t q = pr.carrier_size();
  const auto vals = detail::rank0_values(pr);
  const auto ranks = detail::letter_ranks(pg);
  for (std::size_t ar : ranks) {
    if (ar == 0) continue;
    const auto ap = detail::letters_of_rank(pg, ar);
    for (std::size_t bi = 0; bi < ap.size(); ++bi) {
      for (std::size_t ci = 0; ci < ap.size(); ++ci) {
        if (bi == ci) continue;
        const auto& b = ap[bi];
        const auto& c = ap[ci];
        std::optional<Failure> fail;
        detail::for_each_tuple(std::vector<std::size_t>(ar, vals.size()), [&](const std::vector<std::size_t>& yi) {
          if (fail) return;
          std::vector<State> y(ar);
          for (std::size_t i = 0; i < ar; ++i) y[i] = vals[yi[i]];
          const State by = b.value(y), cy = c.value(y);
          for (const auto& d : ap) {
            const State dy = d.value(y);
            if (d.value(std::vector<State>(ar, by)) != dy || d.value(std::vector<State>(ar, cy)) != dy) return;
          }
          for (std::size_t n : ranks) {
            if (n == 0) continue;
            for (const auto& a : detail::letters_of_rank(pg, n)) {
              detail::for_each_tuple(std::vector<std::size_t>(n - 1, vals.size()),
                                     [&](const std::vector<std::size_t>& zi) {
                if (fail) return;
                std::vector<State> args(n);
                for (std::size_t i = 0; i + 1 < n; ++i) args[i] = vals[zi[i]];
                args[n - 1] = by;
                const State lhs = a.value(args);
                args[n - 1] = cy;
                const State rhs = a.value(args);
                if (lhs != rhs) {
                  Failure f{"ef-iv", "a.(z + b.y) = a.(z + c.y)", {}, detail::constant(q, lhs),
                            detail::constant(q, rhs)};
                  f.witness.push_back({"a", a.value, a.term});
                  f.witness.push_back({"b", b.value, b.term});
                  f.witness.push_back({"c", c.value, c.term});
                  for (std::size_t i = 0; i < ar; ++i) {
                    f.witness.push_back(detail::item(pr, "y" + std::to_string(i + 1), pr.element(0, yi[i]).value));
                  }
                  for (std::size_t i = 0; i + 1 < n; ++i) {
                    f.witness.push_back(detail::item(pr, "z" + std::to_string(i + 1), pr.element(0, zi[i]).value));
                  }
                  fail = std::move(f);
                }
              });
              if (fail) return;
            }
          }
        });
        if (fail) return fail;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Deciders

namespace detail {

inline Verdict run_clauses(
    std::string logic, const PgPairTrunc& pg,
    const std::vector<std::pair<std::string, std::function<std::optional<Failure>()>>>& clauses) {
  Verdict v;
  v.logic = std::move(logic);
  v.rank_cap = pg.rank_cap();
  for (const auto& [id, fn] : clauses) {
    v.clauses_checked.push_back(id);
    if (auto f = fn()) {
      v.yes = false;
      v.condition = f->condition;
      v.equation = f->equation;
      v.witness = std::move(f->witness);
      v.lhs = std::move(f->lhs);
      v.rhs = std::move(f->rhs);
      return v;
    }
  }
  return v;
}

}  // namespace detail

inline Verdict check_ex(const PgPairTrunc& pg) {
  if (pg.rank_cap() < 1) throw Error("EX check needs a rank cap of at least 1");
  return detail::run_clauses("EX", pg, {{"ex", [&] { return clause_ex(pg); }}});
}

inline Verdict check_fosucc(const PgPairTrunc& pg) {
  if (pg.rank_cap() < 2) throw Error("FO[Succ] check needs a rank cap of at least 2");
  return detail::run_clauses("FOSucc", pg,
                             {{"fosucc-1a", [&] { return clause_fosucc_aperiodic(pg); }},
                              {"fosucc-1b", [&] { return clause_fosucc_idempotents(pg); }},
                              {"fosucc-2", [&] { return clause_fosucc_swap(pg); }}});
}

inline Verdict check_ef(const PgPairTrunc& pg, const EfOptions& opts = {}) {
  if (pg.rank_cap() < std::max<std::size_t>(1, pg.alphabet->max_rank())) {
    throw Error("EF check needs a rank cap of at least the largest letter rank");
  }
  return detail::run_clauses("EF", pg,
                             {{"ef-i", [&] { return clause_ef_ltrivial(pg); }},
                              {"ef-ii", [&] { return clause_ef_permutation(pg, opts); }},
                              {"ef-iii", [&] { return clause_ef_absorb(pg); }},
                              {"ef-iv", [&] { return clause_ef_substitution(pg); }}});
}

inline std::string render_verdict(const Verdict& v, bool verbose = false) {
  std::string out = v.logic + ": " + (v.yes ? "yes" : "no") + "\n";
  if (v.yes) return out;
  out += "condition=" + v.condition + " (" + v.equation + ") witness:";
  for (const auto& w : v.witness) {
    out += " " + w.role + "=" + w.term;
    if (verbose && w.value.carrier_size() > 0) out += format_table(w.value);
  }
  out += " lhs=" + format_table(*v.lhs) + " rhs=" + format_table(*v.rhs) + "\n";
  return out;
}

}  // namespace treeclone
