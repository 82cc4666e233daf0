#pragma once

// Example automata over the Boolean ranked alphabet (letters 0_n and 1_n)
// and closed-form truncations of the matching preclones.

#include <algorithm>
#include <string>
#include <vector>

#include "treeclone/dfta.hpp"
#include "treeclone/preclone.hpp"

namespace treeclone {

// Letters 0_n, 1_n for each n in arities, in increasing n.
inline AlphabetPtr boolean_alphabet(std::vector<std::size_t> arities = {0, 2}) {
  std::sort(arities.begin(), arities.end());
  arities.erase(std::unique(arities.begin(), arities.end()), arities.end());
  if (arities.empty() || arities.front() != 0) throw Error("Boolean alphabet needs arity 0");
  if (arities.back() < 2) throw Error("Boolean alphabet needs some arity of at least 2");
  std::vector<RankedSymbol> syms;
  for (std::size_t n : arities) {
    syms.push_back({"0_" + std::to_string(n), n});
    syms.push_back({"1_" + std::to_string(n), n});
  }
  return make_alphabet(std::move(syms));
}

namespace detail {

inline bool letter_bit(const RankedSymbol& s) { return !s.name.empty() && s.name[0] == '1'; }

template <class Fn>
Dfta boolean_dfta(const AlphabetPtr& alph, std::vector<std::string> states, std::vector<bool> finals, Fn&& fn) {
  std::vector<Transf> trans;
  const std::size_t q = states.size();
  for (const auto& s : alph->symbols()) {
    const bool bit = letter_bit(s);
    trans.push_back(Transf::tabulate(q, s.rank, [&](std::span<const State> args) { return fn(bit, args); }));
  }
  return Dfta(alph, std::move(states), std::move(trans), std::move(finals));
}

}  // namespace detail

// Some node is labelled 1.
inline Dfta build_exists(const AlphabetPtr& alph = boolean_alphabet()) {
  return detail::boolean_dfta(alph, {"F", "T"}, {false, true}, [](bool bit, std::span<const State> a) {
    State r = bit ? 1 : 0;
    for (State x : a) r |= x;
    return r;
  });
}

// The number of 1-labelled nodes is r modulo p.
inline Dfta build_modcount(std::size_t p, std::size_t r, const AlphabetPtr& alph = boolean_alphabet()) {
  if (p == 0 || r >= p) throw Error("modular count needs 0 <= r < p");
  std::vector<std::string> names;
  std::vector<bool> finals;
  for (std::size_t i = 0; i < p; ++i) {
    names.push_back("c" + std::to_string(i));
    finals.push_back(i == r);
  }
  return detail::boolean_dfta(alph, names, finals, [p](bool bit, std::span<const State> a) {
    std::size_t c = bit ? 1 : 0;
    for (State x : a) c += x;
    return static_cast<State>(c % p);
  });
}

// Sum reduced modulo p above threshold q: values 0 .. p+q-1.
inline std::size_t threshold_sum(std::size_t s, std::size_t p, std::size_t q) {
  return s < q ? s : q + (s - q) % p;
}

// The number of 1-labelled nodes is r modulo p threshold q.
inline Dfta build_modthreshold(std::size_t p, std::size_t q, std::size_t r,
                               const AlphabetPtr& alph = boolean_alphabet()) {
  if (p == 0 || r >= p + q) throw Error("threshold count needs p >= 1 and 0 <= r < p + q");
  std::vector<std::string> names;
  std::vector<bool> finals;
  for (std::size_t i = 0; i < p + q; ++i) {
    names.push_back("c" + std::to_string(i));
    finals.push_back(i == r);
  }
  return detail::boolean_dfta(alph, names, finals, [p, q](bool bit, std::span<const State> a) {
    std::size_t c = threshold_sum(bit ? 1 : 0, p, q);
    for (State x : a) c = threshold_sum(c + x, p, q);
    return static_cast<State>(c);
  });
}

// Some maximal root-to-leaf path is labelled 1 throughout.
inline Dfta build_path(const AlphabetPtr& alph = boolean_alphabet()) {
  return detail::boolean_dfta(alph, {"F", "T"}, {false, true}, [](bool bit, std::span<const State> a) {
    if (!bit) return State{0};
    if (a.empty()) return State{1};
    State r = 0;
    for (State x : a) r |= x;
    return r;
  });
}

// The root has children and all of them are labelled 1. A state is the pair
// (all children labelled 1, root labelled 1), encoded as 2*first + second.
inline Dfta build_next(const AlphabetPtr& alph = boolean_alphabet()) {
  return detail::boolean_dfta(alph, {"FF", "FT", "TF", "TT"}, {false, false, true, true},
                              [](bool bit, std::span<const State> a) {
                                bool all = !a.empty();
                                for (State x : a) all = all && (x & 1u);
                                return static_cast<State>((all ? 2 : 0) + (bit ? 1 : 0));
                              });
}

// The root is labelled 1.
inline Dfta build_root_label(const AlphabetPtr& alph = boolean_alphabet()) {
  return detail::boolean_dfta(alph, {"R0", "R1"}, {false, true},
                              [](bool bit, std::span<const State>) { return State{bit ? 1u : 0u}; });
}

// Every node is labelled 1.
inline Dfta build_all_ones(const AlphabetPtr& alph = boolean_alphabet()) {
  return detail::boolean_dfta(alph, {"bad", "ok"}, {false, true}, [](bool bit, std::span<const State> a) {
    bool ok = bit;
    for (State x : a) ok = ok && x == 1;
    return State{ok ? 1u : 0u};
  });
}

// ---------------------------------------------------------------------------
// Closed-form truncations

enum class Reference { exists, mod, threshold, path };

struct ReferenceSpec {
  Reference kind = Reference::exists;
  std::size_t p = 2;
  std::size_t q = 0;
};

namespace detail {

inline std::size_t reference_carrier(const ReferenceSpec& spec) {
  switch (spec.kind) {
    case Reference::exists:
    case Reference::path: return 2;
    case Reference::mod: return spec.p;
    case Reference::threshold: return spec.p + spec.q;
  }
  return 0;
}

inline Transf or_subset(std::size_t n, std::size_t mask) {
  return Transf::tabulate(2, n, [&](std::span<const State> a) {
    State r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) r |= a[i];
    }
    return r;
  });
}

// Rank-n elements of the closed form.
inline std::vector<Transf> reference_level(const ReferenceSpec& spec, std::size_t n) {
  std::vector<Transf> out;
  switch (spec.kind) {
    case Reference::exists:
      out.push_back(or_subset(n, (std::size_t{1} << n) - 1));
      out.push_back(Transf::constant(2, n, 1));
      break;
    case Reference::mod:
    case Reference::threshold: {
      const std::size_t p = spec.p, q = spec.kind == Reference::mod ? 0 : spec.q;
      for (std::size_t r = 0; r < p + q; ++r) {
        out.push_back(Transf::tabulate(p + q, n, [&](std::span<const State> a) {
          std::size_t c = r;
          for (State x : a) c = threshold_sum(c + x, p, q);
          return c;
        }));
      }
      break;
    }
    case Reference::path:
      out.push_back(Transf::constant(2, n, 1));
      out.push_back(Transf::constant(2, n, 0));
      for (std::size_t mask = 1; n > 0 && mask < (std::size_t{1} << n); ++mask) out.push_back(or_subset(n, mask));
      break;
  }
  return out;
}

inline Transf reference_letter(const ReferenceSpec& spec, bool bit, std::size_t n) {
  switch (spec.kind) {
    case Reference::exists:
      return bit ? Transf::constant(2, n, 1) : or_subset(n, (std::size_t{1} << n) - 1);
    case Reference::mod:
    case Reference::threshold: {
      const std::size_t p = spec.p, q = spec.kind == Reference::mod ? 0 : spec.q;
      const std::size_t r = bit ? threshold_sum(1, p, q) : 0;
      return Transf::tabulate(p + q, n, [&](std::span<const State> a) {
        std::size_t c = r;
        for (State x : a) c = threshold_sum(c + x, p, q);
        return c;
      });
    }
    case Reference::path:
      if (!bit) return Transf::constant(2, n, 0);
      if (n == 0) return Transf::constant(2, 0, 1);
      return or_subset(n, (std::size_t{1} << n) - 1);
  }
  return {};
}

}  // namespace detail

inline void validate(const ReferenceSpec& spec) {
  if (spec.kind == Reference::mod && spec.p < 2) throw Error("T_p needs p >= 2");
  if (spec.kind == Reference::threshold && spec.p < 1) throw Error("T_pq needs p >= 1");
}

// The truncation built from the closed-form level descriptions. Witness
// terms and properness are attached by looking each element up in the
// sub-preclone generated by the letter images; any disagreement between the
// two is recorded in the returned warnings.
inline PgPairTrunc build_reference_preclone(const ReferenceSpec& spec, std::size_t K,
                                            const AlphabetPtr& alph = boolean_alphabet(),
                                            std::vector<std::string>* warnings = nullptr) {
  validate(spec);
  const std::size_t c = detail::reference_carrier(spec);
  std::vector<Transf> letters;
  for (const auto& s : alph->symbols()) letters.push_back(detail::reference_letter(spec, detail::letter_bit(s), s.rank));
  const auto gen = saturate_generators(alph, letters, c, K);

  std::vector<std::vector<Element>> levels;
  for (std::size_t n = 0; n <= K; ++n) {
    std::vector<Element> lvl;
    auto closed = detail::reference_level(spec, n);
    if (n == 1) {
      auto id = Transf::identity(c);
      if (std::find(closed.begin(), closed.end(), id) == closed.end()) closed.push_back(id);
    }
    // Generated order first, then anything the generators miss.
    for (const auto& e : gen.preclone.level(n)) {
      if (std::find(closed.begin(), closed.end(), e.value) != closed.end()) lvl.push_back(e);
    }
    for (auto& t : closed) {
      if (!gen.preclone.find(t)) {
        if (warnings) warnings->push_back("rank " + std::to_string(n) + " element " + format_table(t) + " is not generated");
        t.set_proper(false);
        lvl.push_back({t, false, std::nullopt});
      }
    }
    if (warnings && lvl.size() != gen.preclone.level(n).size()) {
      warnings->push_back("rank " + std::to_string(n) + ": generated level has " +
                          std::to_string(gen.preclone.level(n).size()) + " elements, closed form has " +
                          std::to_string(lvl.size()));
    }
    levels.push_back(std::move(lvl));
  }
  auto trunc = PrecloneTrunc::from_levels(c, std::move(levels), gen.preclone.generators());
  return PgPairTrunc{std::move(trunc), alph, gen.letter_map};
}

// The same closed forms with the small generating families of the examples:
// T_exists and T_path by or/2, true/0, false/0 (T_path also false1/1), and
// T_p by zero/0, inc/1, sum/2.
inline PgPairTrunc build_reference_generators(const ReferenceSpec& spec, std::size_t K) {
  validate(spec);
  const std::size_t c = detail::reference_carrier(spec);
  AlphabetPtr alph;
  std::vector<Transf> images;
  switch (spec.kind) {
    case Reference::exists:
      alph = make_alphabet({{"or", 2}, {"true", 0}, {"false", 0}});
      images = {detail::or_subset(2, 3), Transf::constant(2, 0, 1), Transf::constant(2, 0, 0)};
      break;
    case Reference::path:
      alph = make_alphabet({{"or", 2}, {"true", 0}, {"false", 0}, {"false1", 1}});
      images = {detail::or_subset(2, 3), Transf::constant(2, 0, 1), Transf::constant(2, 0, 0),
                Transf::constant(2, 1, 0)};
      break;
    case Reference::mod:
    case Reference::threshold: {
      const std::size_t p = spec.p, q = spec.kind == Reference::mod ? 0 : spec.q;
      alph = make_alphabet({{"zero", 0}, {"inc", 1}, {"sum", 2}});
      images = {Transf::constant(c, 0, 0),
                Transf::tabulate(c, 1, [&](std::span<const State> a) { return threshold_sum(a[0] + 1, p, q); }),
                Transf::tabulate(c, 2, [&](std::span<const State> a) { return threshold_sum(a[0] + a[1], p, q); })};
      break;
    }
  }
  return saturate_generators(alph, images, c, K);
}

inline std::string reference_name(const ReferenceSpec& spec) {
  switch (spec.kind) {
    case Reference::exists: return "T_exists";
    case Reference::mod: return "T_" + std::to_string(spec.p);
    case Reference::threshold: return "T_" + std::to_string(spec.p) + "," + std::to_string(spec.q);
    case Reference::path: return "T_path";
  }
  return "?";
}

}  // namespace treeclone
