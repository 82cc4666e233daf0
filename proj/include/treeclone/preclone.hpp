#pragma once

// Finitary preclones represented inside T(Q): the rank 0..K slices of the
// sub-preclone generated by a family of letter images, with shortest witness
// terms, properness, the rank-1 monoid, the relations ~k, and morphism
// checks by image tracking.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeclone/core.hpp"
#include "treeclone/dfta.hpp"
#include "treeclone/transf.hpp"

namespace treeclone {

using TermKey = std::vector<std::int32_t>;

// A member of a truncation level. The value carries the proper flag: true
// iff some generator-rooted term evaluates to it. The witness is the
// shortest such term (size, then preorder in alphabet order), or v1 for the
// unit when the unit is not proper.
struct Element {
  Transf value;
  bool unit = false;
  std::optional<Tree> witness;

  bool proper() const noexcept { return value.proper(); }
};

namespace detail {

inline bool term_key_less(const TermKey& a, const TermKey& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

// Rebuilds a term from its preorder key; -1 stands for the next variable.
inline TreeNode node_from_key(const RankedAlphabet& alph, const TermKey& key, std::size_t& pos,
                              std::size_t& next_var) {
  const std::int32_t tok = key.at(pos++);
  if (tok < 0) return TreeNode::var(next_var++);
  TreeNode n = TreeNode::sym(static_cast<std::size_t>(tok));
  for (std::size_t i = 0; i < alph[static_cast<std::size_t>(tok)].rank; ++i) {
    n.children.push_back(node_from_key(alph, key, pos, next_var));
  }
  return n;
}

inline Tree tree_from_key(const AlphabetPtr& alph, const TermKey& key) {
  std::size_t pos = 0, next = 1;
  TreeNode root = node_from_key(*alph, key, pos, next);
  return Tree(alph, std::move(root));
}

inline void key_of(const TreeNode& n, TermKey& out) {
  out.push_back(n.is_variable() ? -1 : n.label);
  for (const auto& c : n.children) key_of(c, out);
}

// Calls fn(parts) for every composition of total into n parts, in
// lexicographic order of the part vector.
template <class Fn>
void for_each_composition(std::size_t total, std::size_t n, Fn&& fn) {
  std::vector<std::size_t> parts(n, 0);
  if (n == 0) {
    if (total == 0) fn(parts);
    return;
  }
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
    if (i + 1 == n) {
      parts[i] = left;
      fn(parts);
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      parts[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, total);
}

// Calls fn(choice) for every tuple with choice[i] < sizes[i], in
// lexicographic order. Nothing is called if some size is zero.
template <class Fn>
void for_each_tuple(const std::vector<std::size_t>& sizes, Fn&& fn) {
  for (std::size_t s : sizes) {
    if (s == 0) return;
  }
  std::vector<std::size_t> choice(sizes.size(), 0);
  while (true) {
    fn(choice);
    std::size_t i = sizes.size();
    while (i > 0) {
      if (++choice[i - 1] < sizes[i - 1]) break;
      choice[--i] = 0;
    }
    if (i == 0) return;
  }
}

}  // namespace detail

class PrecloneTrunc {
 public:
  PrecloneTrunc() = default;

  // Builds a truncation from explicit levels; used for closed-form
  // constructions and hand-made controls.
  static PrecloneTrunc from_levels(std::size_t carrier_size, std::vector<std::vector<Element>> levels,
                                   std::vector<Transf> generators = {}) {
    PrecloneTrunc p;
    p.carrier_ = carrier_size;
    p.levels_ = std::move(levels);
    p.generators_ = std::move(generators);
    for (std::size_t k = 0; k < p.levels_.size(); ++k) {
      for (const auto& e : p.levels_[k]) {
        if (e.value.rank() != k || e.value.carrier_size() != carrier_size) {
          throw Error("element of the wrong shape in truncation level " + std::to_string(k));
        }
      }
    }
    p.reindex();
    return p;
  }

  std::size_t carrier_size() const noexcept { return carrier_; }
  std::size_t rank_cap() const noexcept { return levels_.empty() ? 0 : levels_.size() - 1; }
  std::size_t num_levels() const noexcept { return levels_.size(); }
  const std::vector<Element>& level(std::size_t k) const { return levels_.at(k); }
  const Element& element(std::size_t k, std::size_t i) const { return levels_.at(k).at(i); }
  const std::vector<Transf>& generators() const noexcept { return generators_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::optional<std::size_t> find(const Transf& t) const {
    if (t.rank() >= index_.size()) return std::nullopt;
    auto it = index_[t.rank()].find(t);
    if (it == index_[t.rank()].end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> unit_index() const {
    if (levels_.size() < 2) return std::nullopt;
    for (std::size_t i = 0; i < levels_[1].size(); ++i) {
      if (levels_[1][i].unit) return i;
    }
    return std::nullopt;
  }

  std::vector<std::size_t> level_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& l : levels_) s.push_back(l.size());
    return s;
  }

 private:
  friend class Saturator;

  void reindex() {
    index_.assign(levels_.size(), {});
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      for (std::size_t i = 0; i < levels_[k].size(); ++i) {
        if (!index_[k].emplace(levels_[k][i].value, i).second) {
          throw Error("duplicate element in truncation level " + std::to_string(k));
        }
      }
    }
  }

  std::size_t carrier_ = 0;
  std::vector<std::vector<Element>> levels_;
  std::vector<std::unordered_map<Transf, std::size_t, TransfHash>> index_;
  std::vector<Transf> generators_;
  std::vector<std::string> warnings_;
};

// A truncation together with the letter map Sigma -> T(Q).
struct PgPairTrunc {
  PrecloneTrunc preclone;
  AlphabetPtr alphabet;
  std::vector<Transf> letter_map;  // indexed by symbol

  std::size_t carrier_size() const noexcept { return preclone.carrier_size(); }
  std::size_t rank_cap() const noexcept { return preclone.rank_cap(); }

  const Transf& letter(std::string_view name) const {
    auto s = alphabet->find(name);
    if (!s) throw Error("unknown letter '" + std::string(name) + "'");
    return letter_map[*s];
  }

  // Distinct letter images grouped by rank, in order of first occurrence.
  std::map<std::size_t, std::vector<Transf>> generator_set() const {
    std::map<std::size_t, std::vector<Transf>> out;
    for (const auto& t : letter_map) {
      auto& v = out[t.rank()];
      if (std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
    }
    return out;
  }
};

struct SaturateOptions {
  std::size_t warn_level_size = 4096;
};

inline std::size_t default_rank_cap(const RankedAlphabet& alph) {
  return std::max<std::size_t>(2, alph.max_rank());
}

class Saturator {
 public:
  static PgPairTrunc run(const AlphabetPtr& alph, const std::vector<Transf>& images,
                         std::size_t carrier, std::size_t K, const SaturateOptions& opts) {
    if (images.size() != alph->size()) throw Error("need one image per letter");
    for (std::size_t s = 0; s < images.size(); ++s) {
      if (images[s].rank() != (*alph)[s].rank || images[s].carrier_size() != carrier) {
        throw Error("image of letter '" + (*alph)[s].name + "' has the wrong shape");
      }
    }

    struct Work {
      Transf value;
      bool unit = false;
      TermKey proper_key;  // empty unless proper

      const TermKey& arg_key() const {
        static const TermKey var{-1};
        return unit ? var : proper_key;
      }
      const TermKey& display_key() const {
        static const TermKey var{-1};
        return proper_key.empty() ? var : proper_key;
      }
    };

    std::vector<std::vector<Work>> levels;
    std::vector<std::unordered_map<Transf, std::size_t, TransfHash>> index;
    std::vector<std::string> warnings;

    for (std::size_t k = 0; k <= K; ++k) {
      levels.emplace_back();
      index.emplace_back();
      auto& cur = levels[k];
      auto& idx = index[k];
      if (k == 1) {
        cur.push_back({Transf::identity(carrier), true, {}});
        idx.emplace(cur.back().value, 0);
      }
      bool changed = true;
      while (changed) {
        changed = false;
        for (std::size_t s = 0; s < alph->size(); ++s) {
          const std::size_t n = (*alph)[s].rank;
          if (n == 0 && k != 0) continue;
          detail::for_each_composition(k, n, [&](const std::vector<std::size_t>& parts) {
            std::vector<std::size_t> sizes(n);
            for (std::size_t i = 0; i < n; ++i) sizes[i] = levels[parts[i]].size();
            detail::for_each_tuple(sizes, [&](const std::vector<std::size_t>& pick) {
              std::vector<Transf> args;
              args.reserve(n);
              TermKey key{static_cast<std::int32_t>(s)};
              for (std::size_t i = 0; i < n; ++i) {
                const Work& w = levels[parts[i]][pick[i]];
                args.push_back(w.value);
                const auto& ak = w.arg_key();
                key.insert(key.end(), ak.begin(), ak.end());
              }
              Transf v = compose_transf(images[s], args);
              v.set_proper(true);
              auto it = idx.find(v);
              if (it == idx.end()) {
                idx.emplace(v, cur.size());
                cur.push_back({std::move(v), false, std::move(key)});
                changed = true;
              } else {
                Work& w = cur[it->second];
                if (w.proper_key.empty() || detail::term_key_less(key, w.proper_key)) {
                  w.proper_key = std::move(key);
                  w.value.set_proper(true);
                  changed = true;
                }
              }
            });
          });
        }
      }
      std::sort(cur.begin(), cur.end(), [](const Work& a, const Work& b) {
        return detail::term_key_less(a.display_key(), b.display_key());
      });
      idx.clear();
      for (std::size_t i = 0; i < cur.size(); ++i) idx.emplace(cur[i].value, i);
      if (cur.size() > opts.warn_level_size) {
        warnings.push_back("level " + std::to_string(k) + " has " + std::to_string(cur.size()) +
                           " elements (warning bound " + std::to_string(opts.warn_level_size) + ")");
      }
    }

    PrecloneTrunc p;
    p.carrier_ = carrier;
    p.warnings_ = std::move(warnings);
    for (auto& lvl : levels) {
      std::vector<Element> out;
      out.reserve(lvl.size());
      for (auto& w : lvl) {
        Tree wt = detail::tree_from_key(alph, w.display_key());
        out.push_back({std::move(w.value), w.unit, std::move(wt)});
      }
      p.levels_.push_back(std::move(out));
    }
    p.reindex();
    std::vector<Transf> letters = images;
    for (auto& t : letters) t.set_proper(true);
    for (const auto& t : letters) {
      if (std::find(p.generators_.begin(), p.generators_.end(), t) == p.generators_.end()) {
        p.generators_.push_back(t);
      }
    }
    return PgPairTrunc{std::move(p), alph, std::move(letters)};
  }
};

inline PgPairTrunc saturate_generators(const AlphabetPtr& alph, const std::vector<Transf>& images,
                                       std::size_t carrier, std::size_t K,
                                       const SaturateOptions& opts = {}) {
  return Saturator::run(alph, images, carrier, K, opts);
}

inline PgPairTrunc saturate(const Dfta& a, std::size_t K, const SaturateOptions& opts = {}) {
  return Saturator::run(a.alphabet(), a.transitions(), a.num_states(), K, opts);
}

inline PgPairTrunc syntactic_pgpair(const Dfta& a, std::size_t K, const SaturateOptions& opts = {}) {
  return saturate(minimize(a), K, opts);
}

inline std::string format_truncation(const PrecloneTrunc& p) {
  std::string out;
  for (std::size_t k = 0; k < p.num_levels(); ++k) {
    for (const auto& e : p.level(k)) {
      out += "rank " + std::to_string(k) + ": " + format_table(e.value) +
             " proper=" + (e.proper() ? "1" : "0") +
             " witness=" + (e.witness ? print_tree(*e.witness) : std::string("?")) + "\n";
    }
  }
  return out;
}

// Shortest witness term of an element as a string ("?" when unknown).
inline std::string witness_text(const PrecloneTrunc& p, const Transf& t) {
  auto i = p.find(t);
  if (!i) return "?";
  const auto& e = p.element(t.rank(), *i);
  return e.witness ? print_tree(*e.witness) : "?";
}

// ---------------------------------------------------------------------------
// Rank-1 monoid and omega powers

struct Rank1Monoid {
  std::vector<Transf> elements;              // level 1 in truncation order
  std::vector<std::vector<std::size_t>> mul;  // mul[x][y] = index of x.y
  std::size_t identity = 0;
  std::vector<std::size_t> proper;  // the proper subsemigroup

  std::size_t size() const noexcept { return elements.size(); }
  std::size_t operator()(std::size_t x, std::size_t y) const { return mul[x][y]; }
  bool is_idempotent(std::size_t x) const { return mul[x][x] == x; }

  std::vector<std::size_t> proper_idempotents() const {
    std::vector<std::size_t> out;
    for (std::size_t x : proper) {
      if (is_idempotent(x)) out.push_back(x);
    }
    return out;
  }

  std::size_t power(std::size_t x, std::size_t n) const {
    std::size_t r = identity;
    for (std::size_t i = 0; i < n; ++i) r = mul[r][x];
    return r;
  }
};

inline Rank1Monoid rank1_monoid(const PrecloneTrunc& p) {
  if (p.num_levels() < 2) throw Error("the rank-1 monoid needs a rank cap of at least 1");
  Rank1Monoid m;
  const auto& lvl = p.level(1);
  for (const auto& e : lvl) m.elements.push_back(e.value);
  m.mul.assign(lvl.size(), std::vector<std::size_t>(lvl.size()));
  for (std::size_t x = 0; x < lvl.size(); ++x) {
    for (std::size_t y = 0; y < lvl.size(); ++y) {
      auto z = p.find(compose_transf(lvl[x].value, {lvl[y].value}));
      if (!z) throw Error("rank-1 level is not closed under composition");
      m.mul[x][y] = *z;
    }
    if (lvl[x].proper()) m.proper.push_back(x);
  }
  auto u = p.unit_index();
  if (!u) throw Error("rank-1 level has no unit");
  m.identity = *u;
  return m;
}

// The unique idempotent among x, x^2, x^3, ...
inline std::size_t omega_power(const Rank1Monoid& m, std::size_t x) {
  std::vector<std::size_t> powers{x};  // powers[i] = x^(i+1)
  std::map<std::size_t, std::size_t> seen{{x, 0}};
  while (true) {
    const std::size_t next = m.mul[powers.back()][x];
    auto it = seen.find(next);
    if (it != seen.end()) {
      const std::size_t index = it->second + 1;  // first exponent in the cycle
      const std::size_t period = powers.size() + 1 - index;
      const std::size_t k = ((index + period - 1) / period) * period;
      return powers[k - 1];
    }
    seen.emplace(next, powers.size());
    powers.push_back(next);
  }
}

inline Transf omega_power(const Transf& x) {
  if (x.rank() != 1) throw ArityError("omega power of a non-unary element");
  std::vector<Transf> powers{x};
  while (true) {
    Transf next = compose_transf(powers.back(), {x});
    for (std::size_t i = 0; i < powers.size(); ++i) {
      if (powers[i] == next) {
        const std::size_t index = i + 1, period = powers.size() + 1 - index;
        const std::size_t k = ((index + period - 1) / period) * period;
        return powers[k - 1];
      }
    }
    powers.push_back(std::move(next));
  }
}

// ---------------------------------------------------------------------------
// The relations ~k

struct SimResult {
  std::vector<std::vector<std::size_t>> classes;  // class id per element, per level
  bool determined = true;                         // every class a singleton
};

inline SimResult sim_k(const PrecloneTrunc& p, std::size_t k) {
  if (k >= p.num_levels()) throw Error("~k needs k within the rank cap");
  SimResult r;
  for (std::size_t n = 0; n < p.num_levels(); ++n) {
    const auto& lvl = p.level(n);
    std::map<std::vector<std::vector<State>>, std::size_t> sig_ids;
    std::vector<std::size_t> cls(lvl.size());
    for (std::size_t i = 0; i < lvl.size(); ++i) {
      std::vector<std::vector<State>> sig;
      for (std::size_t l = 0; l <= k; ++l) {
        detail::for_each_composition(l, n, [&](const std::vector<std::size_t>& parts) {
          std::vector<std::size_t> sizes(n);
          for (std::size_t j = 0; j < n; ++j) sizes[j] = p.level(parts[j]).size();
          detail::for_each_tuple(sizes, [&](const std::vector<std::size_t>& pick) {
            std::vector<Transf> args;
            for (std::size_t j = 0; j < n; ++j) args.push_back(p.element(parts[j], pick[j]).value);
            sig.push_back(compose_transf(lvl[i].value, args).table());
          });
        });
      }
      auto [it, inserted] = sig_ids.emplace(std::move(sig), sig_ids.size());
      cls[i] = it->second;
    }
    if (sig_ids.size() != lvl.size()) r.determined = false;
    r.classes.push_back(std::move(cls));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Image tracking
//
// Enumerates the sub-preclone of a source algebra generated by a list of
// source elements, carrying along for each element the image obtained by
// applying the same compositions to the paired target transformations. A
// source element reached twice with different images is a conflict: the
// assignment does not extend to a morphism.

struct TransfAlgebra {
  using element = Transf;
  std::size_t carrier = 0;

  element unit() const { return Transf::identity(carrier); }
  element compose(const element& f, std::span<const element> gs) const {
    Transf r = compose_transf(f, gs);
    r.set_proper(false);
    return r;
  }
  std::size_t rank(const element& e) const { return e.rank(); }
  std::size_t hash(const element& e) const { return TransfHash{}(e); }
};

template <class Alg>
struct TrackConflict {
  std::size_t generator = 0;
  std::vector<std::pair<std::size_t, std::size_t>> args;  // (level, index) of each argument
  typename Alg::element composite;
  Transf earlier_image;
  Transf new_image;
};

template <class Alg>
struct Tracking {
  std::vector<std::vector<typename Alg::element>> sources;  // per level
  std::vector<std::vector<Transf>> images;                  // parallel to sources
  std::optional<TrackConflict<Alg>> conflict;

  bool ok() const { return !conflict.has_value(); }
};

template <class Alg>
Tracking<Alg> track_images(const Alg& alg,
                           const std::vector<std::pair<typename Alg::element, Transf>>& gens,
                           std::size_t target_carrier, std::size_t K) {
  using E = typename Alg::element;
  struct Hash {
    const Alg* a;
    std::size_t operator()(const E& e) const { return a->hash(e); }
  };
  Tracking<Alg> tr;
  std::vector<std::unordered_map<E, std::size_t, Hash>> index;
  for (std::size_t k = 0; k <= K; ++k) {
    tr.sources.emplace_back();
    tr.images.emplace_back();
    index.emplace_back(8, Hash{&alg});
    auto& src = tr.sources[k];
    auto& img = tr.images[k];
    auto& idx = index[k];
    if (k == 1) {
      src.push_back(alg.unit());
      img.push_back(Transf::identity(target_carrier));
      idx.emplace(src.back(), 0);
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t g = 0; g < gens.size(); ++g) {
        const auto& [gsrc, gimg] = gens[g];
        const std::size_t n = alg.rank(gsrc);
        if (n == 0 && k != 0) continue;
        detail::for_each_composition(k, n, [&](const std::vector<std::size_t>& parts) {
          if (tr.conflict) return;
          std::vector<std::size_t> sizes(n);
          for (std::size_t i = 0; i < n; ++i) sizes[i] = tr.sources[parts[i]].size();
          detail::for_each_tuple(sizes, [&](const std::vector<std::size_t>& pick) {
            if (tr.conflict) return;
            std::vector<E> args;
            std::vector<Transf> iargs;
            args.reserve(n);
            iargs.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
              args.push_back(tr.sources[parts[i]][pick[i]]);
              iargs.push_back(tr.images[parts[i]][pick[i]]);
            }
            E c = alg.compose(gsrc, args);
            Transf ci = compose_transf(gimg, iargs);
            ci.set_proper(false);
            auto it = idx.find(c);
            if (it == idx.end()) {
              idx.emplace(c, src.size());
              src.push_back(std::move(c));
              img.push_back(std::move(ci));
              changed = true;
            } else if (!(img[it->second] == ci)) {
              TrackConflict<Alg> cf{g, {}, std::move(c), img[it->second], std::move(ci)};
              for (std::size_t i = 0; i < n; ++i) cf.args.emplace_back(parts[i], pick[i]);
              tr.conflict = std::move(cf);
            }
          });
        });
        if (tr.conflict) return tr;
      }
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Extension of a letter assignment to a morphism

enum class ExtendStatus { extends, fails, uncertified };

inline const char* to_string(ExtendStatus s) {
  switch (s) {
    case ExtendStatus::extends: return "extends";
    case ExtendStatus::fails: return "fails";
    case ExtendStatus::uncertified: return "uncertified";
  }
  return "?";
}

struct ExtendResult {
  ExtendStatus status = ExtendStatus::uncertified;
  std::string reason;
  // Per level: image of each source element, indexed like the source level.
  std::vector<std::vector<Transf>> level_maps;
  std::vector<bool> injective;
  std::vector<bool> onto;
  // Failure witness: phi(g.h) computed along two factorizations.
  std::optional<std::string> letter;
  std::vector<std::string> argument_terms;
  std::optional<Transf> composite;
  std::optional<Transf> earlier_image;
  std::optional<Transf> new_image;

  bool bijective() const {
    return std::all_of(injective.begin(), injective.end(), [](bool b) { return b; }) &&
           std::all_of(onto.begin(), onto.end(), [](bool b) { return b; });
  }
};

// Checks whether sending each letter of src to the given image extends to a
// morphism from the truncation of src onto (a part of) target. k is the
// determination degree of the target (0 for transformation truncations).
inline ExtendResult extend_generator_map(const PgPairTrunc& src, const PrecloneTrunc& target,
                                         const std::map<std::string, Transf>& images,
                                         std::size_t k = 0) {
  const auto& alph = *src.alphabet;
  std::vector<std::pair<Transf, Transf>> gens;
  for (std::size_t s = 0; s < alph.size(); ++s) {
    auto it = images.find(alph[s].name);
    if (it == images.end()) throw Error("no image given for letter '" + alph[s].name + "'");
    if (it->second.rank() != alph[s].rank) {
      throw ArityError("image of letter '" + alph[s].name + "' has rank " +
                       std::to_string(it->second.rank()) + ", letter has rank " +
                       std::to_string(alph[s].rank));
    }
    if (it->second.carrier_size() != target.carrier_size()) {
      throw Error("image of letter '" + alph[s].name + "' lives on a different carrier");
    }
    Transf srcv = src.letter_map[s];
    srcv.set_proper(false);
    gens.emplace_back(std::move(srcv), it->second);
  }
  for (const auto& [name, t] : images) {
    if (!alph.find(name)) throw Error("image given for unknown letter '" + name + "'");
  }

  const std::size_t K = std::min(src.rank_cap(), target.rank_cap());
  TransfAlgebra alg{src.carrier_size()};
  auto tr = track_images(alg, gens, target.carrier_size(), K);

  ExtendResult r;
  if (!tr.ok()) {
    const auto& cf = *tr.conflict;
    r.status = ExtendStatus::fails;
    r.reason = "two factorizations of one element receive different images";
    r.letter = alph[cf.generator].name;
    for (const auto& [lvl, i] : cf.args) r.argument_terms.push_back(witness_text(src.preclone, tr.sources[lvl][i]));
    r.composite = cf.composite;
    r.earlier_image = cf.earlier_image;
    r.new_image = cf.new_image;
    return r;
  }

  for (std::size_t n = 0; n <= K; ++n) {
    const auto& lvl = src.preclone.level(n);
    std::vector<Transf> map(lvl.size());
    std::vector<bool> hit(lvl.size(), false);
    for (std::size_t i = 0; i < tr.sources[n].size(); ++i) {
      auto j = src.preclone.find(tr.sources[n][i]);
      if (!j) throw Error("tracked element missing from the source truncation");
      map[*j] = tr.images[n][i];
      hit[*j] = true;
    }
    if (!std::all_of(hit.begin(), hit.end(), [](bool b) { return b; })) {
      r.status = ExtendStatus::uncertified;
      r.reason = "letters do not generate source level " + std::to_string(n);
      return r;
    }
    std::unordered_map<Transf, std::size_t, TransfHash> seen;
    bool inj = true;
    for (const auto& t : map) inj = seen.emplace(t, 0).second && inj;
    bool onto = true;
    for (const auto& e : target.level(n)) onto = onto && seen.count(e.value) > 0;
    bool inside = true;
    for (const auto& t : map) inside = inside && target.find(t).has_value();
    if (!inside) {
      r.status = ExtendStatus::uncertified;
      r.reason = "images leave the target truncation at level " + std::to_string(n);
      return r;
    }
    r.level_maps.push_back(std::move(map));
    r.injective.push_back(inj);
    r.onto.push_back(onto);
  }
  if (K < k) {
    r.status = ExtendStatus::uncertified;
    r.reason = "rank cap " + std::to_string(K) + " is below the determination degree " + std::to_string(k);
    return r;
  }
  for (std::size_t l = 0; l <= k; ++l) {
    if (!r.onto[l]) {
      r.status = ExtendStatus::uncertified;
      r.reason = "image does not cover target level " + std::to_string(l);
      return r;
    }
  }
  r.status = ExtendStatus::extends;
  return r;
}

// ---------------------------------------------------------------------------
// Isomorphism of truncated pg-pairs

struct IsoResult {
  bool isomorphic = false;
  std::string reason;
  std::vector<std::pair<Transf, Transf>> generator_bijection;
  std::vector<std::vector<std::size_t>> level_bijection;  // p index -> q index
};

namespace detail {

// All in-cap compositions f.(g1 + ... + gn) are preserved by phi.
inline bool preserves_compositions(const PrecloneTrunc& p, const PrecloneTrunc& q,
                                   const std::vector<std::vector<std::size_t>>& phi, std::size_t K,
                                   std::string& reason) {
  for (std::size_t n = 0; n <= K; ++n) {
    for (std::size_t fi = 0; fi < p.level(n).size(); ++fi) {
      const Transf& f = p.element(n, fi).value;
      const Transf& fq = q.element(n, phi[n][fi]).value;
      for (std::size_t l = 0; l <= K; ++l) {
        bool ok = true;
        for_each_composition(l, n, [&](const std::vector<std::size_t>& parts) {
          if (!ok) return;
          std::vector<std::size_t> sizes(n);
          for (std::size_t i = 0; i < n; ++i) sizes[i] = p.level(parts[i]).size();
          for_each_tuple(sizes, [&](const std::vector<std::size_t>& pick) {
            if (!ok) return;
            std::vector<Transf> a, b;
            for (std::size_t i = 0; i < n; ++i) {
              a.push_back(p.element(parts[i], pick[i]).value);
              b.push_back(q.element(parts[i], phi[parts[i]][pick[i]]).value);
            }
            auto lhs = p.find(compose_transf(f, a));
            auto rhs = q.find(compose_transf(fq, b));
            if (!lhs || !rhs || phi[l][*lhs] != *rhs) {
              ok = false;
              reason = "composition at ranks " + std::to_string(n) + "," + std::to_string(l) +
                       " is not preserved";
            }
          });
        });
        if (!ok) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

inline IsoResult iso_truncation(const PgPairTrunc& p, const PgPairTrunc& q, std::size_t K) {
  IsoResult r;
  if (K > p.rank_cap() || K > q.rank_cap()) throw Error("iso check above the saturation cap");
  if (p.carrier_size() == 0 || q.carrier_size() == 0) throw Error("empty carrier");
  for (std::size_t n = 0; n <= K; ++n) {
    if (p.preclone.level(n).size() != q.preclone.level(n).size()) {
      r.reason = "level " + std::to_string(n) + " sizes differ (" +
                 std::to_string(p.preclone.level(n).size()) + " vs " +
                 std::to_string(q.preclone.level(n).size()) + ")";
      return r;
    }
  }
  const auto gp = p.generator_set();
  const auto gq = q.generator_set();
  std::vector<std::size_t> ranks;
  for (const auto& [rank, v] : gp) {
    auto it = gq.find(rank);
    if (it == gq.end() || it->second.size() != v.size()) {
      r.reason = "generator counts differ at rank " + std::to_string(rank);
      return r;
    }
    ranks.push_back(rank);
  }
  if (gq.size() != gp.size()) {
    r.reason = "generator ranks differ";
    return r;
  }

  // Seed: letters with the same name in both alphabets.
  std::map<std::size_t, std::vector<std::size_t>> seed;
  for (std::size_t rank : ranks) {
    const auto& vp = gp.at(rank);
    const auto& vq = gq.at(rank);
    std::vector<std::size_t> perm;
    std::vector<bool> used(vq.size(), false);
    for (const auto& t : vp) {
      std::optional<std::size_t> pick;
      for (std::size_t s = 0; s < p.letter_map.size() && !pick; ++s) {
        if (!(p.letter_map[s] == t)) continue;
        auto qs = q.alphabet->find((*p.alphabet)[s].name);
        if (!qs) continue;
        auto pos = std::find(vq.begin(), vq.end(), q.letter_map[*qs]) - vq.begin();
        if (static_cast<std::size_t>(pos) < vq.size() && !used[pos]) pick = pos;
      }
      if (!pick) break;
      used[*pick] = true;
      perm.push_back(*pick);
    }
    if (perm.size() == vp.size()) seed[rank] = perm;
  }

  std::map<std::size_t, std::vector<std::size_t>> perms;
  std::function<bool(std::size_t)> search;
  auto attempt = [&]() {
    std::vector<std::pair<Transf, Transf>> gens;
    for (std::size_t rank : ranks) {
      for (std::size_t i = 0; i < perms[rank].size(); ++i) {
        Transf a = gp.at(rank)[i];
        a.set_proper(false);
        gens.emplace_back(a, gq.at(rank)[perms[rank][i]]);
      }
    }
    TransfAlgebra alg{p.carrier_size()};
    auto tr = track_images(alg, gens, q.carrier_size(), K);
    if (!tr.ok()) return false;
    std::vector<std::vector<std::size_t>> phi;
    for (std::size_t n = 0; n <= K; ++n) {
      const std::size_t sz = p.preclone.level(n).size();
      std::vector<std::size_t> map(sz, SIZE_MAX);
      std::vector<bool> used(sz, false);
      if (tr.sources[n].size() != sz) return false;
      for (std::size_t i = 0; i < sz; ++i) {
        auto a = p.preclone.find(tr.sources[n][i]);
        auto b = q.preclone.find(tr.images[n][i]);
        if (!a || !b || used[*b]) return false;
        used[*b] = true;
        map[*a] = *b;
      }
      phi.push_back(std::move(map));
    }
    std::string why;
    if (!detail::preserves_compositions(p.preclone, q.preclone, phi, K, why)) return false;
    r.generator_bijection = std::move(gens);
    for (auto& [a, b] : r.generator_bijection) a.set_proper(true);
    r.level_bijection = std::move(phi);
    return true;
  };
  search = [&](std::size_t ri) -> bool {
    if (ri == ranks.size()) return attempt();
    const std::size_t rank = ranks[ri];
    std::vector<std::size_t> perm(gp.at(rank).size());
    std::iota(perm.begin(), perm.end(), 0);
    if (seed.count(rank)) {
      perms[rank] = seed[rank];
      if (search(ri + 1)) return true;
    }
    do {
      if (seed.count(rank) && perm == seed[rank]) continue;
      perms[rank] = perm;
      if (search(ri + 1)) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  };
  if (search(0)) {
    r.isomorphic = true;
    return r;
  }
  r.reason = "no generator bijection extends to a level-wise isomorphism";
  return r;
}

}  // namespace treeclone
