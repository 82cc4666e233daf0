#pragma once

// Division of truncated pg-pairs into direct powers, and membership in the
// pseudovariety generated by one truncation, searched up to explicit caps.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeclone/preclone.hpp"

namespace treeclone {

struct PowerElem {
  std::size_t rank = 0;
  std::vector<std::uint32_t> idx;  // base element index per coordinate

  friend bool operator==(const PowerElem&, const PowerElem&) = default;
};

// The m-th direct power of a truncation, composed coordinatewise.
class PowerTrunc {
 public:
  using element = PowerElem;

  PowerTrunc(const PrecloneTrunc& base, std::size_t m) : base_(&base), m_(m) {
    if (m == 0) throw Error("power exponent must be positive");
    if (!base.unit_index()) throw Error("power of a truncation without a unit");
  }

  const PrecloneTrunc& base() const noexcept { return *base_; }
  std::size_t exponent() const noexcept { return m_; }

  std::optional<std::size_t> level_size(std::size_t k) const {
    std::size_t r = 1;
    const std::size_t b = base_->level(k).size();
    for (std::size_t i = 0; i < m_; ++i) {
      if (b != 0 && r > std::numeric_limits<std::size_t>::max() / b) return std::nullopt;
      r *= b;
    }
    return r;
  }

  // Mixed-radix decoding; coordinate 0 is the most significant digit.
  element at(std::size_t k, std::size_t ordinal) const {
    const std::size_t b = base_->level(k).size();
    element e{k, std::vector<std::uint32_t>(m_)};
    for (std::size_t j = m_; j-- > 0;) {
      e.idx[j] = static_cast<std::uint32_t>(ordinal % b);
      ordinal /= b;
    }
    return e;
  }

  const Transf& component(const element& e, std::size_t j) const {
    return base_->element(e.rank, e.idx[j]).value;
  }

  element unit() const {
    return element{1, std::vector<std::uint32_t>(m_, static_cast<std::uint32_t>(*base_->unit_index()))};
  }

  std::size_t rank(const element& e) const { return e.rank; }

  std::size_t hash(const element& e) const {
    std::uint64_t h = 1469598103934665603ull ^ e.rank;
    for (auto i : e.idx) {
      h ^= i;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }

  element compose(const element& f, std::span<const element> gs) const {
    std::size_t total = 0;
    for (const auto& g : gs) total += g.rank;
    element out{total, std::vector<std::uint32_t>(m_)};
    for (std::size_t j = 0; j < m_; ++j) {
      std::vector<std::uint32_t> key{static_cast<std::uint32_t>(f.rank), f.idx[j]};
      for (const auto& g : gs) {
        key.push_back(static_cast<std::uint32_t>(g.rank));
        key.push_back(g.idx[j]);
      }
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        std::vector<Transf> args;
        for (const auto& g : gs) args.push_back(component(g, j));
        auto r = base_->find(compose_transf(component(f, j), args));
        if (!r) throw Error("power composition leaves the base truncation");
        it = cache_.emplace(std::move(key), static_cast<std::uint32_t>(*r)).first;
      }
      out.idx[j] = it->second;
    }
    return out;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (auto x : v) {
        h ^= x;
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };

  const PrecloneTrunc* base_;
  std::size_t m_;
  mutable std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, KeyHash> cache_;
};

enum class Outcome { yes, no, inconclusive };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::yes: return "yes";
    case Outcome::no: return "no";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "?";
}

struct CertificateLine {
  Transf generator;                 // element of the divided truncation
  std::string generator_term;
  std::vector<Transf> components;   // its preimage in S^m
  std::vector<std::string> component_terms;
};

struct DivisionResult {
  Outcome outcome = Outcome::inconclusive;
  std::string reason;
  std::size_t power = 0;
  std::size_t rank_cap = 0;
  std::size_t nodes = 0;
  std::vector<CertificateLine> certificate;
};

struct DivisionOptions {
  std::size_t node_budget = 2'000'000;
  std::size_t max_candidates = 1'000'000;
};

namespace detail {

inline std::vector<Transf> sorted_generators(const PgPairTrunc& t) {
  std::vector<Transf> gens;
  for (const auto& [rank, v] : t.generator_set()) gens.insert(gens.end(), v.begin(), v.end());
  return gens;
}

}  // namespace detail

// Does the truncation of t divide the m-th power of s? Searches an
// assignment of t's generators to elements of s^m whose generated
// sub-preclone maps onto t.
inline DivisionResult divides(const PgPairTrunc& t, const PrecloneTrunc& s, std::size_t m, std::size_t K,
                              const DivisionOptions& opts = {}) {
  DivisionResult r;
  r.power = m;
  r.rank_cap = K;
  if (K > t.rank_cap() || K > s.rank_cap()) throw Error("division check above the saturation cap");
  const auto gens = detail::sorted_generators(t);
  for (const auto& g : gens) {
    if (g.rank() > K) {
      r.reason = "rank cap " + std::to_string(K) + " is below generator rank " + std::to_string(g.rank());
      return r;
    }
  }
  PowerTrunc pw(s, m);
  std::vector<std::size_t> cand_count(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    auto sz = pw.level_size(gens[i].rank());
    if (!sz || *sz > opts.max_candidates) {
      r.reason = "too many candidate images at rank " + std::to_string(gens[i].rank());
      return r;
    }
    cand_count[i] = *sz;
  }

  std::vector<PowerElem> chosen;
  bool budget_hit = false;
  std::optional<std::vector<PowerElem>> found;

  auto columns_sorted = [&]() {
    for (std::size_t j = 0; j + 1 < m; ++j) {
      for (const auto& c : chosen) {
        if (c.idx[j] < c.idx[j + 1]) break;
        if (c.idx[j] > c.idx[j + 1]) return false;
      }
    }
    return true;
  };
  auto pairs = [&]() {
    std::vector<std::pair<PowerElem, Transf>> out;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      Transf g = gens[i];
      g.set_proper(false);
      out.emplace_back(chosen[i], std::move(g));
    }
    return out;
  };
  auto covers = [&](const Tracking<PowerTrunc>& tr) {
    for (std::size_t k = 0; k <= K; ++k) {
      std::unordered_map<Transf, int, TransfHash> seen;
      for (const auto& im : tr.images[k]) seen.emplace(im, 0);
      if (seen.size() != t.preclone.level(k).size()) return false;
      for (const auto& e : t.preclone.level(k)) {
        if (!seen.count(e.value)) return false;
      }
    }
    return true;
  };

  std::function<void(std::size_t)> dfs = [&](std::size_t i) {
    if (found || budget_hit) return;
    if (i == gens.size()) {
      auto tr = track_images(pw, pairs(), t.carrier_size(), K);
      if (tr.ok() && covers(tr)) found = chosen;
      return;
    }
    for (std::size_t c = 0; c < cand_count[i] && !found && !budget_hit; ++c) {
      if (++r.nodes > opts.node_budget) {
        budget_hit = true;
        return;
      }
      chosen.push_back(pw.at(gens[i].rank(), c));
      if (columns_sorted() && track_images(pw, pairs(), t.carrier_size(), 0).ok()) dfs(i + 1);
      chosen.pop_back();
    }
  };
  dfs(0);

  if (found) {
    r.outcome = Outcome::yes;
    for (std::size_t i = 0; i < gens.size(); ++i) {
      CertificateLine line{gens[i], witness_text(t.preclone, gens[i]), {}, {}};
      for (std::size_t j = 0; j < m; ++j) {
        line.components.push_back(pw.component((*found)[i], j));
        line.component_terms.push_back(witness_text(s, pw.component((*found)[i], j)));
      }
      r.certificate.push_back(std::move(line));
    }
    return r;
  }
  if (budget_hit) {
    r.reason = "node budget of " + std::to_string(opts.node_budget) + " exhausted";
    return r;
  }
  r.outcome = Outcome::no;
  r.reason = "no assignment of generators extends to a morphism at rank cap " + std::to_string(K);
  return r;
}

// Product over ranks k with B_k nonempty of |A_k|^|B_k|; nothing on overflow.
inline std::optional<std::uint64_t> power_bound(const std::map<std::size_t, std::size_t>& b_counts,
                                                      const std::map<std::size_t, std::size_t>& a_counts) {
  std::uint64_t r = 1;
  for (const auto& [k, nb] : b_counts) {
    if (nb == 0) continue;
    auto it = a_counts.find(k);
    const std::uint64_t na = it == a_counts.end() ? 0 : it->second;
    for (std::size_t i = 0; i < nb; ++i) {
      if (na != 0 && r > std::numeric_limits<std::uint64_t>::max() / na) return std::nullopt;
      r *= na;
    }
  }
  return r;
}

inline std::map<std::size_t, std::size_t> generator_profile(const PgPairTrunc& p) {
  std::map<std::size_t, std::size_t> out;
  for (const auto& [k, v] : p.generator_set()) out[k] = v.size();
  return out;
}

struct MembershipResult {
  Outcome outcome = Outcome::inconclusive;
  bool complete = false;  // false: a negative answer is only "no within caps"
  std::size_t power = 0;  // exponent of the successful certificate
  std::size_t searched_up_to = 0;
  std::optional<std::uint64_t> bound;
  std::size_t rank_cap = 0;
  std::size_t power_cap = 0;
  std::string reason;
  std::vector<CertificateLine> certificate;

  std::string label() const {
    if (outcome == Outcome::yes) return "yes";
    if (outcome == Outcome::no && complete) return "no";
    return "inconclusive-if-false";
  }
};

inline MembershipResult member_generated(const PgPairTrunc& t, const PgPairTrunc& s, std::size_t K,
                                         std::size_t m_cap, const DivisionOptions& opts = {}) {
  MembershipResult r;
  r.rank_cap = K;
  r.power_cap = m_cap;
  r.bound = power_bound(generator_profile(t), generator_profile(s));
  std::size_t limit = m_cap;
  if (r.bound && *r.bound < limit) limit = static_cast<std::size_t>(*r.bound);
  bool all_definite = true;
  for (std::size_t m = 1; m <= limit; ++m) {
    auto d = divides(t, s.preclone, m, K, opts);
    r.searched_up_to = m;
    if (d.outcome == Outcome::yes) {
      r.outcome = Outcome::yes;
      r.complete = true;
      r.power = m;
      r.certificate = std::move(d.certificate);
      return r;
    }
    if (d.outcome == Outcome::inconclusive) {
      all_definite = false;
      r.reason = d.reason;
    }
  }
  const bool reached_bound = r.bound && limit >= *r.bound;
  r.complete = all_definite && reached_bound;
  r.outcome = all_definite ? Outcome::no : Outcome::inconclusive;
  if (r.reason.empty()) {
    r.reason = reached_bound ? "no exponent up to the bound works"
                             : "no exponent up to the power cap works; the bound was not reached";
  }
  return r;
}

}  // namespace treeclone
