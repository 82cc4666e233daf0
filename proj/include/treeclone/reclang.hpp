#pragma once

// Recognizable languages of any rank n over a fixed automaton carrier Q: an
// explicit set of rank-n transformations reachable from the letters.
// Membership of a tree t is tau(t) in the set.

#include <algorithm>
#include <memory>
#include <vector>

#include "treeclone/dfta.hpp"
#include "treeclone/preclone.hpp"

namespace treeclone {

class RecLang {
 public:
  // Rank-n language over a, given by the accepting elements of P_n.
  RecLang(std::shared_ptr<const Dfta> a, std::size_t rank, std::vector<Transf> accepting)
      : RecLang(a, nullptr, rank, std::move(accepting)) {}

  // Same, reusing a saturation of a whose cap is at least rank.
  RecLang(std::shared_ptr<const Dfta> a, std::shared_ptr<const PgPairTrunc> reach, std::size_t rank,
          std::vector<Transf> accepting)
      : dfta_(std::move(a)), rank_(rank), reach_(std::move(reach)) {
    if (!dfta_) throw Error("language requires an automaton");
    if (!reach_ || reach_->rank_cap() < rank_) {
      reach_ = std::make_shared<const PgPairTrunc>(saturate(*dfta_, std::max<std::size_t>(rank_, 1)));
    }
    for (auto& t : accepting) {
      if (t.rank() != rank_ || t.carrier_size() != dfta_->num_states()) {
        throw ArityError("accepting element of the wrong shape");
      }
      if (!reach_->preclone.find(t)) throw Error("accepting element is not reachable");
      t.set_proper(false);
    }
    std::sort(accepting.begin(), accepting.end(),
              [](const Transf& x, const Transf& y) { return x.table() < y.table(); });
    accepting.erase(std::unique(accepting.begin(), accepting.end()), accepting.end());
    accepting_ = std::move(accepting);
  }

  // The rank-0 language L(a): reachable states that are final.
  static RecLang from_dfta(const Dfta& a) {
    auto ptr = std::make_shared<const Dfta>(a);
    auto sat = std::make_shared<const PgPairTrunc>(saturate(a, 1));
    std::vector<Transf> acc;
    for (const auto& e : sat->preclone.level(0)) {
      if (a.is_final(e.value.value())) acc.push_back(e.value);
    }
    return RecLang(std::move(ptr), std::move(sat), 0, std::move(acc));
  }

  const Dfta& dfta() const noexcept { return *dfta_; }
  const std::shared_ptr<const Dfta>& dfta_ptr() const noexcept { return dfta_; }
  std::size_t rank() const noexcept { return rank_; }
  const std::vector<Transf>& accepting() const noexcept { return accepting_; }
  // The reachable level P_rank.
  const std::vector<Element>& reachable() const { return reach_->preclone.level(rank_); }
  const std::shared_ptr<const PgPairTrunc>& saturation() const noexcept { return reach_; }

  bool contains_element(const Transf& t) const {
    return std::binary_search(accepting_.begin(), accepting_.end(), t,
                              [](const Transf& x, const Transf& y) { return x.table() < y.table(); });
  }

  bool contains(const Tree& t) const {
    if (t.rank() != rank_) return false;
    return contains_element(tau_eval(*dfta_, t));
  }

  bool empty() const noexcept { return accepting_.empty(); }

 private:
  std::shared_ptr<const Dfta> dfta_;
  std::size_t rank_;
  std::shared_ptr<const PgPairTrunc> reach_;
  std::vector<Transf> accepting_;
};

// (u, k1, k2)^{-1} L = { t : u.(1^k1 + t + 1^k2) in L }
inline RecLang left_quotient(const RecLang& L, const Tree& u, std::size_t k1, std::size_t k2) {
  if (!same_alphabet(u.alphabet(), L.dfta().alphabet())) {
    throw AlphabetMismatch("context and language use different alphabets");
  }
  if (u.rank() != k1 + 1 + k2) {
    throw ArityError("left quotient context has rank " + std::to_string(u.rank()) + ", expected " +
                     std::to_string(k1 + 1 + k2));
  }
  if (L.rank() < k1 + k2) throw ArityError("left quotient leaves a negative rank");
  const std::size_t n = L.rank() - k1 - k2;
  const std::size_t q = L.dfta().num_states();
  const Transf tu = tau_eval(L.dfta(), u);
  const Transf id = Transf::identity(q);
  RecLang probe(L.dfta_ptr(), L.saturation(), n, {});
  std::vector<Transf> acc;
  for (const auto& e : probe.reachable()) {
    std::vector<Transf> args(k1, id);
    args.push_back(e.value);
    args.insert(args.end(), k2, id);
    if (L.contains_element(compose_transf(tu, args))) acc.push_back(e.value);
  }
  return RecLang(L.dfta_ptr(), probe.saturation(), n, std::move(acc));
}

// L v^{-1} = { t : t.v in L }
inline RecLang right_quotient(const RecLang& L, const TreeTuple& v) {
  for (const auto& c : v.components()) {
    if (!same_alphabet(c.alphabet(), L.dfta().alphabet())) {
      throw AlphabetMismatch("tuple and language use different alphabets");
    }
  }
  if (v.total_rank() != L.rank()) {
    throw ArityError("right quotient tuple has total rank " + std::to_string(v.total_rank()) +
                     ", language has rank " + std::to_string(L.rank()));
  }
  const std::size_t n = v.size();
  std::vector<Transf> tv;
  for (const auto& c : v.components()) tv.push_back(tau_eval(L.dfta(), c));
  RecLang probe(L.dfta_ptr(), L.saturation(), n, {});
  std::vector<Transf> acc;
  for (const auto& e : probe.reachable()) {
    if (L.contains_element(compose_transf(e.value, tv))) acc.push_back(e.value);
  }
  return RecLang(L.dfta_ptr(), probe.saturation(), n, std::move(acc));
}

inline bool lang_equal(const RecLang& a, const RecLang& b) {
  if (!(a.dfta() == b.dfta())) throw Error("languages live on different automata");
  if (a.rank() != b.rank()) throw ArityError("languages have different ranks");
  return a.accepting() == b.accepting();
}

// Equality of the rank-0 languages of two automata over one alphabet.
inline bool same_language(const Dfta& a, const Dfta& b) {
  return is_empty(product(a, b, BoolOp::symmetric_difference));
}

}  // namespace treeclone
