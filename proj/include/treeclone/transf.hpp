#pragma once

// Transformations Q^n -> Q of a finite carrier, stored as flat tables.
//
// The table is indexed row-major over Q^n: (q1, ..., qn) lives at
// q1*|Q|^(n-1) + ... + qn. Composition is the preclone composition of T(Q):
//   (f.(g1 + ... + gn))(q_{1,1}, ..., q_{n,m_n})
//       = f(g1(q_{1,1}, ..., q_{1,m_1}), ..., gn(q_{n,1}, ..., q_{n,m_n})).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "treeclone/core.hpp"

namespace treeclone {

using State = std::uint32_t;

namespace detail {

inline std::size_t checked_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > SIZE_MAX / base) throw Error("table size overflow");
    r *= base;
  }
  return r;
}

}  // namespace detail

class Transf {
 public:
  Transf() = default;

  Transf(std::size_t carrier_size, std::size_t rank, std::vector<State> table, bool proper = false)
      : carrier_(carrier_size), rank_(rank), table_(std::move(table)), proper_(proper) {
    if (table_.size() != detail::checked_pow(carrier_, rank_)) {
      throw Error("transformation table has " + std::to_string(table_.size()) +
                  " entries, expected |Q|^" + std::to_string(rank_));
    }
    for (State s : table_) {
      if (s >= carrier_) throw Error("transformation table entry out of range");
    }
  }

  static Transf identity(std::size_t carrier_size) {
    std::vector<State> t(carrier_size);
    for (std::size_t q = 0; q < carrier_size; ++q) t[q] = static_cast<State>(q);
    return Transf(carrier_size, 1, std::move(t));
  }

  static Transf constant(std::size_t carrier_size, std::size_t rank, State value, bool proper = false) {
    return Transf(carrier_size, rank,
                  std::vector<State>(detail::checked_pow(carrier_size, rank), value), proper);
  }

  // Tabulates fn over Q^rank in index order.
  template <class Fn>
  static Transf tabulate(std::size_t carrier_size, std::size_t rank, Fn&& fn, bool proper = false) {
    const std::size_t n = detail::checked_pow(carrier_size, rank);
    std::vector<State> t(n);
    std::vector<State> args(rank, 0);
    for (std::size_t idx = 0; idx < n; ++idx) {
      t[idx] = static_cast<State>(fn(std::span<const State>(args)));
      for (std::size_t i = rank; i-- > 0;) {
        if (++args[i] < carrier_size) break;
        args[i] = 0;
      }
    }
    return Transf(carrier_size, rank, std::move(t), proper);
  }

  std::size_t carrier_size() const noexcept { return carrier_; }
  std::size_t rank() const noexcept { return rank_; }
  const std::vector<State>& table() const noexcept { return table_; }
  bool proper() const noexcept { return proper_; }
  void set_proper(bool p) noexcept { proper_ = p; }

  bool is_identity() const {
    if (rank_ != 1) return false;
    for (std::size_t q = 0; q < carrier_; ++q) {
      if (table_[q] != q) return false;
    }
    return true;
  }

  State operator()(std::span<const State> args) const {
    std::size_t idx = 0;
    for (State a : args) idx = idx * carrier_ + a;
    return table_[idx];
  }

  // Value of a rank-0 element.
  State value() const { return table_.at(0); }

  // Identity is (carrier, rank, table); properness is metadata.
  friend bool operator==(const Transf& a, const Transf& b) {
    return a.carrier_ == b.carrier_ && a.rank_ == b.rank_ && a.table_ == b.table_;
  }

 private:
  std::size_t carrier_ = 0;
  std::size_t rank_ = 0;
  std::vector<State> table_;
  bool proper_ = false;
};

struct TransfHash {
  std::size_t operator()(const Transf& t) const noexcept {
    std::uint64_t h = 1469598103934665603ull ^ (t.rank() * 1099511628211ull);
    for (State s : t.table()) {
      h ^= s;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

inline Transf compose_transf(const Transf& f, std::span<const Transf> gs) {
  if (gs.size() != f.rank()) {
    throw ArityError("composing a rank-" + std::to_string(f.rank()) + " transformation with " +
                     std::to_string(gs.size()) + " arguments");
  }
  const std::size_t q = f.carrier_size();
  std::size_t m = 0;
  bool proper = f.proper();
  for (const auto& g : gs) {
    if (g.carrier_size() != q) throw Error("composition across different carriers");
    m += g.rank();
    proper = proper || g.proper();
  }

  // Block size of each argument segment in the flattened index.
  std::vector<std::size_t> seg(gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) seg[i] = detail::checked_pow(q, gs[i].rank());

  const std::size_t total = detail::checked_pow(q, m);
  std::vector<State> table(total);
  std::vector<std::size_t> part(gs.size());
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t i = gs.size(); i-- > 0;) {
      part[i] = rest % seg[i];
      rest /= seg[i];
    }
    std::size_t fidx = 0;
    for (std::size_t i = 0; i < gs.size(); ++i) fidx = fidx * q + gs[i].table()[part[i]];
    table[idx] = f.table()[fidx];
  }
  return Transf(q, m, std::move(table), proper);
}

inline Transf compose_transf(const Transf& f, std::initializer_list<Transf> gs) {
  return compose_transf(f, std::span<const Transf>(gs.begin(), gs.size()));
}

inline std::string format_table(const Transf& t) {
  std::string out = "[";
  for (std::size_t i = 0; i < t.table().size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(t.table()[i]);
  }
  out += ']';
  return out;
}

}  // namespace treeclone
