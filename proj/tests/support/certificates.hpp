#pragma once

// Independent re-check of division certificates.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "treeclone/treeclone.hpp"

namespace oracle {

using namespace treeclone;

// Componentwise action of (c_1, ..., c_m) on the carrier q^m.
inline Transf power_transf(const std::vector<Transf>& cs, std::size_t q) {
  const std::size_t m = cs.size(), n = cs[0].rank();
  std::size_t carrier = 1;
  for (std::size_t i = 0; i < m; ++i) carrier *= q;
  return Transf::tabulate(carrier, n, [&](std::span<const State> args) {
    std::size_t out = 0;
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<State> coord(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t x = args[i];
        for (std::size_t k = m - 1; k > j; --k) x /= q;
        coord[i] = static_cast<State>(x % q);
      }
      out = out * q + cs[j](coord);
    }
    return static_cast<State>(out);
  });
}

// Re-checks a division certificate through saturation and generator-map
// extension on the explicit product carrier.
inline bool certificate_valid(const DivisionResult& d, const PgPairTrunc& t, const PrecloneTrunc& s, std::size_t K) {
  std::vector<RankedSymbol> syms;
  std::vector<Transf> src_images;
  std::map<std::string, Transf> images;
  for (std::size_t i = 0; i < d.certificate.size(); ++i) {
    const auto& line = d.certificate[i];
    const std::string name = "g" + std::to_string(i);
    syms.push_back({name, line.generator.rank()});
    src_images.push_back(power_transf(line.components, s.carrier_size()));
    Transf g = line.generator;
    g.set_proper(false);
    images.emplace(name, g);
  }
  const std::size_t carrier = src_images.front().carrier_size();
  auto src = saturate_generators(make_alphabet(syms), src_images, carrier, K);
  auto r = extend_generator_map(src, t.preclone, images);
  if (r.status != ExtendStatus::extends) return false;
  return std::all_of(r.onto.begin(), r.onto.end(), [](bool b) { return b; });
}

}  // namespace oracle
