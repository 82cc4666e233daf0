#pragma once

// Complete deterministic bottom-up tree automata, i.e. finite Sigma-algebras
// with a set of final states.

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "treeclone/core.hpp"
#include "treeclone/transf.hpp"

namespace treeclone {

class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& token,
              const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message +
              (token.empty() ? std::string() : " (near '" + token + "')")),
        line_(line),
        token_(token) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t line_;
  std::string token_;
};

class Dfta {
 public:
  Dfta(AlphabetPtr alphabet, std::vector<std::string> states, std::vector<Transf> transitions,
       std::vector<bool> finals)
      : alphabet_(std::move(alphabet)),
        states_(std::move(states)),
        transitions_(std::move(transitions)),
        finals_(std::move(finals)) {
    if (!alphabet_) throw Error("automaton requires an alphabet");
    if (states_.empty()) throw Error("automaton must have at least one state");
    if (transitions_.size() != alphabet_->size()) {
      throw Error("automaton needs exactly one transition table per symbol");
    }
    for (std::size_t s = 0; s < transitions_.size(); ++s) {
      const auto& t = transitions_[s];
      if (t.carrier_size() != states_.size() || t.rank() != (*alphabet_)[s].rank) {
        throw Error("transition table for '" + (*alphabet_)[s].name + "' has the wrong shape");
      }
      transitions_[s].set_proper(true);
    }
    if (finals_.size() != states_.size()) throw Error("final-state mask has the wrong size");
  }

  const AlphabetPtr& alphabet() const noexcept { return alphabet_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  const std::vector<std::string>& states() const noexcept { return states_; }
  const std::string& state_name(State q) const { return states_.at(q); }
  const Transf& transition(std::size_t symbol) const { return transitions_.at(symbol); }
  const std::vector<Transf>& transitions() const noexcept { return transitions_; }
  bool is_final(State q) const { return finals_.at(q); }
  const std::vector<bool>& finals() const noexcept { return finals_; }

  std::optional<State> find_state(std::string_view name) const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i] == name) return static_cast<State>(i);
    }
    return std::nullopt;
  }

  friend bool operator==(const Dfta& a, const Dfta& b) {
    return same_alphabet(a.alphabet_, b.alphabet_) && a.states_ == b.states_ &&
           a.transitions_ == b.transitions_ && a.finals_ == b.finals_;
  }

 private:
  AlphabetPtr alphabet_;
  std::vector<std::string> states_;
  std::vector<Transf> transitions_;
  std::vector<bool> finals_;
};

namespace detail {

inline State eval_node(const Dfta& a, const TreeNode& n, std::span<const State> env) {
  if (n.is_variable()) return env[n.variable() - 1];
  std::vector<State> args;
  args.reserve(n.children.size());
  for (const auto& c : n.children) args.push_back(eval_node(a, c, env));
  return a.transition(n.symbol())(args);
}

inline void require_alphabet(const Dfta& a, const Tree& t) {
  if (!same_alphabet(a.alphabet(), t.alphabet())) {
    throw AlphabetMismatch("tree and automaton use different alphabets");
  }
}

}  // namespace detail

inline State evaluate(const Dfta& a, const Tree& t) {
  detail::require_alphabet(a, t);
  if (t.rank() != 0) throw ArityError("evaluate expects a rank-0 tree");
  return detail::eval_node(a, t.root(), {});
}

inline bool accepts(const Dfta& a, const Tree& t) { return a.is_final(evaluate(a, t)); }

// The preclone morphism tau: SigmaM -> T(Q), computed pointwise by
// evaluating t under every assignment of states to its variables.
inline Transf tau_eval(const Dfta& a, const Tree& t) {
  detail::require_alphabet(a, t);
  const bool proper = !t.root().is_variable();
  return Transf::tabulate(
      a.num_states(), t.rank(),
      [&](std::span<const State> env) { return detail::eval_node(a, t.root(), env); }, proper);
}

// ---------------------------------------------------------------------------
// Boolean operations

enum class BoolOp { union_, intersection, difference, symmetric_difference };

inline Dfta product(const Dfta& a, const Dfta& b, BoolOp op) {
  if (!same_alphabet(a.alphabet(), b.alphabet())) {
    throw AlphabetMismatch("Boolean operations require identical alphabets");
  }
  const std::size_t na = a.num_states(), nb = b.num_states(), n = na * nb;
  std::vector<std::string> names;
  std::vector<bool> finals;
  names.reserve(n);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      names.push_back("(" + a.states()[i] + "," + b.states()[j] + ")");
      const bool fa = a.is_final(static_cast<State>(i)), fb = b.is_final(static_cast<State>(j));
      bool f = false;
      switch (op) {
        case BoolOp::union_: f = fa || fb; break;
        case BoolOp::intersection: f = fa && fb; break;
        case BoolOp::difference: f = fa && !fb; break;
        case BoolOp::symmetric_difference: f = fa != fb; break;
      }
      finals.push_back(f);
    }
  }
  std::vector<Transf> trans;
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
    const auto& ta = a.transition(s);
    const auto& tb = b.transition(s);
    std::vector<State> xa(ta.rank()), xb(tb.rank());
    trans.push_back(Transf::tabulate(n, ta.rank(), [&](std::span<const State> args) {
      for (std::size_t i = 0; i < args.size(); ++i) {
        xa[i] = static_cast<State>(args[i] / nb);
        xb[i] = static_cast<State>(args[i] % nb);
      }
      return ta(xa) * nb + tb(xb);
    }));
  }
  return Dfta(a.alphabet(), std::move(names), std::move(trans), std::move(finals));
}

inline Dfta complement(const Dfta& a) {
  std::vector<bool> f(a.finals());
  f.flip();
  return Dfta(a.alphabet(), a.states(), a.transitions(), std::move(f));
}

// ---------------------------------------------------------------------------
// Reachability and minimization

inline std::vector<bool> reachable_states(const Dfta& a) {
  std::vector<bool> reach(a.num_states(), false);
  std::vector<State> list;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
      const auto& t = a.transition(s);
      const std::size_t r = t.rank();
      // Enumerate tuples over the currently reachable states.
      std::vector<std::size_t> pick(r, 0);
      if (r > 0 && list.empty()) continue;
      while (true) {
        std::vector<State> args(r);
        for (std::size_t i = 0; i < r; ++i) args[i] = list[pick[i]];
        const State q = t(args);
        if (!reach[q]) {
          reach[q] = true;
          list.push_back(q);
          changed = true;
        }
        std::size_t i = r;
        while (i > 0) {
          if (++pick[i - 1] < list.size()) break;
          pick[--i] = 0;
        }
        if (i == 0) break;
      }
    }
  }
  return reach;
}

inline bool is_empty(const Dfta& a) {
  const auto reach = reachable_states(a);
  for (std::size_t q = 0; q < reach.size(); ++q) {
    if (reach[q] && a.is_final(static_cast<State>(q))) return false;
  }
  return true;
}

namespace detail {

// Witness key of a tree: preorder sequence of symbol indices. Trees are
// ordered by size first, then lexicographically by this sequence.
using TreeKey = std::vector<std::int32_t>;

inline bool key_less(const TreeKey& a, const TreeKey& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

// Smallest tree (size, then preorder) reaching each state; empty if unreachable.
inline std::vector<TreeKey> smallest_trees(const Dfta& a) {
  std::vector<TreeKey> best(a.num_states());
  std::vector<bool> known(a.num_states(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
      const auto& t = a.transition(s);
      const std::size_t r = t.rank();
      std::vector<State> known_states;
      for (std::size_t q = 0; q < known.size(); ++q) {
        if (known[q]) known_states.push_back(static_cast<State>(q));
      }
      if (r > 0 && known_states.empty()) continue;
      std::vector<std::size_t> pick(r, 0);
      while (true) {
        std::vector<State> args(r);
        TreeKey key{static_cast<std::int32_t>(s)};
        for (std::size_t i = 0; i < r; ++i) {
          args[i] = known_states[pick[i]];
          key.insert(key.end(), best[args[i]].begin(), best[args[i]].end());
        }
        const State q = t(args);
        if (!known[q] || key_less(key, best[q])) {
          best[q] = std::move(key);
          known[q] = true;
          changed = true;
        }
        std::size_t i = r;
        while (i > 0) {
          if (++pick[i - 1] < known_states.size()) break;
          pick[--i] = 0;
        }
        if (i == 0) break;
      }
    }
  }
  return best;
}

}  // namespace detail

// Restricts to reachable states, merges states that no unary context
// separates, and renames states q0, q1, ... in the order in which the
// smallest tree reaching them appears in the size-then-lexicographic
// enumeration of all trees.
inline Dfta minimize(const Dfta& a) {
  const auto reach = reachable_states(a);
  std::vector<State> live;
  for (std::size_t q = 0; q < reach.size(); ++q) {
    if (reach[q]) live.push_back(static_cast<State>(q));
  }
  if (live.empty()) {
    // No trees at all: a single rejecting sink.
    std::vector<Transf> trans;
    for (const auto& s : a.alphabet()->symbols()) trans.push_back(Transf::constant(1, s.rank, 0));
    return Dfta(a.alphabet(), {"q0"}, std::move(trans), {false});
  }

  // Moore-style refinement. Splitters are (symbol, argument position,
  // co-argument tuple over live states); a round recomputes every state's
  // signature under the current partition until the class count is stable.
  std::vector<std::size_t> cls(a.num_states(), 0);
  for (State q : live) cls[q] = a.is_final(q) ? 1 : 0;
  std::size_t num_classes = 0;
  {
    std::set<std::size_t> distinct;
    for (State q : live) distinct.insert(cls[q]);
    num_classes = distinct.size();
  }

  while (true) {
    std::map<std::vector<std::size_t>, std::size_t> signature_ids;
    std::vector<std::size_t> next(a.num_states(), 0);
    for (State q : live) {
      std::vector<std::size_t> sig{cls[q]};
      for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
        const auto& t = a.transition(s);
        const std::size_t r = t.rank();
        if (r == 0) continue;
        for (std::size_t pos = 0; pos < r; ++pos) {
          std::vector<std::size_t> pick(r - 1, 0);
          while (true) {
            std::vector<State> args(r);
            for (std::size_t i = 0, j = 0; i < r; ++i) args[i] = i == pos ? q : live[pick[j++]];
            sig.push_back(cls[t(args)]);
            std::size_t i = r - 1;
            while (i > 0) {
              if (++pick[i - 1] < live.size()) break;
              pick[--i] = 0;
            }
            if (i == 0) break;
          }
        }
      }
      auto [it, inserted] = signature_ids.emplace(std::move(sig), signature_ids.size());
      next[q] = it->second;
    }
    const std::size_t count = signature_ids.size();
    cls = std::move(next);
    if (count == num_classes) break;
    num_classes = count;
  }

  // Canonical order of classes by their smallest tree.
  const auto best = detail::smallest_trees(a);
  std::vector<const detail::TreeKey*> class_key(num_classes, nullptr);
  for (State q : live) {
    auto& k = class_key[cls[q]];
    if (!k || detail::key_less(best[q], *k)) k = &best[q];
  }
  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return detail::key_less(*class_key[x], *class_key[y]);
  });
  std::vector<State> rename(num_classes);
  for (std::size_t i = 0; i < order.size(); ++i) rename[order[i]] = static_cast<State>(i);

  std::vector<State> rep(num_classes);
  for (State q : live) rep[rename[cls[q]]] = q;

  std::vector<std::string> names;
  std::vector<bool> finals;
  for (std::size_t i = 0; i < num_classes; ++i) {
    names.push_back("q" + std::to_string(i));
    finals.push_back(a.is_final(rep[i]));
  }
  std::vector<Transf> trans;
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
    const auto& t = a.transition(s);
    std::vector<State> args(t.rank());
    trans.push_back(Transf::tabulate(num_classes, t.rank(), [&](std::span<const State> xs) {
      for (std::size_t i = 0; i < xs.size(); ++i) args[i] = rep[xs[i]];
      return rename[cls[t(args)]];
    }));
  }
  return Dfta(a.alphabet(), std::move(names), std::move(trans), std::move(finals));
}

// ---------------------------------------------------------------------------
// Text format
//
//   # comment
//   alphabet: or/2 true/0 false/0
//   states: F T
//   final: T
//   trans: or(F,T) -> T
//   true() -> T          (continuation lines after a trans: header also work)

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

inline Dfta parse_dfta(std::string_view text, const std::string& source = "<input>") {
  std::vector<RankedSymbol> symbols;
  std::vector<std::string> states;
  std::vector<std::string> final_names;
  struct Rule {
    std::string sym;
    std::vector<std::string> args;
    std::string target;
    std::size_t line;
  };
  std::vector<Rule> rules;
  bool have_alphabet = false, have_states = false, have_final = false, in_trans = false;

  auto parse_rule = [&](const std::string& body, std::size_t line) {
    const auto arrow = body.find("->");
    if (arrow == std::string::npos) throw FormatError(source, line, body, "expected 'sym(q,...) -> q'");
    const std::string lhs = detail::trim(std::string_view(body).substr(0, arrow));
    const std::string rhs = detail::trim(std::string_view(body).substr(arrow + 2));
    if (rhs.empty()) throw FormatError(source, line, body, "missing target state");
    Rule r{{}, {}, rhs, line};
    const auto open = lhs.find('(');
    if (open == std::string::npos) {
      r.sym = lhs;
    } else {
      if (lhs.back() != ')') throw FormatError(source, line, lhs, "unbalanced parentheses");
      r.sym = detail::trim(std::string_view(lhs).substr(0, open));
      const std::string inner = lhs.substr(open + 1, lhs.size() - open - 2);
      if (!detail::trim(inner).empty()) {
        std::string cur;
        std::istringstream in(inner);
        while (std::getline(in, cur, ',')) {
          auto q = detail::trim(cur);
          if (q.empty()) throw FormatError(source, line, lhs, "empty argument state");
          r.args.push_back(q);
        }
      }
    }
    if (r.sym.empty()) throw FormatError(source, line, lhs, "missing symbol");
    rules.push_back(std::move(r));
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    const std::string head = colon == std::string::npos ? "" : detail::trim(line.substr(0, colon));
    const std::string body = colon == std::string::npos ? line : detail::trim(line.substr(colon + 1));

    if (head == "alphabet") {
      for (const auto& w : detail::split_ws(body)) {
        const auto slash = w.rfind('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == w.size()) {
          throw FormatError(source, lineno, w, "alphabet entries are name/rank");
        }
        std::size_t rank = 0;
        for (char c : w.substr(slash + 1)) {
          if (c < '0' || c > '9') throw FormatError(source, lineno, w, "rank must be a nonnegative integer");
          rank = rank * 10 + static_cast<std::size_t>(c - '0');
        }
        symbols.push_back({w.substr(0, slash), rank});
      }
      have_alphabet = true;
      in_trans = false;
    } else if (head == "states") {
      states = detail::split_ws(body);
      have_states = true;
      in_trans = false;
    } else if (head == "final") {
      final_names = detail::split_ws(body);
      have_final = true;
      in_trans = false;
    } else if (head == "trans") {
      in_trans = true;
      if (!body.empty()) parse_rule(body, lineno);
    } else if (in_trans && line.find("->") != std::string::npos) {
      parse_rule(line, lineno);
    } else {
      throw FormatError(source, lineno, line, "unrecognized line");
    }
  }
  if (!have_alphabet) throw FormatError(source, lineno, "", "missing 'alphabet:' line");
  if (!have_states) throw FormatError(source, lineno, "", "missing 'states:' line");
  if (!have_final) throw FormatError(source, lineno, "", "missing 'final:' line");
  if (states.empty()) throw FormatError(source, lineno, "", "no states declared");

  AlphabetPtr alphabet;
  try {
    alphabet = make_alphabet(symbols);
  } catch (const Error& e) {
    throw FormatError(source, 0, "", e.what());
  }
  std::map<std::string, State> state_index;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!state_index.emplace(states[i], static_cast<State>(i)).second) {
      throw FormatError(source, 0, states[i], "duplicate state");
    }
  }
  auto lookup = [&](const std::string& q, std::size_t line) {
    auto it = state_index.find(q);
    if (it == state_index.end()) throw FormatError(source, line, q, "unknown state");
    return it->second;
  };

  std::vector<bool> finals(states.size(), false);
  for (const auto& f : final_names) finals[lookup(f, 0)] = true;

  const std::size_t n = states.size();
  std::vector<std::vector<State>> tables(alphabet->size());
  std::vector<std::vector<bool>> defined(alphabet->size());
  for (std::size_t s = 0; s < alphabet->size(); ++s) {
    const std::size_t size = detail::checked_pow(n, (*alphabet)[s].rank);
    tables[s].assign(size, 0);
    defined[s].assign(size, false);
  }
  for (const auto& r : rules) {
    auto sym = alphabet->find(r.sym);
    if (!sym) throw FormatError(source, r.line, r.sym, "unknown symbol");
    if (r.args.size() != (*alphabet)[*sym].rank) {
      throw FormatError(source, r.line, r.sym,
                        "rule has " + std::to_string(r.args.size()) + " arguments, symbol has rank " +
                            std::to_string((*alphabet)[*sym].rank));
    }
    std::size_t idx = 0;
    for (const auto& q : r.args) idx = idx * n + lookup(q, r.line);
    const State target = lookup(r.target, r.line);
    if (defined[*sym][idx] && tables[*sym][idx] != target) {
      throw FormatError(source, r.line, r.sym, "conflicting transition (automaton must be deterministic)");
    }
    tables[*sym][idx] = target;
    defined[*sym][idx] = true;
  }
  std::vector<Transf> trans;
  for (std::size_t s = 0; s < alphabet->size(); ++s) {
    for (std::size_t idx = 0; idx < defined[s].size(); ++idx) {
      if (!defined[s][idx]) {
        std::string args;
        std::size_t rest = idx;
        std::vector<std::string> parts((*alphabet)[s].rank);
        for (std::size_t i = parts.size(); i-- > 0;) {
          parts[i] = states[rest % n];
          rest /= n;
        }
        for (std::size_t i = 0; i < parts.size(); ++i) args += (i ? "," : "") + parts[i];
        throw FormatError(source, lineno, (*alphabet)[s].name + "(" + args + ")",
                          "transition table is not total");
      }
    }
    trans.emplace_back(n, (*alphabet)[s].rank, std::move(tables[s]));
  }
  return Dfta(std::move(alphabet), std::move(states), std::move(trans), std::move(finals));
}

inline Dfta load_dfta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, "", "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dfta(buf.str(), path);
}

inline std::string format_dfta(const Dfta& a) {
  std::string out = "alphabet:";
  for (const auto& s : a.alphabet()->symbols()) out += " " + s.name + "/" + std::to_string(s.rank);
  out += "\nstates:";
  for (const auto& q : a.states()) out += " " + q;
  out += "\nfinal:";
  for (std::size_t q = 0; q < a.num_states(); ++q) {
    if (a.is_final(static_cast<State>(q))) out += " " + a.states()[q];
  }
  out += "\n";
  const std::size_t n = a.num_states();
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
    const auto& t = a.transition(s);
    for (std::size_t idx = 0; idx < t.table().size(); ++idx) {
      std::vector<std::string> parts(t.rank());
      std::size_t rest = idx;
      for (std::size_t i = parts.size(); i-- > 0;) {
        parts[i] = a.states()[rest % n];
        rest /= n;
      }
      out += "trans: " + (*a.alphabet())[s].name + "(";
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
      out += ") -> " + a.states()[t.table()[idx]] + "\n";
    }
  }
  return out;
}

}  // namespace treeclone
