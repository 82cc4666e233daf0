#pragma once

// Ranked alphabets, trees with a variable frontier v1..vn, and the
// substitution composition that makes finite trees a free preclone.
//
// A tree of rank n has exactly n variable leaves which, read left to right,
// are v1, v2, ..., vn. Composition f.(g1 + ... + gn) plugs the root of gi in
// place of vi and renumbers the variables of the gi consecutively.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace treeclone {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class AlphabetMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error("at offset " + std::to_string(position) + ": " + message),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' ||
         c == '.';
}

// Reserved variable pattern: v[1-9][0-9]*
inline std::optional<std::size_t> variable_index(std::string_view token) {
  if (token.size() < 2 || token[0] != 'v' || token[1] < '1' || token[1] > '9') {
    return std::nullopt;
  }
  std::size_t value = 0;
  for (char c : token.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    if (value > (SIZE_MAX - 9) / 10) return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

}  // namespace detail

struct RankedSymbol {
  std::string name;
  std::size_t rank = 0;

  friend bool operator==(const RankedSymbol&, const RankedSymbol&) = default;
};

class RankedAlphabet {
 public:
  RankedAlphabet() = default;

  explicit RankedAlphabet(std::vector<RankedSymbol> symbols) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      const auto& name = symbols_[i].name;
      if (name.empty()) throw Error("symbol name must be nonempty");
      if (!std::all_of(name.begin(), name.end(), detail::is_name_char)) {
        throw Error("symbol name '" + name + "' contains characters outside [A-Za-z0-9_'.]");
      }
      if (detail::variable_index(name)) {
        throw Error("symbol name '" + name + "' collides with the variable pattern v<n>");
      }
      if (!by_name_.emplace(name, i).second) {
        throw Error("duplicate symbol name '" + name + "'");
      }
    }
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  const RankedSymbol& operator[](std::size_t i) const { return symbols_.at(i); }
  const std::vector<RankedSymbol>& symbols() const noexcept { return symbols_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t max_rank() const {
    std::size_t r = 0;
    for (const auto& s : symbols_) r = std::max(r, s.rank);
    return r;
  }

  bool has_rank(std::size_t r) const {
    return std::any_of(symbols_.begin(), symbols_.end(),
                       [r](const RankedSymbol& s) { return s.rank == r; });
  }

  friend bool operator==(const RankedAlphabet& a, const RankedAlphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<RankedSymbol> symbols_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

using AlphabetPtr = std::shared_ptr<const RankedAlphabet>;

inline AlphabetPtr make_alphabet(std::vector<RankedSymbol> symbols) {
  return std::make_shared<const RankedAlphabet>(std::move(symbols));
}

inline bool same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b) {
  return a == b || (a && b && *a == *b);
}

// A node is either a symbol (label >= 0, index into the alphabet) or a
// variable leaf (label < 0, variable v_{-label}).
struct TreeNode {
  std::int32_t label = -1;
  std::vector<TreeNode> children;

  bool is_variable() const noexcept { return label < 0; }
  std::size_t variable() const noexcept { return static_cast<std::size_t>(-label); }
  std::size_t symbol() const noexcept { return static_cast<std::size_t>(label); }

  static TreeNode var(std::size_t i) { return TreeNode{-static_cast<std::int32_t>(i), {}}; }
  static TreeNode sym(std::size_t s, std::vector<TreeNode> children = {}) {
    return TreeNode{static_cast<std::int32_t>(s), std::move(children)};
  }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class Tree {
 public:
  // Validates arities and the frontier; the rank is the number of variables.
  Tree(AlphabetPtr alphabet, TreeNode root) : alphabet_(std::move(alphabet)), root_(std::move(root)) {
    if (!alphabet_) throw Error("tree requires an alphabet");
    std::size_t next = 1;
    check(root_, next);
    rank_ = next - 1;
  }

  // The unit 1 = v1.
  static Tree unit(AlphabetPtr alphabet) { return Tree(std::move(alphabet), TreeNode::var(1)); }

  // sigma(v1, ..., vn)
  static Tree letter(AlphabetPtr alphabet, std::size_t symbol) {
    const std::size_t r = (*alphabet)[symbol].rank;
    std::vector<TreeNode> kids;
    kids.reserve(r);
    for (std::size_t i = 1; i <= r; ++i) kids.push_back(TreeNode::var(i));
    return Tree(std::move(alphabet), TreeNode::sym(symbol, std::move(kids)));
  }

  std::size_t rank() const noexcept { return rank_; }
  const TreeNode& root() const noexcept { return root_; }
  const AlphabetPtr& alphabet() const noexcept { return alphabet_; }

  std::size_t size() const { return count(root_); }
  std::size_t depth() const { return height(root_); }

  friend bool operator==(const Tree& a, const Tree& b) {
    return a.rank_ == b.rank_ && a.root_ == b.root_ && same_alphabet(a.alphabet_, b.alphabet_);
  }

 private:
  void check(const TreeNode& n, std::size_t& next) const {
    if (n.is_variable()) {
      if (n.variable() != next) {
        throw Error("variable v" + std::to_string(n.variable()) + " found where v" +
                    std::to_string(next) + " was expected on the frontier");
      }
      ++next;
      return;
    }
    if (n.symbol() >= alphabet_->size()) throw Error("symbol index out of range");
    const auto& s = (*alphabet_)[n.symbol()];
    if (n.children.size() != s.rank) {
      throw ArityError("symbol '" + s.name + "' has rank " + std::to_string(s.rank) + " but " +
                       std::to_string(n.children.size()) + " children");
    }
    for (const auto& c : n.children) check(c, next);
  }

  static std::size_t count(const TreeNode& n) {
    std::size_t c = 1;
    for (const auto& k : n.children) c += count(k);
    return c;
  }
  static std::size_t height(const TreeNode& n) {
    std::size_t h = 0;
    for (const auto& k : n.children) h = std::max(h, height(k));
    return h + 1;
  }

  AlphabetPtr alphabet_;
  TreeNode root_;
  std::size_t rank_ = 0;
};

// Formal sum g1 + ... + gn of trees.
class TreeTuple {
 public:
  TreeTuple() = default;
  explicit TreeTuple(std::vector<Tree> components) : components_(std::move(components)) {
    for (const auto& c : components_) total_rank_ += c.rank();
  }

  std::size_t size() const noexcept { return components_.size(); }
  std::size_t total_rank() const noexcept { return total_rank_; }
  const Tree& operator[](std::size_t i) const { return components_.at(i); }
  const std::vector<Tree>& components() const noexcept { return components_; }

  // 1 + ... + 1 (n times)
  static TreeTuple units(const AlphabetPtr& alphabet, std::size_t n) {
    return TreeTuple(std::vector<Tree>(n, Tree::unit(alphabet)));
  }

 private:
  std::vector<Tree> components_;
  std::size_t total_rank_ = 0;
};

namespace detail {

inline TreeNode renumbered(const TreeNode& n, std::size_t offset) {
  if (n.is_variable()) return TreeNode::var(n.variable() + offset);
  TreeNode out{n.label, {}};
  out.children.reserve(n.children.size());
  for (const auto& c : n.children) out.children.push_back(renumbered(c, offset));
  return out;
}

inline TreeNode substitute(const TreeNode& n, const TreeTuple& gs,
                           std::span<const std::size_t> offsets) {
  if (n.is_variable()) {
    const std::size_t i = n.variable() - 1;
    return renumbered(gs[i].root(), offsets[i]);
  }
  TreeNode out{n.label, {}};
  out.children.reserve(n.children.size());
  for (const auto& c : n.children) out.children.push_back(substitute(c, gs, offsets));
  return out;
}

}  // namespace detail

inline Tree compose_trees(const Tree& f, const TreeTuple& gs) {
  if (gs.size() != f.rank()) {
    throw ArityError("composition of a rank-" + std::to_string(f.rank()) + " tree with " +
                     std::to_string(gs.size()) + " components");
  }
  for (const auto& g : gs.components()) {
    if (!same_alphabet(f.alphabet(), g.alphabet())) {
      throw AlphabetMismatch("trees in a composition use different alphabets");
    }
  }
  std::vector<std::size_t> offsets(gs.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    offsets[i] = acc;
    acc += gs[i].rank();
  }
  return Tree(f.alphabet(), detail::substitute(f.root(), gs, offsets));
}

// ---------------------------------------------------------------------------
// Text form:  tree := symbol | symbol "(" tree ("," tree)* ")" | var

namespace detail {

class TermParser {
 public:
  TermParser(std::string_view text, const AlphabetPtr& alphabet) : text_(text), alphabet_(alphabet) {}

  Tree parse() {
    TreeNode root = node();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, "unexpected trailing input");
    check_frontier();
    return Tree(alphabet_, std::move(root));
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  TreeNode node() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (start == pos_) {
      if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
      throw ParseError(pos_, std::string("unexpected character '") + text_[pos_] + "'");
    }
    const std::string_view token = text_.substr(start, pos_ - start);

    if (auto v = variable_index(token)) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        throw ParseError(pos_, "variable '" + std::string(token) + "' cannot take arguments");
      }
      vars_.emplace_back(*v, start);
      return TreeNode::var(*v);
    }

    auto sym = alphabet_->find(token);
    if (!sym) throw ParseError(start, "unknown symbol '" + std::string(token) + "'");
    const std::size_t rank = (*alphabet_)[*sym].rank;

    std::vector<TreeNode> kids;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
      } else {
        while (true) {
          kids.push_back(node());
          skip_ws();
          if (pos_ < text_.size() && text_[pos_] == ',') {
            ++pos_;
            continue;
          }
          if (pos_ < text_.size() && text_[pos_] == ')') {
            ++pos_;
            break;
          }
          throw ParseError(pos_, "expected ',' or ')'");
        }
      }
    }
    if (kids.size() != rank) {
      throw ParseError(start, "symbol '" + std::string(token) + "' has rank " +
                                  std::to_string(rank) + " but " + std::to_string(kids.size()) +
                                  " arguments were given");
    }
    return TreeNode::sym(*sym, std::move(kids));
  }

  void check_frontier() const {
    std::vector<bool> seen;
    for (const auto& [v, at] : vars_) {
      if (v >= seen.size()) seen.resize(v + 1, false);
      if (seen[v]) throw ParseError(at, "variable v" + std::to_string(v) + " occurs twice");
      seen[v] = true;
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i].first != i + 1) {
        const bool gap = std::none_of(vars_.begin(), vars_.end(),
                                      [i](const auto& p) { return p.first == i + 1; });
        if (gap) {
          throw ParseError(vars_[i].second, "variable v" + std::to_string(i + 1) +
                                                " is missing from the frontier");
        }
        throw ParseError(vars_[i].second, "variable v" + std::to_string(vars_[i].first) +
                                              " is out of order (frontier must read v1..vn)");
      }
    }
  }

  std::string_view text_;
  const AlphabetPtr& alphabet_;
  std::size_t pos_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> vars_;  // (index, offset)
};

inline void print_node(const TreeNode& n, const RankedAlphabet& a, std::string& out) {
  if (n.is_variable()) {
    out += 'v';
    out += std::to_string(n.variable());
    return;
  }
  out += a[n.symbol()].name;
  if (n.children.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) out += ',';
    print_node(n.children[i], a, out);
  }
  out += ')';
}

}  // namespace detail

inline Tree parse_tree(std::string_view text, const AlphabetPtr& alphabet) {
  return detail::TermParser(text, alphabet).parse();
}

inline std::string print_tree(const Tree& t) {
  std::string out;
  detail::print_node(t.root(), *t.alphabet(), out);
  return out;
}

}  // namespace treeclone
