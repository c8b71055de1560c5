#pragma once

// Feature structures with atomic terms, atomic value disjunction, complex
// terms and coreference (structure sharing), plus unification, expansion
// [l : u] and extraction u\l.
//
// A FeatureStructure is an immutable rooted DAG. Coreference is node
// sharing: two label paths reaching the same node denote the same value.
// Bottom is the inconsistent element; the empty complex term `[]` is the
// unconstrained element and unifies with anything.

#include <initializer_list>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parsetalk {

class FeatureStructure {
 public:
  enum class Kind { Top, Atom, Disjunction, Complex };

  struct Node {
    Kind kind = Kind::Top;
    // Atom: exactly one symbol. Disjunction: two or more, sorted.
    std::vector<std::string> symbols;
    // Complex: sorted by label, labels unique.
    std::vector<std::pair<std::string, int>> entries;
  };

  // Default-constructed value is Bottom.
  FeatureStructure() = default;

  static FeatureStructure bottom() { return {}; }
  static FeatureStructure top();
  static FeatureStructure atom(std::string symbol);
  // A singleton set collapses to the atom; the empty set is Bottom.
  static FeatureStructure disjunction(const std::set<std::string>& symbols);
  // Builds a complex term from independent sub-structures (no sharing
  // between them). Duplicate labels, or any Bottom entry, yield Bottom.
  static FeatureStructure complex(std::vector<std::pair<std::string, FeatureStructure>> entries);

  bool is_bottom() const { return nodes_ == nullptr; }
  Kind kind() const;  // precondition: !is_bottom()

  // Symbols of an atom or disjunction, labels of a complex term.
  const std::vector<std::string>& symbols() const;
  std::vector<std::string> labels() const;

  // Arena access for algorithms that walk the graph.
  const std::vector<Node>& nodes() const { return *nodes_; }
  int root() const { return root_; }

  // Internal: adopt a normalized arena.
  FeatureStructure(std::shared_ptr<const std::vector<Node>> nodes, int root)
      : nodes_(std::move(nodes)), root_(root) {}

 private:
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = 0;
};

using Fs = FeatureStructure;

// Most general structure subsumed by both; Bottom on any clash or cycle.
FeatureStructure unify(const FeatureStructure& a, const FeatureStructure& b);

// [label : u]; Bottom stays Bottom.
FeatureStructure expand(std::string_view label, const FeatureStructure& u);

// u\label: the top-level value of label in a complex term, Bottom otherwise.
FeatureStructure extract(const FeatureStructure& u, std::string_view label);

// Repeated extraction along a label path.
FeatureStructure extract_path(const FeatureStructure& u, std::initializer_list<std::string_view> path);

// Equal up to coreference-tag renaming and entry order; sharing matters.
bool equivalent(const FeatureStructure& a, const FeatureStructure& b);

// Notation:  FS := Atom | '{' Atom (',' Atom)* '}' | '[' Pair (',' Pair)* ']'
//                  | '<' INT '>' ('=' FS)?
// plus `[]` for the empty term and `⊥` for Bottom. Throws SyntaxError.
FeatureStructure parse_fs(std::string_view text);

// Deterministic: labels sorted, tags numbered in first-occurrence order.
std::string render_fs(const FeatureStructure& fs);

}  // namespace parsetalk
