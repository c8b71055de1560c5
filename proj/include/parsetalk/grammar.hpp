#pragma once

// Lexicalized grammar: valencies, ordering tuples, occurs maps, lexeme
// entries, and the bundle that ties them to the class and concept
// hierarchies. Bundles are read from three JSON documents (classes,
// concepts, lexicon); class-level valency/order defaults are inherited down
// the word-class tree and flattened into every entry at load time.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "parsetalk/features.hpp"
#include "parsetalk/hierarchies.hpp"

namespace parsetalk {

inline constexpr const char* kSelf = "self";

struct Valency {
  std::string name;
  std::string word_class;
  FeatureStructure features = FeatureStructure::top();
  std::set<std::string> domain;
};

// Admissible left-to-right sequence of dependency names, `self` included once.
using OrderTuple = std::vector<std::string>;

// Dependency name -> text position of its filler (0 = unoccupied); self -> own position.
using OccursMap = std::map<std::string, int>;

struct LexemeEntry {
  std::string form;
  std::string word_class;
  FeatureStructure features = FeatureStructure::top();
  std::string concept_name;
  std::vector<Valency> valencies;
  std::vector<OrderTuple> order;

  const Valency* valency(const std::string& name) const;
};

struct ClassDefaults {
  std::vector<Valency> valencies;
  std::vector<OrderTuple> order;
};

struct GrammarPaths {
  std::filesystem::path classes;
  std::filesystem::path concepts;
  std::filesystem::path lexicon;
};

class GrammarBundle {
 public:
  ClassHierarchy classes;
  ConceptSystem concepts;
  std::set<std::string> dependency_names;  // D, including self
  std::multimap<std::string, LexemeEntry> lexicon;
  std::map<std::string, ClassDefaults> class_defaults;

  // All entries for form, in declaration order; empty when unknown.
  std::vector<const LexemeEntry*> lookup(const std::string& form) const;
};

// Throws SyntaxError for malformed documents and LoadError (with every
// diagnostic found) for invariant violations.
GrammarBundle load_bundle(const GrammarPaths& paths);
GrammarBundle load_bundle_from_text(const std::string& classes_json, const std::string& concepts_json,
                                    const std::string& lexicon_json);

// Entry with every ancestor class's defaults merged in; entry-local
// valencies override inherited ones of the same name. Idempotent.
LexemeEntry flatten_entry(const GrammarBundle& bundle, const LexemeEntry& entry);

// Occurs map at spawn: self -> position, every other order name -> 0.
OccursMap initial_occurs(const LexemeEntry& entry, int position);

}  // namespace parsetalk
