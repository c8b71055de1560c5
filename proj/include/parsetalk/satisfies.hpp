#pragma once

// Admissibility of a (modifier, valency, head) triple: categorial,
// morphosyntactic, conceptual and ordering clauses, each exposed on its own.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "parsetalk/features.hpp"
#include "parsetalk/grammar.hpp"
#include "parsetalk/hierarchies.hpp"

namespace parsetalk {

// One type for both roles. A modifier view needs class, features, concept
// and position; a head view needs features, concept, order and occurs.
struct CandidateView {
  std::string word_class;
  FeatureStructure features = FeatureStructure::top();
  std::string concept_name;
  int position = 0;
  std::vector<OrderTuple> order;
  OccursMap occurs;
};

enum class Clause { Class, Features, Concept, Order };

std::string_view clause_name(Clause c);

struct SatisfiesResult {
  bool holds = false;
  FeatureStructure head_features;  // head's features after attachment; meaningful only when holds
  std::set<std::string> roles;     // permitting roles
  std::optional<Clause> failed_clause;
};

bool check_class(const CandidateView& mod, const Valency& val, const ClassHierarchy& h);

// (([val.name : mod.features\self] unify val.features) unify head.features)
FeatureStructure check_features(const CandidateView& mod, const Valency& val, const CandidateView& head);

std::set<std::string> check_concept(const CandidateView& mod, const Valency& val, const CandidateView& head,
                                    const ConceptSystem& cs);

// Literal evaluation of the ordering clause over head.order. Throws Error
// when a tuple names a dependency that has no occurs entry.
bool check_order(const CandidateView& mod, const Valency& val, const CandidateView& head);

// Clauses are evaluated class, features, concept, order; the first failing
// one is reported.
SatisfiesResult satisfies(const CandidateView& mod, const Valency& val, const CandidateView& head,
                          const ClassHierarchy& h, const ConceptSystem& cs);

}  // namespace parsetalk
