#include "parsetalk/satisfies.hpp"

#include "parsetalk/error.hpp"

namespace parsetalk {

std::string_view clause_name(Clause c) {
  switch (c) {
    case Clause::Class:
      return "class";
    case Clause::Features:
      return "features";
    case Clause::Concept:
      return "concept";
    case Clause::Order:
      return "order";
  }
  return "?";
}

bool check_class(const CandidateView& mod, const Valency& val, const ClassHierarchy& h) {
  return h.subsumes(mod.word_class, val.word_class);
}

FeatureStructure check_features(const CandidateView& mod, const Valency& val, const CandidateView& head) {
  return unify(unify(expand(val.name, extract(mod.features, kSelf)), val.features), head.features);
}

std::set<std::string> check_concept(const CandidateView& mod, const Valency& val, const CandidateView& head,
                                    const ConceptSystem& cs) {
  return cs.roles_permitting(head.concept_name, mod.concept_name, val.domain);
}

bool check_order(const CandidateView& mod, const Valency& val, const CandidateView& head) {
  auto occurs = [&](const std::string& name) {
    auto it = head.occurs.find(name);
    if (it == head.occurs.end()) throw Error("order tuple names '" + name + "' which has no occurs entry");
    return it->second;
  };
  for (const auto& tuple : head.order) {
    for (std::size_t k = 0; k < tuple.size(); ++k) {
      if (tuple[k] != val.name) continue;
      bool ok = true;
      for (std::size_t i = 0; i < k && ok; ++i) ok = occurs(tuple[i]) < mod.position;
      for (std::size_t i = k + 1; i < tuple.size() && ok; ++i) {
        const int p = occurs(tuple[i]);
        ok = p == 0 || p > mod.position;
      }
      if (ok) return true;
    }
  }
  return false;
}

SatisfiesResult satisfies(const CandidateView& mod, const Valency& val, const CandidateView& head,
                          const ClassHierarchy& h, const ConceptSystem& cs) {
  SatisfiesResult r;
  if (!check_class(mod, val, h)) {
    r.failed_clause = Clause::Class;
    return r;
  }
  r.head_features = check_features(mod, val, head);
  if (r.head_features.is_bottom()) {
    r.failed_clause = Clause::Features;
    return r;
  }
  r.roles = check_concept(mod, val, head, cs);
  if (r.roles.empty()) {
    r.failed_clause = Clause::Concept;
    return r;
  }
  if (!check_order(mod, val, head)) {
    r.failed_clause = Clause::Order;
    return r;
  }
  r.holds = true;
  return r;
}

}  // namespace parsetalk
