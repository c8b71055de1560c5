#pragma once

// Word-class taxonomy (single-parent tree under a root class) and the
// conceptual system: concept taxonomy (multi-parent DAG), role names and
// conceptual integrity constraints with the derived permit relation.

#include <map>
#include <set>
#include <string>
#include <vector>

namespace parsetalk {

class ClassHierarchy {
 public:
  static constexpr const char* kDefaultRoot = "WordActor";

  explicit ClassHierarchy(std::string root = kDefaultRoot);

  // Declares a class; an empty parent means a top-level class that hangs
  // directly off nothing (only valid for the root).
  void declare(const std::string& name, const std::string& parent);

  bool contains(const std::string& name) const { return parent_.count(name) > 0; }
  const std::string& root() const { return root_; }
  const std::map<std::string, std::string>& parents() const { return parent_; }

  // sub isa_C* super. Throws DeclarationError for unknown names.
  bool subsumes(const std::string& sub, const std::string& super) const;

  // Chain from name up to the root (inclusive, nearest first).
  std::vector<std::string> ancestors(const std::string& name) const;

 private:
  std::string root_;
  std::map<std::string, std::string> parent_;  // root maps to ""
};

inline bool subsumes_class(const ClassHierarchy& h, const std::string& sub, const std::string& super) {
  return h.subsumes(sub, super);
}

struct CicTriple {
  std::string concept_from;
  std::string role;
  std::string concept_to;
  auto operator<=>(const CicTriple&) const = default;
};

class ConceptSystem {
 public:
  void declare_concept(const std::string& name, std::vector<std::string> parents = {});
  void declare_role(const std::string& role);
  void add_cic(CicTriple t);

  bool has_concept(const std::string& name) const { return parents_.count(name) > 0; }
  bool has_role(const std::string& role) const { return roles_.count(role) > 0; }

  const std::map<std::string, std::vector<std::string>>& concepts() const { return parents_; }
  const std::set<std::string>& roles() const { return roles_; }
  const std::set<CicTriple>& cic() const { return cic_; }

  // Reflexive-transitive isa_F closure of name.
  std::set<std::string> ancestors(const std::string& name) const;

  // (x, r, y) in permit. Throws DeclarationError for unknown names.
  bool permit(const std::string& x, const std::string& role, const std::string& y) const;

  std::set<std::string> roles_permitting(const std::string& head_concept, const std::string& mod_concept,
                                         const std::set<std::string>& domain) const;

 private:
  void require_concept(const std::string& name) const;
  void require_role(const std::string& role) const;

  std::map<std::string, std::vector<std::string>> parents_;
  std::set<std::string> roles_;
  std::set<CicTriple> cic_;
};

inline bool permit(const ConceptSystem& cs, const std::string& x, const std::string& r, const std::string& y) {
  return cs.permit(x, r, y);
}

// One message per violated invariant; empty when consistent.
std::vector<std::string> validate_hierarchy(const ClassHierarchy& h);
std::vector<std::string> validate_hierarchy(const ConceptSystem& cs);

}  // namespace parsetalk
