#include "parsetalk/hierarchies.hpp"

#include <algorithm>
#include <deque>

#include "parsetalk/error.hpp"

namespace parsetalk {

ClassHierarchy::ClassHierarchy(std::string root) : root_(std::move(root)) { parent_[root_] = ""; }

void ClassHierarchy::declare(const std::string& name, const std::string& parent) {
  if (name == root_) return;
  parent_[name] = parent.empty() ? root_ : parent;
}

std::vector<std::string> ClassHierarchy::ancestors(const std::string& name) const {
  if (!contains(name)) throw DeclarationError("unknown word class '" + name + "'");
  std::vector<std::string> chain;
  std::string cur = name;
  // Bounded walk; validate_hierarchy reports cycles separately.
  for (std::size_t i = 0; i <= parent_.size() && !cur.empty(); ++i) {
    chain.push_back(cur);
    auto it = parent_.find(cur);
    if (it == parent_.end()) break;
    cur = it->second;
  }
  return chain;
}

bool ClassHierarchy::subsumes(const std::string& sub, const std::string& super) const {
  if (!contains(super)) throw DeclarationError("unknown word class '" + super + "'");
  for (const auto& c : ancestors(sub)) {
    if (c == super) return true;
  }
  return false;
}

void ConceptSystem::declare_concept(const std::string& name, std::vector<std::string> parents) {
  parents_[name] = std::move(parents);
}

void ConceptSystem::declare_role(const std::string& role) { roles_.insert(role); }

void ConceptSystem::add_cic(CicTriple t) { cic_.insert(std::move(t)); }

void ConceptSystem::require_concept(const std::string& name) const {
  if (!has_concept(name)) throw DeclarationError("unknown concept '" + name + "'");
}

void ConceptSystem::require_role(const std::string& role) const {
  if (!has_role(role)) throw DeclarationError("unknown role '" + role + "'");
}

std::set<std::string> ConceptSystem::ancestors(const std::string& name) const {
  require_concept(name);
  std::set<std::string> seen{name};
  std::deque<std::string> todo{name};
  while (!todo.empty()) {
    auto it = parents_.find(todo.front());
    todo.pop_front();
    if (it == parents_.end()) continue;
    for (const auto& p : it->second) {
      if (seen.insert(p).second) todo.push_back(p);
    }
  }
  return seen;
}

bool ConceptSystem::permit(const std::string& x, const std::string& role, const std::string& y) const {
  require_role(role);
  const auto up_x = ancestors(x);
  const auto up_y = ancestors(y);
  for (const auto& t : cic_) {
    if (t.role == role && up_x.count(t.concept_from) && up_y.count(t.concept_to)) return true;
  }
  return false;
}

std::set<std::string> ConceptSystem::roles_permitting(const std::string& head_concept,
                                                      const std::string& mod_concept,
                                                      const std::set<std::string>& domain) const {
  std::set<std::string> out;
  for (const auto& r : domain) {
    if (permit(head_concept, r, mod_concept)) out.insert(r);
  }
  return out;
}

std::vector<std::string> validate_hierarchy(const ClassHierarchy& h) {
  std::vector<std::string> diags;
  const auto& parents = h.parents();
  for (const auto& [name, parent] : parents) {
    if (name == h.root()) continue;
    if (!parents.count(parent)) {
      diags.push_back("class '" + name + "' has undeclared parent '" + parent + "'");
    }
  }
  // A class is on a cycle iff walking up from it revisits it.
  std::set<std::string> reported;
  for (const auto& [name, _] : parents) {
    std::set<std::string> path;
    std::string cur = name;
    while (!cur.empty() && parents.count(cur)) {
      if (!path.insert(cur).second) {
        if (!reported.count(cur)) {
          // Report each cycle once, keyed by its smallest member.
          std::string start = cur, smallest = cur, walk = parents.at(cur);
          while (walk != start) {
            smallest = std::min(smallest, walk);
            walk = parents.at(walk);
          }
          walk = start;
          do {
            reported.insert(walk);
            walk = parents.at(walk);
          } while (walk != start);
          diags.push_back("class hierarchy cycle through '" + smallest + "'");
        }
        break;
      }
      cur = parents.at(cur);
    }
  }
  return diags;
}

std::vector<std::string> validate_hierarchy(const ConceptSystem& cs) {
  std::vector<std::string> diags;
  const auto& concepts = cs.concepts();
  for (const auto& [name, parents] : concepts) {
    for (const auto& p : parents) {
      if (!concepts.count(p)) diags.push_back("concept '" + name + "' has undeclared parent '" + p + "'");
    }
  }
  // Cycle detection by DFS colouring.
  std::map<std::string, int> colour;
  std::set<std::string> on_cycle;
  std::vector<std::string> stack;
  auto dfs = [&](auto&& self, const std::string& c) -> void {
    colour[c] = 1;
    stack.push_back(c);
    for (const auto& p : concepts.at(c)) {
      if (!concepts.count(p)) continue;
      if (colour[p] == 1) {
        auto it = std::find(stack.begin(), stack.end(), p);
        std::string smallest = *std::min_element(it, stack.end());
        if (on_cycle.insert(smallest).second) {
          diags.push_back("concept hierarchy cycle through '" + smallest + "'");
        }
      } else if (colour[p] == 0) {
        self(self, p);
      }
    }
    stack.pop_back();
    colour[c] = 2;
  };
  for (const auto& [name, _] : concepts) {
    if (colour[name] == 0) dfs(dfs, name);
  }
  for (const auto& t : cs.cic()) {
    const std::string triple = "(" + t.concept_from + ", " + t.role + ", " + t.concept_to + ")";
    if (!concepts.count(t.concept_from)) diags.push_back("cic " + triple + " references undeclared concept '" + t.concept_from + "'");
    if (!cs.has_role(t.role)) diags.push_back("cic " + triple + " references undeclared role '" + t.role + "'");
    if (!concepts.count(t.concept_to)) diags.push_back("cic " + triple + " references undeclared concept '" + t.concept_to + "'");
  }
  return diags;
}

}  // namespace parsetalk
