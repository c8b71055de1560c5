#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "parsetalk/error.hpp"

namespace testsupport {

std::string fixture_path(const std::string& file) { return std::string(FIXTURE_DIR) + "/" + file; }

const GrammarBundle& fixture(bool ambiguous) {
  static const GrammarBundle plain = load_bundle(
      {fixture_path("classes.json"), fixture_path("concepts.json"), fixture_path("lexicon.json")});
  static const GrammarBundle amb = load_bundle(
      {fixture_path("classes.json"), fixture_path("concepts.json"), fixture_path("lexicon-ambiguous.json")});
  return ambiguous ? amb : plain;
}

std::vector<std::string> split(const std::string& sentence) {
  std::istringstream is(sentence);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

std::vector<FixtureSentence> fixture_sentences() {
  std::ifstream in(fixture_path("sentences.json"));
  const auto j = nlohmann::json::parse(in);
  std::vector<FixtureSentence> out;
  for (const auto& e : j) out.push_back({e.at("lexicon").get<std::string>(), e.at("sentence").get<std::string>()});
  return out;
}

// ---- random structures ------------------------------------------------------

std::string random_fs_text(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> labels{"a", "b", "c", "d"};
  static const std::vector<std::string> atoms{"x", "y", "z"};
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<int> closed;
  int next_tag = 1;

  std::function<std::string(int)> term = [&](int d) -> std::string {
    const double r = coin(rng);
    if (!closed.empty() && r < 0.12) {
      return "<" + std::to_string(closed[rng() % closed.size()]) + ">";
    }
    std::string prefix;
    int tag = 0;
    if (coin(rng) < 0.15) {
      tag = next_tag++;
      prefix = "<" + std::to_string(tag) + ">=";
    }
    std::string body;
    const double k = coin(rng);
    if (d == 0 || k < 0.3) {
      body = atoms[rng() % atoms.size()];
    } else if (k < 0.4) {
      body = "{x, y}";
    } else if (k < 0.45) {
      body = "[]";
    } else {
      std::vector<std::string> ls = labels;
      std::shuffle(ls.begin(), ls.end(), rng);
      const int n = 1 + static_cast<int>(rng() % 3);
      body = "[";
      for (int i = 0; i < n; ++i) body += (i ? ", " : "") + ls[i] + ": " + term(d - 1);
      body += "]";
    }
    if (tag) closed.push_back(tag);
    return prefix + body;
  };
  std::string out = "[";
  std::vector<std::string> ls = labels;
  std::shuffle(ls.begin(), ls.end(), rng);
  const int n = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) out += (i ? ", " : "") + ls[i] + ": " + term(depth - 1);
  return out + "]";
}

FeatureStructure random_fs(std::mt19937_64& rng, int depth) {
  while (true) {
    try {
      return parse_fs(random_fs_text(rng, depth));
    } catch (const SyntaxError&) {
    }
  }
}

// ---- path model ---------------------------------------------------------------

namespace {

PathModel canonical(const std::map<Path, int>& raw, const std::map<int, std::set<std::string>>& syms) {
  PathModel m;
  std::map<int, int> renumber;
  for (const auto& [p, c] : raw) {
    auto [it, fresh] = renumber.emplace(c, static_cast<int>(renumber.size()));
    m.cls[p] = it->second;
    (void)fresh;
  }
  for (const auto& [c, s] : syms) {
    if (renumber.contains(c)) m.symbols[renumber.at(c)] = s;
  }
  return m;
}

PathModel bottom_model() {
  PathModel m;
  m.bottom = true;
  return m;
}

bool is_prefix(const Path& a, const Path& b) {
  return a.size() < b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

PathModel model_of(const FeatureStructure& fs) {
  if (fs.is_bottom()) return bottom_model();
  const auto& nodes = fs.nodes();
  std::map<Path, int> raw;
  std::map<int, std::set<std::string>> syms;
  std::function<void(int, Path&)> walk = [&](int id, Path& p) {
    raw[p] = id;
    const auto& n = nodes[id];
    if (n.kind == FeatureStructure::Kind::Atom || n.kind == FeatureStructure::Kind::Disjunction) {
      syms[id] = std::set<std::string>(n.symbols.begin(), n.symbols.end());
    }
    for (const auto& [label, child] : n.entries) {
      p.push_back(label);
      walk(child, p);
      p.pop_back();
    }
  };
  Path root;
  walk(fs.root(), root);
  return canonical(raw, syms);
}

PathModel model_unify(const PathModel& a, const PathModel& b) {
  if (a.bottom || b.bottom) return bottom_model();
  std::vector<Path> paths;
  std::map<Path, int> index;
  auto add = [&](const Path& p) {
    auto [it, fresh] = index.emplace(p, static_cast<int>(paths.size()));
    if (fresh) paths.push_back(p);
    return it->second;
  };
  std::vector<int> uf;
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  auto grow = [&] {
    while (uf.size() < paths.size()) uf.push_back(static_cast<int>(uf.size()));
  };
  auto join = [&](int x, int y) {
    grow();
    x = find(x);
    y = find(y);
    if (x == y) return false;
    uf[std::max(x, y)] = std::min(x, y);
    return true;
  };
  std::map<Path, std::set<std::string>> constraints;
  for (const PathModel* m : {&a, &b}) {
    std::map<int, int> first;
    for (const auto& [p, c] : m->cls) {
      const int id = add(p);
      grow();
      auto [it, fresh] = first.emplace(c, id);
      if (!fresh) join(it->second, id);
      auto s = m->symbols.find(c);
      if (s == m->symbols.end()) continue;
      auto [slot, fresh_path] = constraints.emplace(p, s->second);
      if (!fresh_path) {
        std::set<std::string> both;
        std::set_intersection(slot->second.begin(), slot->second.end(), s->second.begin(), s->second.end(),
                              std::inserter(both, both.begin()));
        slot->second = both;
      }
    }
  }
  grow();

  bool changed = true;
  while (changed) {
    changed = false;
    std::map<int, std::vector<int>> members;
    for (int i = 0; i < static_cast<int>(paths.size()); ++i) members[find(i)].push_back(i);
    for (const auto& [_, ms] : members) {
      for (std::size_t i = 0; i < ms.size(); ++i) {
        for (std::size_t j = 0; j < ms.size(); ++j) {
          if (i != j && is_prefix(paths[ms[i]], paths[ms[j]])) return bottom_model();  // cycle
        }
      }
    }
    // Congruence: shared nodes have shared children.
    std::map<int, std::set<std::string>> child_labels;
    for (const auto& p : paths) {
      if (!p.empty()) child_labels[find(index.at(Path(p.begin(), p.end() - 1)))].insert(p.back());
    }
    for (const auto& [root, labels] : child_labels) {
      for (const auto& l : labels) {
        int rep = -1;
        for (int m : members[root]) {
          Path q = paths[m];
          q.push_back(l);
          const std::size_t before = paths.size();
          const int id = add(q);
          grow();
          if (paths.size() != before) changed = true;
          if (rep < 0) {
            rep = id;
          } else if (join(rep, id)) {
            changed = true;
          }
        }
      }
    }
    if (paths.size() > 20000) return bottom_model();
  }

  std::map<int, std::set<std::string>> syms;
  std::set<int> has_children;
  for (const auto& p : paths) {
    if (!p.empty()) has_children.insert(find(index.at(Path(p.begin(), p.end() - 1))));
  }
  for (const auto& [p, s] : constraints) {
    const int c = find(index.at(p));
    auto it = syms.find(c);
    if (it == syms.end()) {
      syms[c] = s;
    } else {
      std::set<std::string> both;
      std::set_intersection(it->second.begin(), it->second.end(), s.begin(), s.end(),
                            std::inserter(both, both.begin()));
      it->second = both;
    }
  }
  for (const auto& [c, s] : syms) {
    if (s.empty() || has_children.contains(c)) return bottom_model();
  }
  std::map<Path, int> raw;
  for (int i = 0; i < static_cast<int>(paths.size()); ++i) raw[paths[i]] = find(i);
  return canonical(raw, syms);
}

PathModel model_expand(const std::string& label, const PathModel& m) {
  if (m.bottom) return m;
  std::map<Path, int> raw;
  std::map<int, std::set<std::string>> syms;
  raw[Path{}] = -1;
  for (const auto& [p, c] : m.cls) {
    Path q{label};
    q.insert(q.end(), p.begin(), p.end());
    raw[q] = c;
  }
  for (const auto& [c, s] : m.symbols) syms[c] = s;
  return canonical(raw, syms);
}

PathModel model_extract(const PathModel& m, const std::string& label) {
  if (m.bottom) return m;
  std::map<Path, int> raw;
  for (const auto& [p, c] : m.cls) {
    if (!p.empty() && p.front() == label) raw[Path(p.begin() + 1, p.end())] = c;
  }
  if (raw.empty()) return bottom_model();
  std::map<int, std::set<std::string>> syms;
  for (const auto& [c, s] : m.symbols) syms[c] = s;
  return canonical(raw, syms);
}

// ---- concepts -------------------------------------------------------------------

RandomConcepts random_concepts(std::mt19937_64& rng, int max_concepts, int max_roles, int max_cic) {
  RandomConcepts rc;
  const int n = 1 + static_cast<int>(rng() % max_concepts);
  const int nr = 1 + static_cast<int>(rng() % max_roles);
  const int nc = static_cast<int>(rng() % (max_cic + 1));
  for (int i = 0; i < n; ++i) {
    const std::string name = "C" + std::to_string(i);
    std::vector<std::string> ps;
    if (i > 0) {
      const int k = static_cast<int>(rng() % 3);
      for (int j = 0; j < k; ++j) {
        const std::string p = "C" + std::to_string(rng() % i);
        if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
      }
    }
    rc.concepts.push_back(name);
    rc.parents[name] = ps;
    rc.cs.declare_concept(name, ps);
  }
  for (int i = 0; i < nr; ++i) {
    rc.roles.push_back("r" + std::to_string(i));
    rc.cs.declare_role(rc.roles.back());
  }
  for (int i = 0; i < nc; ++i) {
    CicTriple t{rc.concepts[rng() % n], rc.roles[rng() % nr], rc.concepts[rng() % n]};
    rc.cic.push_back(t);
    rc.cs.add_cic(t);
  }
  return rc;
}

std::set<std::tuple<std::string, std::string, std::string>> brute_permit(const RandomConcepts& rc) {
  // up[x] = every concept reachable from x via parents, x included.
  std::map<std::string, std::set<std::string>> up;
  std::function<void(const std::string&, std::set<std::string>&)> climb = [&](const std::string& c,
                                                                                std::set<std::string>& acc) {
    if (!acc.insert(c).second) return;
    for (const auto& p : rc.parents.at(c)) climb(p, acc);
  };
  for (const auto& c : rc.concepts) climb(c, up[c]);
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& t : rc.cic) {
    for (const auto& x : rc.concepts) {
      if (!up[x].contains(t.concept_from)) continue;
      for (const auto& y : rc.concepts) {
        if (up[y].contains(t.concept_to)) out.insert({x, t.role, y});
      }
    }
  }
  return out;
}

bool literal_satisfies(const CandidateView& mod, const Valency& val, const CandidateView& head,
                       const SatisfiesWorld& w) {
  // modifier.class isa_C* valency.class
  bool cls = false;
  for (std::string c = mod.word_class; !c.empty(); c = w.class_parent.at(c)) {
    if (c == val.word_class) cls = true;
  }
  // ((valency.name : modifier.features\self) unify valency.features) unify head.features != bottom
  const auto feats = model_unify(
      model_unify(model_expand(val.name, model_extract(model_of(mod.features), "self")), model_of(val.features)),
      model_of(head.features));
  // exists role in domain: (head.concept, role, modifier.concept) in permit
  const auto permit = brute_permit(w.concepts);
  bool conceptual = false;
  for (const auto& r : val.domain) {
    if (permit.contains({head.concept_name, r, mod.concept_name})) conceptual = true;
  }
  // exists tuple, exists k: d_k = name, all before occupied earlier, all after free or later
  bool order = false;
  for (const auto& t : head.order) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] != val.name) continue;
      bool ok = true;
      for (std::size_t i = 0; i < k; ++i) ok = ok && head.occurs.at(t[i]) < mod.position;
      for (std::size_t i = k + 1; i < t.size(); ++i) {
        ok = ok && (head.occurs.at(t[i]) == 0 || head.occurs.at(t[i]) > mod.position);
      }
      order = order || ok;
    }
  }
  return cls && !feats.bottom && conceptual && order;
}

SatisfiesCase random_satisfies_case(std::mt19937_64& rng) {
  static const std::vector<std::string> names{"a", "b", "c"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };

  SatisfiesCase c;
  std::vector<std::string> classes{"K0"};
  c.world.class_parent["K0"] = "";
  const int n = 2 + static_cast<int>(rng() % 6);
  for (int i = 1; i < n; ++i) {
    const std::string name = "K" + std::to_string(i);
    const std::string p = pick(classes);
    c.classes.declare(name, p);
    c.world.class_parent[name] = p;
    classes.push_back(name);
  }
  c.world.concepts = random_concepts(rng, 8, 3, 12);
  const auto& rc = c.world.concepts;

  c.val.name = pick(names);
  c.val.word_class = pick(classes);
  c.val.features = rng() % 2 ? expand(c.val.name, random_fs(rng, 2)) : FeatureStructure::top();
  for (const auto& r : rc.roles) {
    if (rng() % 2) c.val.domain.insert(r);
  }

  c.mod.word_class = pick(classes);
  c.mod.features = rng() % 8 ? expand("self", random_fs(rng, 2)) : random_fs(rng, 2);
  c.mod.concept_name = pick(rc.concepts);
  c.mod.position = 1 + static_cast<int>(rng() % 7);

  c.head.features = random_fs(rng, 3);
  c.head.concept_name = pick(rc.concepts);
  c.head.position = 1 + static_cast<int>(rng() % 7);
  const int tuples = static_cast<int>(rng() % 3);
  for (int k = 0; k < tuples; ++k) {
    OrderTuple t{"self"};
    for (const auto& nm : names) {
      if (rng() % 3) t.push_back(nm);
    }
    std::shuffle(t.begin(), t.end(), rng);
    c.head.order.push_back(t);
  }
  c.head.occurs["self"] = c.head.position;
  for (const auto& nm : names) c.head.occurs[nm] = rng() % 2 ? 0 : 1 + static_cast<int>(rng() % 7);
  return c;
}

ParseRun run_parse(const GrammarBundle& g, const std::vector<std::string>& tokens, std::uint64_t seed, Mode mode,
                   int max_readings) {
  ParseOptions o;
  o.run.seed = seed;
  o.run.mode = mode;
  o.max_readings = max_readings;
  ParseSession s(g, o);
  ParseRun r;
  r.result = s.parse(tokens);
  r.trace = s.runtime().trace();
  r.tasks = s.runtime().tasks();
  r.faults = s.runtime().faults();
  return r;
}

}  // namespace testsupport
