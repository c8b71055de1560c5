#include "parsetalk/oracle.hpp"

#include <algorithm>
#include <functional>

#include "parsetalk/error.hpp"

namespace parsetalk {

std::vector<Arc> attachment_order(std::vector<Arc> arcs) {
  auto key = [](const Arc& a) {
    const int right = std::max(a.head, a.dep);
    // Left dependents of `right` first, nearest first; then its own head arc.
    const int phase = a.head == right ? 0 : 1;
    const int within = a.head == right ? -a.dep : 0;
    return std::tuple{right, phase, within};
  };
  std::stable_sort(arcs.begin(), arcs.end(), [&](const Arc& x, const Arc& y) { return key(x) < key(y); });
  return arcs;
}

bool order_admits(const std::vector<OrderTuple>& order, const OccursMap& occurs) {
  for (const auto& t : order) {
    int last = 0;
    bool ok = true;
    for (const auto& d : t) {
      auto it = occurs.find(d);
      const int p = it == occurs.end() ? 0 : it->second;
      if (p == 0) continue;
      if (p <= last) {
        ok = false;
        break;
      }
      last = p;
    }
    // Every occupied name must appear in the tuple.
    if (ok) {
      for (const auto& [name, p] : occurs) {
        if (p != 0 && std::find(t.begin(), t.end(), name) == t.end()) ok = false;
      }
    }
    if (ok) return true;
  }
  return false;
}

TreeCheck check_tree(const GrammarBundle& bundle, const std::vector<const LexemeEntry*>& entries,
                     const std::vector<Arc>& arcs) {
  TreeCheck out;
  const int n = static_cast<int>(entries.size());
  auto fail = [&](std::string why) {
    out.valid = false;
    out.reason = std::move(why);
    return out;
  };

  std::vector<int> head(n + 1, 0);
  std::map<int, std::set<std::string>> names;
  for (const auto& a : arcs) {
    if (a.head < 1 || a.head > n || a.dep < 1 || a.dep > n || a.head == a.dep) return fail("arc out of range");
    if (head[a.dep] != 0) return fail("position " + std::to_string(a.dep) + " has two heads");
    head[a.dep] = a.head;
    if (!names[a.head].insert(a.name).second) return fail("name '" + a.name + "' used twice by one head");
  }
  int roots = 0, root = 0;
  for (int i = 1; i <= n; ++i) {
    if (head[i] == 0) {
      ++roots;
      root = i;
    }
  }
  if (n > 0 && roots != 1) return fail("not a single-rooted tree");
  for (int i = 1; i <= n; ++i) {
    int steps = 0;
    for (int j = i; head[j] != 0; j = head[j]) {
      if (++steps > n) return fail("cycle");
    }
  }
  if (!is_projective(arcs, root)) return fail("crossing arcs");

  std::map<int, CandidateView> view;
  for (int i = 1; i <= n; ++i) {
    const auto& e = *entries[i - 1];
    view[i] = CandidateView{e.word_class, e.features, e.concept_name, i, e.order, initial_occurs(e, i)};
  }
  for (const auto& a : attachment_order(arcs)) {
    const Valency* val = entries[a.head - 1]->valency(a.name);
    if (val == nullptr) return fail("head " + std::to_string(a.head) + " has no valency '" + a.name + "'");
    auto& h = view[a.head];
    auto& m = view[a.dep];
    const auto res = satisfies(m, *val, h, bundle.classes, bundle.concepts);
    if (!res.holds) {
      return fail("arc " + a.name + "(" + std::to_string(a.head) + "->" + std::to_string(a.dep) + ") fails the " +
                  std::string(clause_name(*res.failed_clause)) + " clause");
    }
    h.features = res.head_features;
    h.occurs[a.name] = a.dep;
    m.features = unify(m.features, expand(kSelf, extract(h.features, a.name)));
    if (m.features.is_bottom()) return fail("modifier features inconsistent after " + a.name);
  }
  for (auto& [i, v] : view) {
    out.features[i] = v.features;
    out.occurs[i] = v.occurs;
  }
  out.valid = true;
  return out;
}

bool tree_valid(const GrammarBundle& bundle, const std::vector<const LexemeEntry*>& entries,
                const std::vector<Arc>& arcs) {
  return check_tree(bundle, entries, arcs).valid;
}

std::vector<OracleTree> enumerate(const GrammarBundle& bundle, const std::vector<std::string>& tokens) {
  const int n = static_cast<int>(tokens.size());
  std::vector<std::vector<const LexemeEntry*>> choices;
  for (int i = 0; i < n; ++i) {
    auto es = bundle.lookup(tokens[i]);
    if (es.empty()) throw DeclarationError("unknown form '" + tokens[i] + "' at position " + std::to_string(i + 1));
    choices.push_back(std::move(es));
  }
  std::vector<OracleTree> out;
  if (n == 0) return out;

  std::vector<const LexemeEntry*> entries(n);
  std::function<void(int)> pick_entries;

  auto per_choice = [&] {
    // Names each head could give each modifier, by class and concept alone.
    std::map<std::pair<int, int>, std::vector<std::string>> labels;
    for (int h = 1; h <= n; ++h) {
      for (int m = 1; m <= n; ++m) {
        if (h == m) continue;
        const auto& he = *entries[h - 1];
        const auto& me = *entries[m - 1];
        CandidateView mv{me.word_class, me.features, me.concept_name, m, me.order, {}};
        CandidateView hv{he.word_class, he.features, he.concept_name, h, he.order, {}};
        for (const auto& v : he.valencies) {
          if (check_class(mv, v, bundle.classes) && !check_concept(mv, v, hv, bundle.concepts).empty()) {
            labels[{h, m}].push_back(v.name);
          }
        }
      }
    }
    std::vector<int> head(n + 1, 0);
    std::vector<Arc> arcs;
    std::function<void(int, int)> pick_head = [&](int m, int roots) {
      if (m > n) {
        if (roots != 1) return;
        auto sorted = arcs;
        std::sort(sorted.begin(), sorted.end());
        auto check = check_tree(bundle, entries, sorted);
        if (!check.valid) return;
        OracleTree t;
        t.arcs = std::move(sorted);
        t.entries = entries;
        t.features = std::move(check.features);
        t.occurs = std::move(check.occurs);
        for (int i = 1; i <= n; ++i) {
          if (head[i] == 0) t.root = i;
        }
        out.push_back(std::move(t));
        return;
      }
      if (roots == 0) {
        head[m] = 0;
        pick_head(m + 1, 1);
      }
      for (int h = 1; h <= n; ++h) {
        auto it = labels.find({h, m});
        if (it == labels.end()) continue;
        head[m] = h;
        for (const auto& name : it->second) {
          const bool taken = std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.head == h && a.name == name; });
          if (taken) continue;
          arcs.push_back({h, m, name});
          if (is_projective(arcs)) pick_head(m + 1, roots);
          arcs.pop_back();
        }
      }
      head[m] = 0;
    };
    pick_head(1, 0);
  };

  pick_entries = [&](int i) {
    if (i == n) {
      per_choice();
      return;
    }
    for (const auto* e : choices[i]) {
      entries[i] = e;
      pick_entries(i + 1);
    }
  };
  pick_entries(0);
  return out;
}

bool same_complete_readings(const std::vector<ReadingRecord>& a, const std::vector<ReadingRecord>& b,
                            std::string* why) {
  using Key = std::pair<std::vector<Arc>, std::map<int, std::string>>;
  auto index = [](const std::vector<ReadingRecord>& rs) {
    std::multimap<Key, const ReadingRecord*> m;
    for (const auto& r : rs) {
      if (r.complete) m.emplace(Key{r.arcs, r.entry_class}, &r);
    }
    return m;
  };
  const auto ia = index(a), ib = index(b);
  auto say = [&](std::string s) {
    if (why) *why = std::move(s);
    return false;
  };
  if (ia.size() != ib.size()) {
    return say(std::to_string(ia.size()) + " vs " + std::to_string(ib.size()) + " complete readings");
  }
  for (auto it = ia.begin(); it != ia.end();) {
    const auto [lo, hi] = ib.equal_range(it->first);
    const auto [alo, ahi] = ia.equal_range(it->first);
    if (std::distance(lo, hi) != std::distance(alo, ahi)) return say("arc sets differ");
    // Duplicated keys are matched greedily on feature equivalence.
    std::vector<const ReadingRecord*> pool;
    for (auto j = lo; j != hi; ++j) pool.push_back(j->second);
    for (auto k = alo; k != ahi; ++k) {
      auto match = std::find_if(pool.begin(), pool.end(), [&](const ReadingRecord* r) {
        if (r->features.size() != k->second->features.size()) return false;
        for (const auto& [pos, fs] : k->second->features) {
          auto f = r->features.find(pos);
          if (f == r->features.end() || !equivalent(fs, f->second)) return false;
        }
        return true;
      });
      if (match == pool.end()) return say("features differ for a reading with identical arcs");
      pool.erase(match);
    }
    it = ahi;
  }
  return true;
}

std::vector<ReadingRecord> oracle_records(const std::vector<OracleTree>& trees, const std::vector<std::string>& tokens) {
  std::vector<ReadingRecord> out;
  ReadingId id = 1;
  for (const auto& t : trees) {
    ReadingRecord r;
    r.id = id++;
    r.complete = true;
    r.tokens = tokens;
    r.arcs = t.arcs;
    r.root = t.root;
    r.features = t.features;
    r.occurs = t.occurs;
    for (std::size_t i = 0; i < t.entries.size(); ++i) r.entry_class[static_cast<int>(i) + 1] = t.entries[i]->word_class;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace parsetalk
