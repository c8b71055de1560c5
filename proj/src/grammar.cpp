#include "parsetalk/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parsetalk/error.hpp"

namespace parsetalk {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(what + ": " + e.what(), line, col);
  }
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError({"cannot open '" + p.string() + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accessors that turn schema mismatches into diagnostics instead of
// nlohmann type_error exceptions.
struct Reader {
  std::vector<std::string>& diags;

  std::string str(const json& obj, const char* key, const std::string& ctx, bool required = true) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) diags.push_back(ctx + ": missing field '" + key + "'");
      return {};
    }
    if (!obj[key].is_string()) {
      diags.push_back(ctx + ": field '" + key + "' must be a string");
      return {};
    }
    return obj[key].get<std::string>();
  }

  std::vector<std::string> strings(const json& v, const std::string& ctx) {
    std::vector<std::string> out;
    if (!v.is_array()) {
      diags.push_back(ctx + ": expected a list of strings");
      return out;
    }
    for (const auto& s : v) {
      if (s.is_string()) {
        out.push_back(s.get<std::string>());
      } else {
        diags.push_back(ctx + ": expected a list of strings");
      }
    }
    return out;
  }

  FeatureStructure features(const json& obj, const std::string& ctx) {
    if (!obj.contains("features")) return FeatureStructure::top();
    if (!obj["features"].is_string()) {
      diags.push_back(ctx + ": field 'features' must be a feature-notation string");
      return FeatureStructure::top();
    }
    try {
      return parse_fs(obj["features"].get<std::string>());
    } catch (const SyntaxError& e) {
      diags.push_back(ctx + ": " + e.what());
      return FeatureStructure::top();
    }
  }

  std::vector<Valency> valencies(const json& obj, const std::string& ctx) {
    std::vector<Valency> out;
    if (!obj.contains("valencies")) return out;
    if (!obj["valencies"].is_array()) {
      diags.push_back(ctx + ": 'valencies' must be a list");
      return out;
    }
    for (const auto& v : obj["valencies"]) {
      Valency val;
      val.name = str(v, "name", ctx + " valency");
      const std::string vctx = ctx + " valency '" + val.name + "'";
      val.word_class = str(v, "class", vctx);
      val.features = features(v, vctx);
      if (v.contains("domain")) {
        for (auto& r : strings(v["domain"], vctx + " domain")) val.domain.insert(r);
      }
      out.push_back(std::move(val));
    }
    return out;
  }

  std::vector<OrderTuple> order(const json& obj, const std::string& ctx) {
    std::vector<OrderTuple> out;
    if (!obj.contains("order")) return out;
    if (!obj["order"].is_array()) {
      diags.push_back(ctx + ": 'order' must be a list of lists");
      return out;
    }
    for (const auto& t : obj["order"]) out.push_back(strings(t, ctx + " order"));
    return out;
  }
};

void check_valencies(const GrammarBundle& b, const std::vector<Valency>& vals, const std::string& ctx,
                     std::vector<std::string>& diags) {
  std::set<std::string> seen;
  for (const auto& v : vals) {
    if (v.name.empty()) continue;
    if (v.name == kSelf) diags.push_back(ctx + ": 'self' is reserved and cannot name a valency");
    if (!seen.insert(v.name).second) diags.push_back(ctx + ": duplicate valency name '" + v.name + "'");
    if (!v.word_class.empty() && !b.classes.contains(v.word_class)) {
      diags.push_back(ctx + " valency '" + v.name + "': undeclared class '" + v.word_class + "'");
    }
    for (const auto& r : v.domain) {
      if (!b.concepts.has_role(r)) diags.push_back(ctx + " valency '" + v.name + "': undeclared role '" + r + "'");
    }
    if (v.features.is_bottom()) diags.push_back(ctx + " valency '" + v.name + "': inconsistent features");
  }
}

void check_order_shape(const std::vector<OrderTuple>& order, const std::string& ctx, std::vector<std::string>& diags) {
  for (const auto& t : order) {
    const auto self_count = std::count(t.begin(), t.end(), std::string(kSelf));
    if (self_count != 1) diags.push_back(ctx + ": order tuple must contain 'self' exactly once");
    std::set<std::string> uniq(t.begin(), t.end());
    if (uniq.size() != t.size()) diags.push_back(ctx + ": order tuple repeats a dependency name");
  }
}

void check_order_names(const LexemeEntry& e, const std::string& ctx, std::vector<std::string>& diags) {
  for (const auto& t : e.order) {
    for (const auto& n : t) {
      if (n != kSelf && e.valency(n) == nullptr) {
        diags.push_back(ctx + ": order tuple names '" + n + "' which is not a valency of the entry");
      }
    }
  }
}

GrammarBundle build(const json& classes, const json& concepts, const json& lexicon) {
  std::vector<std::string> diags;
  Reader rd{diags};
  GrammarBundle b;

  // Classes: the entry without a parent is the root.
  if (!classes.is_array()) throw LoadError({"classes file: expected a list of class declarations"});
  std::string root;
  for (const auto& c : classes) {
    if (c.is_object() && !c.contains("parent")) {
      const std::string name = rd.str(c, "name", "class");
      if (!root.empty() && name != root) diags.push_back("classes file: more than one root class ('" + root + "', '" + name + "')");
      if (root.empty()) root = name;
    }
  }
  if (root.empty()) root = ClassHierarchy::kDefaultRoot;
  b.classes = ClassHierarchy(root);
  for (const auto& c : classes) {
    const std::string name = rd.str(c, "name", "class");
    if (name.empty()) continue;
    if (b.classes.contains(name) && name != root) diags.push_back("class '" + name + "' declared twice");
    b.classes.declare(name, rd.str(c, "parent", "class '" + name + "'", false));
  }
  for (auto& d : validate_hierarchy(b.classes)) diags.push_back(std::move(d));

  // Concepts.
  if (!concepts.is_object()) throw LoadError({"concepts file: expected an object"});
  if (concepts.contains("concepts")) {
    for (const auto& c : concepts["concepts"]) {
      const std::string name = rd.str(c, "name", "concept");
      std::vector<std::string> parents;
      if (c.contains("parents")) parents = rd.strings(c["parents"], "concept '" + name + "' parents");
      if (!name.empty()) b.concepts.declare_concept(name, std::move(parents));
    }
  }
  if (concepts.contains("roles")) {
    for (auto& r : rd.strings(concepts["roles"], "roles")) b.concepts.declare_role(r);
  }
  if (concepts.contains("cic")) {
    for (const auto& t : concepts["cic"]) {
      auto parts = rd.strings(t, "cic triple");
      if (parts.size() != 3) {
        diags.push_back("cic entries must be [concept, role, concept]");
        continue;
      }
      b.concepts.add_cic({parts[0], parts[1], parts[2]});
    }
  }
  for (auto& d : validate_hierarchy(b.concepts)) diags.push_back(std::move(d));

  // Class defaults need declared classes and roles, so they come after both.
  for (const auto& c : classes) {
    const std::string name = rd.str(c, "name", "class");
    if (name.empty() || (!c.contains("valencies") && !c.contains("order"))) continue;
    const std::string ctx = "class '" + name + "'";
    ClassDefaults defs{rd.valencies(c, ctx), rd.order(c, ctx)};
    check_valencies(b, defs.valencies, ctx, diags);
    check_order_shape(defs.order, ctx, diags);
    b.class_defaults[name] = std::move(defs);
  }

  // Lexicon.
  if (!lexicon.is_array()) throw LoadError({"lexicon file: expected a list of entries"});
  std::vector<LexemeEntry> raw;
  for (const auto& e : lexicon) {
    LexemeEntry entry;
    entry.form = rd.str(e, "form", "lexicon entry");
    const std::string ctx = "entry '" + entry.form + "'";
    entry.word_class = rd.str(e, "class", ctx);
    entry.concept_name = rd.str(e, "concept", ctx);
    entry.features = rd.features(e, ctx);
    entry.valencies = rd.valencies(e, ctx);
    entry.order = rd.order(e, ctx);
    if (!entry.word_class.empty() && !b.classes.contains(entry.word_class)) {
      diags.push_back(ctx + ": undeclared class '" + entry.word_class + "'");
    }
    if (!entry.concept_name.empty() && !b.concepts.has_concept(entry.concept_name)) {
      diags.push_back(ctx + ": undeclared concept '" + entry.concept_name + "'");
    }
    if (entry.features.is_bottom()) diags.push_back(ctx + ": inconsistent features");
    check_valencies(b, entry.valencies, ctx, diags);
    check_order_shape(entry.order, ctx, diags);
    raw.push_back(std::move(entry));
  }
  if (!diags.empty()) throw LoadError(std::move(diags));

  for (const auto& entry : raw) {
    LexemeEntry flat = flatten_entry(b, entry);
    check_order_names(flat, "entry '" + flat.form + "'", diags);
    b.dependency_names.insert(kSelf);
    for (const auto& v : flat.valencies) b.dependency_names.insert(v.name);
    b.lexicon.emplace(flat.form, std::move(flat));
  }
  if (!diags.empty()) throw LoadError(std::move(diags));
  return b;
}

}  // namespace

const Valency* LexemeEntry::valency(const std::string& name) const {
  for (const auto& v : valencies) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

std::vector<const LexemeEntry*> GrammarBundle::lookup(const std::string& form) const {
  std::vector<const LexemeEntry*> out;
  auto [lo, hi] = lexicon.equal_range(form);
  for (auto it = lo; it != hi; ++it) out.push_back(&it->second);
  return out;
}

LexemeEntry flatten_entry(const GrammarBundle& bundle, const LexemeEntry& entry) {
  LexemeEntry flat = entry;
  flat.valencies.clear();
  flat.order.clear();
  std::vector<std::string> chain = bundle.classes.ancestors(entry.word_class);
  std::reverse(chain.begin(), chain.end());  // root first, so nearer classes override

  auto put_valency = [&](const Valency& v) {
    for (auto& existing : flat.valencies) {
      if (existing.name == v.name) {
        existing = v;
        return;
      }
    }
    flat.valencies.push_back(v);
  };
  auto put_order = [&](const OrderTuple& t) {
    if (std::find(flat.order.begin(), flat.order.end(), t) == flat.order.end()) flat.order.push_back(t);
  };

  for (const auto& cls : chain) {
    auto it = bundle.class_defaults.find(cls);
    if (it == bundle.class_defaults.end()) continue;
    for (const auto& v : it->second.valencies) put_valency(v);
    for (const auto& t : it->second.order) put_order(t);
  }
  for (const auto& v : entry.valencies) put_valency(v);
  for (const auto& t : entry.order) put_order(t);
  return flat;
}

OccursMap initial_occurs(const LexemeEntry& entry, int position) {
  OccursMap occ;
  for (const auto& v : entry.valencies) occ[v.name] = 0;
  for (const auto& t : entry.order) {
    for (const auto& n : t) occ[n] = 0;
  }
  occ[kSelf] = position;
  return occ;
}

GrammarBundle load_bundle_from_text(const std::string& classes_json, const std::string& concepts_json,
                                    const std::string& lexicon_json) {
  return build(parse_json(classes_json, "classes file"), parse_json(concepts_json, "concepts file"),
               parse_json(lexicon_json, "lexicon file"));
}

GrammarBundle load_bundle(const GrammarPaths& paths) {
  return load_bundle_from_text(read_file(paths.classes), read_file(paths.concepts), read_file(paths.lexicon));
}

}  // namespace parsetalk
