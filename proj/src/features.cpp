#include "parsetalk/features.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "parsetalk/error.hpp"

namespace parsetalk {

namespace {

using Kind = FeatureStructure::Kind;

// Mutable graph used while building or unifying. Nodes are merged through a
// union-find forwarding array; normalize() produces an immutable arena.
class Workspace {
 public:
  struct WNode {
    Kind kind = Kind::Top;
    std::vector<std::string> symbols;
    std::map<std::string, int> entries;
  };

  int add(WNode n) {
    nodes_.push_back(std::move(n));
    parent_.push_back(static_cast<int>(parent_.size()));
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Copies every node of fs; returns the id of its root.
  int import(const FeatureStructure& fs) {
    const int offset = static_cast<int>(nodes_.size());
    for (const auto& n : fs.nodes()) {
      WNode w;
      w.kind = n.kind;
      w.symbols = n.symbols;
      for (const auto& [label, child] : n.entries) w.entries.emplace(label, child + offset);
      add(std::move(w));
    }
    return fs.root() + offset;
  }

  int find(int i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  WNode& node(int i) { return nodes_[i]; }

  static bool is_top(const WNode& n) {
    return n.kind == Kind::Top || (n.kind == Kind::Complex && n.entries.empty());
  }

  bool unify(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    WNode& na = nodes_[a];
    WNode& nb = nodes_[b];
    if (is_top(na)) {
      parent_[a] = b;
      return true;
    }
    if (is_top(nb)) {
      parent_[b] = a;
      return true;
    }
    const bool a_atomic = na.kind != Kind::Complex;
    const bool b_atomic = nb.kind != Kind::Complex;
    if (a_atomic != b_atomic) return false;
    if (a_atomic) {
      std::vector<std::string> common;
      std::set_intersection(na.symbols.begin(), na.symbols.end(), nb.symbols.begin(), nb.symbols.end(),
                            std::back_inserter(common));
      if (common.empty()) return false;
      na.kind = common.size() == 1 ? Kind::Atom : Kind::Disjunction;
      na.symbols = std::move(common);
      parent_[b] = a;
      return true;
    }
    // Forward first so reentrant paths terminate.
    parent_[b] = a;
    const auto incoming = nb.entries;
    for (const auto& [label, child] : incoming) {
      auto it = nodes_[a].entries.find(label);
      if (it == nodes_[a].entries.end()) {
        nodes_[a].entries.emplace(label, child);
      } else if (!unify(it->second, child)) {
        return false;
      }
    }
    return true;
  }

  // Immutable copy of everything reachable from root; Bottom if cyclic.
  FeatureStructure normalize(int root) {
    auto out = std::make_shared<std::vector<FeatureStructure::Node>>();
    std::unordered_map<int, int> mapped;
    std::unordered_map<int, int> state;  // 1 = on stack, 2 = done
    bool cyclic = false;
    std::function<int(int)> visit = [&](int id) -> int {
      id = find(id);
      if (auto it = state.find(id); it != state.end()) {
        if (it->second == 1) {
          cyclic = true;
          return 0;
        }
        return mapped.at(id);
      }
      state[id] = 1;
      const int slot = static_cast<int>(out->size());
      out->emplace_back();
      mapped[id] = slot;
      const WNode& w = nodes_[id];
      FeatureStructure::Node n;
      n.kind = w.kind;
      n.symbols = w.symbols;
      if (w.kind == Kind::Complex && w.entries.empty()) n.kind = Kind::Top;
      for (const auto& [label, child] : w.entries) {
        const int c = visit(child);
        if (cyclic) return 0;
        n.entries.emplace_back(label, c);
      }
      (*out)[slot] = std::move(n);
      state[id] = 2;
      return slot;
    };
    const int r = visit(root);
    if (cyclic) return FeatureStructure::bottom();
    return FeatureStructure(std::move(out), r);
  }

 private:
  std::vector<WNode> nodes_;
  std::vector<int> parent_;
};

std::shared_ptr<const std::vector<FeatureStructure::Node>> single(FeatureStructure::Node n) {
  return std::make_shared<const std::vector<FeatureStructure::Node>>(std::vector{std::move(n)});
}

bool is_ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == '+' || c == '\'' || c >= 0x80;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FeatureStructure run() {
    skip_ws();
    if (text_.substr(pos_).starts_with("\xE2\x8A\xA5")) {  // ⊥
      pos_ += 3;
      expect_end();
      return FeatureStructure::bottom();
    }
    const int root = value();
    expect_end();
    for (const auto& [tag, slot] : tags_) {
      if (!slot.bound) fail("coreference tag <" + std::to_string(tag) + "> is never bound");
    }
    FeatureStructure fs = ws_.normalize(root);
    if (fs.is_bottom()) fail("cyclic coreference");
    return fs;
  }

 private:
  struct TagSlot {
    int node;
    bool bound;
  };

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(what, line, col);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  int value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '[') return complex();
    if (c == '{') return disjunction();
    if (c == '<') return tagged();
    Workspace::WNode n;
    n.kind = Kind::Atom;
    n.symbols = {ident()};
    return ws_.add(std::move(n));
  }

  int complex() {
    expect('[');
    Workspace::WNode n;
    n.kind = Kind::Complex;
    if (peek(']')) {
      ++pos_;
      return ws_.add(std::move(n));
    }
    const int id = ws_.add(std::move(n));
    while (true) {
      std::string label = ident();
      expect(':');
      const int child = value();
      if (!ws_.node(id).entries.emplace(label, child).second) fail("duplicate label '" + label + "'");
      if (peek(',')) {
        ++pos_;
        continue;
      }
      expect(']');
      return id;
    }
  }

  int disjunction() {
    expect('{');
    std::set<std::string> symbols;
    while (true) {
      symbols.insert(ident());
      if (peek(',')) {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    Workspace::WNode n;
    n.kind = symbols.size() == 1 ? Kind::Atom : Kind::Disjunction;
    n.symbols.assign(symbols.begin(), symbols.end());
    return ws_.add(std::move(n));
  }

  int tagged() {
    expect('<');
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected tag number");
    const int tag = std::stoi(std::string(text_.substr(start, pos_ - start)));
    if (tag <= 0) fail("tag numbers are positive");
    expect('>');
    auto [it, fresh] = tags_.try_emplace(tag, TagSlot{-1, false});
    if (fresh) it->second.node = ws_.add({});
    if (peek('=')) {
      ++pos_;
      if (it->second.bound) fail("coreference tag <" + std::to_string(tag) + "> bound twice");
      it->second.bound = true;
      const int v = value();
      // The slot may already be referenced; merge the value into it.
      if (!ws_.unify(it->second.node, v)) fail("inconsistent coreference binding");
    }
    return it->second.node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Workspace ws_;
  std::map<int, TagSlot> tags_;
};

}  // namespace

FeatureStructure FeatureStructure::top() { return FeatureStructure(single({}), 0); }

FeatureStructure FeatureStructure::atom(std::string symbol) {
  Node n;
  n.kind = Kind::Atom;
  n.symbols = {std::move(symbol)};
  return FeatureStructure(single(std::move(n)), 0);
}

FeatureStructure FeatureStructure::disjunction(const std::set<std::string>& symbols) {
  if (symbols.empty()) return bottom();
  Node n;
  n.kind = symbols.size() == 1 ? Kind::Atom : Kind::Disjunction;
  n.symbols.assign(symbols.begin(), symbols.end());
  return FeatureStructure(single(std::move(n)), 0);
}

FeatureStructure FeatureStructure::complex(std::vector<std::pair<std::string, FeatureStructure>> entries) {
  Workspace ws;
  Workspace::WNode top;
  top.kind = Kind::Complex;
  const int root = ws.add(std::move(top));
  for (auto& [label, value] : entries) {
    if (value.is_bottom()) return bottom();
    const int child = ws.import(value);
    if (!ws.node(root).entries.emplace(label, child).second) return bottom();
  }
  return ws.normalize(root);
}

FeatureStructure::Kind FeatureStructure::kind() const { return (*nodes_)[root_].kind; }

const std::vector<std::string>& FeatureStructure::symbols() const { return (*nodes_)[root_].symbols; }

std::vector<std::string> FeatureStructure::labels() const {
  std::vector<std::string> out;
  if (is_bottom()) return out;
  for (const auto& [label, _] : (*nodes_)[root_].entries) out.push_back(label);
  return out;
}

FeatureStructure unify(const FeatureStructure& a, const FeatureStructure& b) {
  if (a.is_bottom() || b.is_bottom()) return FeatureStructure::bottom();
  Workspace ws;
  const int ra = ws.import(a);
  const int rb = ws.import(b);
  if (!ws.unify(ra, rb)) return FeatureStructure::bottom();
  return ws.normalize(ra);
}

FeatureStructure expand(std::string_view label, const FeatureStructure& u) {
  if (u.is_bottom()) return u;
  return FeatureStructure::complex({{std::string(label), u}});
}

FeatureStructure extract(const FeatureStructure& u, std::string_view label) {
  if (u.is_bottom() || u.kind() != FeatureStructure::Kind::Complex) return FeatureStructure::bottom();
  for (const auto& [l, child] : u.nodes()[u.root()].entries) {
    if (l == label) {
      Workspace ws;
      const int offset = ws.import(u) - u.root();
      return ws.normalize(child + offset);
    }
  }
  return FeatureStructure::bottom();
}

FeatureStructure extract_path(const FeatureStructure& u, std::initializer_list<std::string_view> path) {
  FeatureStructure cur = u;
  for (auto label : path) cur = extract(cur, label);
  return cur;
}

bool equivalent(const FeatureStructure& a, const FeatureStructure& b) {
  if (a.is_bottom() || b.is_bottom()) return a.is_bottom() && b.is_bottom();
  std::unordered_map<int, int> fwd, bwd;
  std::function<bool(int, int)> same = [&](int x, int y) {
    auto fx = fwd.find(x);
    auto by = bwd.find(y);
    if (fx != fwd.end() || by != bwd.end()) {
      return fx != fwd.end() && by != bwd.end() && fx->second == y && by->second == x;
    }
    fwd[x] = y;
    bwd[y] = x;
    const auto& nx = a.nodes()[x];
    const auto& ny = b.nodes()[y];
    if (nx.kind != ny.kind || nx.symbols != ny.symbols || nx.entries.size() != ny.entries.size()) return false;
    for (std::size_t i = 0; i < nx.entries.size(); ++i) {
      if (nx.entries[i].first != ny.entries[i].first) return false;
      if (!same(nx.entries[i].second, ny.entries[i].second)) return false;
    }
    return true;
  };
  return same(a.root(), b.root());
}

FeatureStructure parse_fs(std::string_view text) { return Parser(text).run(); }

std::string render_fs(const FeatureStructure& fs) {
  if (fs.is_bottom()) return "\xE2\x8A\xA5";
  const auto& nodes = fs.nodes();
  std::vector<int> refs(nodes.size(), 0);
  std::function<void(int)> count = [&](int id) {
    if (refs[id]++ > 0) return;
    for (const auto& [_, child] : nodes[id].entries) count(child);
  };
  count(fs.root());

  std::vector<int> tag(nodes.size(), 0);
  int next_tag = 0;
  std::ostringstream os;
  std::function<void(int)> emit = [&](int id) {
    if (refs[id] > 1) {
      if (tag[id] != 0) {
        os << '<' << tag[id] << '>';
        return;
      }
      tag[id] = ++next_tag;
      os << '<' << tag[id] << ">=";
    }
    const auto& n = nodes[id];
    switch (n.kind) {
      case FeatureStructure::Kind::Top:
        os << "[]";
        break;
      case FeatureStructure::Kind::Atom:
        os << n.symbols.front();
        break;
      case FeatureStructure::Kind::Disjunction:
        os << '{';
        for (std::size_t i = 0; i < n.symbols.size(); ++i) os << (i ? ", " : "") << n.symbols[i];
        os << '}';
        break;
      case FeatureStructure::Kind::Complex:
        os << '[';
        for (std::size_t i = 0; i < n.entries.size(); ++i) {
          os << (i ? ", " : "") << n.entries[i].first << ": ";
          emit(n.entries[i].second);
        }
        os << ']';
        break;
    }
  };
  emit(fs.root());
  return os.str();
}

}  // namespace parsetalk
