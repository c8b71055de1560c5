#include "parsetalk/protocol.hpp"

#include <algorithm>
#include <sstream>

#include "parsetalk/error.hpp"

namespace parsetalk {

namespace {

std::string ref_str(ActorRef r) { return r.valid() ? "#" + std::to_string(r.id) : "nil"; }

// ---- payloads --------------------------------------------------------------

struct SearchHead final : Payload {
  TaskId task = 0;
  CandidateView mod;
  std::string digest() const override {
    return "task=" + std::to_string(task) + " mod=" + std::to_string(mod.position) + " " + render_fs(mod.features);
  }
};

// Controller -> ungoverned root: probe the new word to the right.
struct Probe final : Payload {
  ActorRef target;
  int right_boundary = 0;
  std::string digest() const override { return "to=" + ref_str(target) + " boundary=" + std::to_string(right_boundary); }
};

// Controller -> new word: start the head search at the left neighbour.
struct StartUp final : Payload {
  ActorRef left;
  std::string digest() const override { return "left=" + ref_str(left); }
};

struct RightAttach final : Payload {
  TaskId task = 0;
  CandidateView mod;
  int right_boundary = 0;
  std::string digest() const override {
    return "task=" + std::to_string(task) + " mod=" + std::to_string(mod.position) +
           " boundary=" + std::to_string(right_boundary);
  }
};

struct HeadFound final : Payload {
  enum class Kind { Offer, Reissue, Link } kind = Kind::Offer;
  TaskId modifier_task = 0;
  TaskId head_task = 0;
  std::string name;
  FeatureStructure head_features;
  int index = 0;
  int count = 1;
  std::string digest() const override {
    static const char* kinds[] = {"offer", "reissue", "link"};
    return std::string(kinds[static_cast<int>(kind)]) + " name=" + name + " task=" + std::to_string(head_task) + " " +
           std::to_string(index + 1) + "/" + std::to_string(count);
  }
};

struct HeadAnswer final : Payload {
  TaskId head_task = 0;
  std::string name;
  int position = 0;
  int span_left = 0;
  bool copy = false;
  std::string digest() const override {
    return "task=" + std::to_string(head_task) + " name=" + name + " pos=" + std::to_string(position) +
           (copy ? " copy" : "");
  }
};

struct ReceiptPayload final : Payload {
  TaskId task = 0;
  std::vector<ActorRef> forwarded;
  std::string digest() const override {
    std::string s = "task=" + std::to_string(task) + " fwd=[";
    for (std::size_t i = 0; i < forwarded.size(); ++i) s += (i ? "," : "") + ref_str(forwarded[i]);
    return s + "]";
  }
};

struct CopyStructure final : Payload {
  enum class Stage { Copy, Adopt } stage = Stage::Copy;
  ReadingId reading = 0;
  ActorRef new_head;
  std::string name;
  std::string digest() const override {
    return std::string(stage == Stage::Copy ? "copy" : "adopt") + " into=" + std::to_string(reading) +
           " head=" + ref_str(new_head) + " name=" + name;
  }
};

struct DuplicateStructure final : Payload {
  enum class Stage { Offer, Adopt, CopyHead, AdoptHead } stage = Stage::Offer;
  ReadingId reading = 0;
  ActorRef modifier_copy;
  std::string name;
  TaskId head_task = 0;
  CandidateView modifier_view;
  ActorRef old_child;
  ActorRef child_copy;
  std::string digest() const override {
    static const char* stages[] = {"offer", "adopt", "copy-head", "adopt-head"};
    return std::string(stages[static_cast<int>(stage)]) + " into=" + std::to_string(reading) + " name=" + name +
           " mod=" + ref_str(modifier_copy) + " child=" + ref_str(child_copy);
  }
};

const std::vector<std::string> kSearchReceipts{"receipt", "headFound"};
const std::vector<std::string> kOfferReceipts{"headAccepted", "headRejected", "duplicateStructure"};

Message make(std::string kind, ActorRef to, std::shared_ptr<const Payload> p, ReadingId reading) {
  Message m;
  m.kind = std::move(kind);
  m.target = to;
  m.payload = std::move(p);
  m.reading = reading;
  return m;
}

std::shared_ptr<const ComplexMessageSpec> search_spec() {
  static const auto spec = [] {
    auto s = std::make_shared<ComplexMessageSpec>();
    s->distribute.push_back(
        {[](const ActorState& st, const Message&) { return static_cast<const WordActorState&>(st).governed(); },
         "head"});
    s->compute.push_back([](const ActorState&, const Message&) { return true; });
    return std::shared_ptr<const ComplexMessageSpec>(s);
  }();
  return spec;
}

// A copy placed in another reading; transient bookkeeping is dropped.
std::shared_ptr<WordActorState> fresh_copy(const std::shared_ptr<const ActorState>& cp, ReadingId reading) {
  auto c = std::make_shared<WordActorState>(static_cast<const WordActorState&>(*cp));
  c->reading = reading;
  c->offers.clear();
  c->expanded.clear();
  return c;
}

class WordBehavior {
 public:
  explicit WordBehavior(ParseSession& session) : session_(session) {}

  void operator()(Context& ctx, const ActorState& st, const Message& m) {
    const auto& s = static_cast<const WordActorState&>(st);
    if (m.kind == "searchHead") {
      on_search(ctx, s, m);
    } else if (m.kind == "probe") {
      on_probe(ctx, s, m);
    } else if (m.kind == "startUp") {
      on_start(ctx, s, m);
    } else if (m.kind == "rightAttach") {
      on_right_attach(ctx, s, m);
    } else if (m.kind == "headFound") {
      on_head_found(ctx, s, m);
    } else if (m.kind == "headAccepted") {
      on_head_accepted(ctx, s, m);
    } else if (m.kind == "headRejected") {
      on_head_rejected(ctx, s, m);
    } else if (m.kind == "receipt") {
      const auto& p = m.as<ReceiptPayload>();
      ctx.record_receipt(p.task, m.sender, p.forwarded);
    } else if (m.kind == "copyStructure") {
      on_copy(ctx, s, m);
    } else if (m.kind == "duplicateStructure") {
      on_duplicate(ctx, s, m);
    } else {
      throw ProtocolFault("word actor cannot handle '" + m.kind + "'");
    }
  }

 private:
  void send(Context& ctx, const WordActorState& s, std::string kind, ActorRef to, std::shared_ptr<const Payload> p) {
    ctx.send(make(std::move(kind), to, std::move(p), s.reading));
  }

  void send_receipt(Context& ctx, const WordActorState& s, ActorRef to, TaskId task, std::vector<ActorRef> fwd) {
    auto p = std::make_shared<ReceiptPayload>();
    p->task = task;
    p->forwarded = std::move(fwd);
    send(ctx, s, "receipt", to, p);
  }

  // Head side: one headFound per satisfied, unfilled valency.
  void offer(Context& ctx, const WordActorState& s, const CandidateView& mod, ActorRef modifier, TaskId mod_task,
             std::vector<ActorRef> fwd) {
    const auto& g = session_.grammar();
    std::vector<std::pair<std::string, FeatureStructure>> ok;
    const CandidateView head = s.view();
    for (const auto& val : s.vals) {
      if (s.occurs.at(val.name) != 0) continue;
      auto res = satisfies(mod, val, head, g.classes, g.concepts);
      if (res.holds) ok.emplace_back(val.name, std::move(res.head_features));
    }
    if (ok.empty()) {
      send_receipt(ctx, s, modifier, mod_task, std::move(fwd));
      return;
    }
    auto next = std::make_shared<WordActorState>(s);
    const int k = static_cast<int>(ok.size());
    for (int i = 0; i < k; ++i) {
      const TaskId t = ctx.queue_reception_task(modifier, kOfferReceipts);
      PendingOffer po;
      po.head_task = t;
      po.modifier = modifier;
      po.name = ok[i].first;
      po.features_after = ok[i].second;
      po.modifier_position = mod.position;
      po.modifier_task = mod_task;
      if (i == 0) po.forwarded = fwd;
      next->offers.push_back(po);
      auto p = std::make_shared<HeadFound>();
      p->kind = HeadFound::Kind::Offer;
      p->modifier_task = mod_task;
      p->head_task = t;
      p->name = po.name;
      p->head_features = extract(po.features_after, po.name);
      p->index = i;
      p->count = k;
      send(ctx, s, "headFound", modifier, p);
    }
    ctx.become(next);
  }

  void on_search(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<SearchHead>();
    offer(ctx, s, p.mod, m.initiator, p.task, ctx.forwarded_to());
  }

  void on_probe(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<Probe>();
    if (s.governed()) throw ProtocolFault("probe directed at a governed word");
    const TaskId t = ctx.queue_reception_task(p.target, kSearchReceipts);
    auto ra = std::make_shared<RightAttach>();
    ra->task = t;
    ra->mod = s.view();
    ra->right_boundary = p.right_boundary;
    auto msg = make("rightAttach", p.target, ra, s.reading);
    msg.initiator = ctx.self();
    ctx.send(std::move(msg));
  }

  void on_start(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<StartUp>();
    const TaskId t = ctx.queue_reception_task(p.left, kSearchReceipts);
    auto sh = std::make_shared<SearchHead>();
    sh->task = t;
    sh->mod = s.view();
    auto msg = make("searchHead", p.left, sh, s.reading);
    msg.initiator = ctx.self();
    ctx.depart(search_spec(), std::move(msg));
  }

  void on_right_attach(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<RightAttach>();
    // Non-crossing guard: the probing subtree must end right where ours begins.
#ifndef PARSETALK_MUTANT_NO_GUARD
    if (p.right_boundary + 1 != s.span_left) {
      send_receipt(ctx, s, m.sender, p.task, {});
      return;
    }
#endif
    offer(ctx, s, p.mod, m.sender, p.task, {});
  }

  void on_head_found(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<HeadFound>();
    auto next = std::make_shared<WordActorState>(s);
    if (p.kind == HeadFound::Kind::Link) {
      next->head = m.sender;
      ctx.become(next);
      return;
    }
    if (p.kind == HeadFound::Kind::Offer && !s.expanded.contains({p.modifier_task, m.sender.id})) {
      ctx.record_receipt(p.modifier_task, m.sender, std::vector<ActorRef>(p.count, m.sender));
      next->expanded.insert({p.modifier_task, m.sender.id});
    }
    auto answer = std::make_shared<HeadAnswer>();
    answer->head_task = p.head_task;
    answer->name = p.name;
    answer->position = s.position;
    answer->span_left = s.span_left;

    if (!s.governed()) {
      FeatureStructure feats = unify(s.feats, expand(kSelf, p.head_features));
      if (feats.is_bottom()) {
        send(ctx, s, "headRejected", m.sender, answer);
      } else {
        send(ctx, s, "headAccepted", m.sender, answer);
        next->head = m.sender;
        next->head_name = p.name;
        next->feats = std::move(feats);
      }
      ctx.become(next);
      return;
    }

    // Already governed: the alternative goes to a new reading.
    auto fork = session_.try_fork(s.reading);
    if (!fork) {
      session_.warn("reading cap reached; alternative attachment of position " + std::to_string(s.position) +
                    " as '" + p.name + "' dropped");
      send(ctx, s, "headRejected", m.sender, answer);
      ctx.become(next);
      return;
    }
    auto cp = ctx.checkpoint();
    auto copy = fresh_copy(cp, *fork);
    const CandidateView view = copy->view();
    const ActorRef mod_copy = ctx.spawn(kWordActor, copy);

    auto cs = std::make_shared<CopyStructure>();
    cs->stage = CopyStructure::Stage::Adopt;
    cs->reading = *fork;
    send(ctx, s, "copyStructure", mod_copy, cs);

    auto ds = std::make_shared<DuplicateStructure>();
    ds->stage = DuplicateStructure::Stage::Offer;
    ds->reading = *fork;
    ds->modifier_copy = mod_copy;
    ds->name = p.name;
    ds->head_task = p.head_task;
    ds->modifier_view = view;
    send(ctx, s, "duplicateStructure", m.sender, ds);
    ctx.become(next);
  }

  static std::vector<PendingOffer>::const_iterator find_offer(const WordActorState& s, TaskId t) {
    auto it = std::find_if(s.offers.begin(), s.offers.end(), [&](const PendingOffer& o) { return o.head_task == t; });
    if (it == s.offers.end()) throw ProtocolFault("answer for an unknown offer (task " + std::to_string(t) + ")");
    return it;
  }

  // Releases an offer: closes our task and reports to the modifier's search.
  void settle(Context& ctx, const WordActorState& s, const PendingOffer& o, ActorRef from) {
    ctx.record_receipt(o.head_task, from, {});
    if (o.modifier_task != 0) send_receipt(ctx, s, o.modifier, o.modifier_task, o.forwarded);
  }

  void on_head_accepted(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<HeadAnswer>();
    auto next = std::make_shared<WordActorState>(s);
    if (p.copy) {
      auto it = std::find_if(next->deps.begin(), next->deps.end(),
                             [&](const DependencyRecord& d) { return d.name == p.name && d.position == p.position; });
      if (it == next->deps.end()) throw ProtocolFault("copied dependent '" + p.name + "' has no record");
      it->modifier = m.sender;
      ctx.become(next);
      return;
    }
    auto it = find_offer(s, p.head_task);
    const PendingOffer o = *it;
    if (o.name != p.name) throw ProtocolFault("headAccepted names '" + p.name + "', offer was '" + o.name + "'");
    if (s.occurs.at(o.name) != 0) throw ProtocolFault("valency '" + o.name + "' already filled");
    next->offers.erase(next->offers.begin() + (it - s.offers.begin()));
    next->deps.push_back({o.name, m.sender, p.position});
    next->occurs[o.name] = p.position;
    next->feats = o.features_after;
    if (p.position < s.position) next->span_left = std::min(s.span_left, p.span_left);
    ctx.become(next);
    settle(ctx, s, o, m.sender);
  }

  void on_head_rejected(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<HeadAnswer>();
    auto it = find_offer(s, p.head_task);
    const PendingOffer o = *it;
    auto next = std::make_shared<WordActorState>(s);
    next->offers.erase(next->offers.begin() + (it - s.offers.begin()));
    ctx.become(next);
    settle(ctx, s, o, m.sender);
  }

  void copy_dependents(Context& ctx, const WordActorState& s, ReadingId into, ActorRef skip = {}) {
    for (const auto& d : s.deps) {
      if (d.modifier == skip) continue;
      auto cs = std::make_shared<CopyStructure>();
      cs->stage = CopyStructure::Stage::Copy;
      cs->reading = into;
      cs->new_head = ctx.self();
      cs->name = d.name;
      send(ctx, s, "copyStructure", d.modifier, cs);
    }
  }

  void on_copy(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<CopyStructure>();
    if (p.stage == CopyStructure::Stage::Copy) {
      auto copy = fresh_copy(ctx.checkpoint(), p.reading);
      copy->head = p.new_head;
      const ActorRef c = ctx.spawn(kWordActor, copy);
      auto adopt = std::make_shared<CopyStructure>(p);
      adopt->stage = CopyStructure::Stage::Adopt;
      send(ctx, s, "copyStructure", c, adopt);
      return;
    }
    if (p.new_head.valid()) {
      auto a = std::make_shared<HeadAnswer>();
      a->name = p.name;
      a->position = s.position;
      a->copy = true;
      send(ctx, s, "headAccepted", p.new_head, a);
    }
    copy_dependents(ctx, s, p.reading);
  }

  void on_duplicate(Context& ctx, const WordActorState& s, const Message& m) {
    const auto& p = m.as<DuplicateStructure>();
    using Stage = DuplicateStructure::Stage;
    switch (p.stage) {
      case Stage::Offer: {
        // Original head: drop the offer, then rebuild the structure in the fork.
        auto it = find_offer(s, p.head_task);
        const PendingOffer o = *it;
        auto next = std::make_shared<WordActorState>(s);
        next->offers.erase(next->offers.begin() + (it - s.offers.begin()));
        ctx.become(next);
        settle(ctx, s, o, m.sender);
        const ActorRef h = ctx.spawn(kWordActor, fresh_copy(ctx.checkpoint(), p.reading));
        auto adopt = std::make_shared<DuplicateStructure>(p);
        adopt->stage = Stage::Adopt;
        send(ctx, s, "duplicateStructure", h, adopt);
        return;
      }
      case Stage::Adopt: {
        copy_dependents(ctx, s, p.reading);
        if (s.head.valid()) relink_up(ctx, s, p.reading, m.sender);
        const Valency* val = nullptr;
        for (const auto& v : s.vals) {
          if (v.name == p.name) val = &v;
        }
        if (val == nullptr || s.occurs.at(p.name) != 0) throw ProtocolFault("re-issued offer '" + p.name + "' invalid");
        const auto& g = session_.grammar();
        auto res = satisfies(p.modifier_view, *val, s.view(), g.classes, g.concepts);
        if (!res.holds) throw ProtocolFault("re-issued offer '" + p.name + "' no longer satisfied");
        auto next = std::make_shared<WordActorState>(s);
        const TaskId t = ctx.queue_reception_task(p.modifier_copy, kOfferReceipts);
        PendingOffer po;
        po.head_task = t;
        po.modifier = p.modifier_copy;
        po.name = p.name;
        po.features_after = res.head_features;
        po.modifier_position = p.modifier_view.position;
        next->offers.push_back(po);
        ctx.become(next);
        auto hf = std::make_shared<HeadFound>();
        hf->kind = HeadFound::Kind::Reissue;
        hf->head_task = t;
        hf->name = p.name;
        hf->head_features = extract(po.features_after, p.name);
        send(ctx, s, "headFound", p.modifier_copy, hf);
        return;
      }
      case Stage::CopyHead: {
        const ActorRef g = ctx.spawn(kWordActor, fresh_copy(ctx.checkpoint(), p.reading));
        auto adopt = std::make_shared<DuplicateStructure>(p);
        adopt->stage = Stage::AdoptHead;
        send(ctx, s, "duplicateStructure", g, adopt);
        return;
      }
      case Stage::AdoptHead: {
        auto next = std::make_shared<WordActorState>(s);
        bool found = false;
        for (auto& d : next->deps) {
          if (d.modifier == p.old_child) {
            d.modifier = p.child_copy;
            found = true;
          }
        }
        if (!found) throw ProtocolFault("copied head does not govern the copied child");
        ctx.become(next);
        auto link = std::make_shared<HeadFound>();
        link->kind = HeadFound::Kind::Link;
        send(ctx, s, "headFound", p.child_copy, link);
        copy_dependents(ctx, s, p.reading, p.old_child);
        if (s.head.valid()) relink_up(ctx, s, p.reading, m.sender);
        return;
      }
    }
  }

  // Ask our original head (in the old reading) to copy itself into `into`
  // and govern us there. `original` is our counterpart in the old reading.
  void relink_up(Context& ctx, const WordActorState& s, ReadingId into, ActorRef original) {
    auto up = std::make_shared<DuplicateStructure>();
    up->stage = DuplicateStructure::Stage::CopyHead;
    up->reading = into;
    up->old_child = original;
    up->child_copy = ctx.self();
    send(ctx, s, "duplicateStructure", s.head, up);
  }

  ParseSession& session_;
};

}  // namespace

Message make_probe(ActorRef root, ActorRef target, int root_right_edge, ReadingId reading) {
  auto p = std::make_shared<Probe>();
  p->target = target;
  p->right_boundary = root_right_edge;
  return make("probe", root, p, reading);
}

// ---- WordActorState ----------------------------------------------------------

CandidateView WordActorState::view() const { return {word_class, feats, concept_name, position, order, occurs}; }

std::optional<ActorRef> WordActorState::acquaintance(std::string_view tag) const {
  if (tag == "head" && head.valid()) return head;
  return std::nullopt;
}

std::string WordActorState::digest() const {
  std::ostringstream os;
  os << "r" << reading << " " << position << ":" << form << " head=" << ref_str(head) << " deps=[";
  for (std::size_t i = 0; i < deps.size(); ++i) {
    os << (i ? "," : "") << deps[i].name << ":" << deps[i].position;
  }
  os << "] " << render_fs(feats);
  return os.str();
}

// ---- results -----------------------------------------------------------------

std::vector<const ReadingRecord*> ParseResult::complete() const {
  std::vector<const ReadingRecord*> out;
  for (const auto& r : readings) {
    if (r.complete) out.push_back(&r);
  }
  return out;
}

bool is_projective(const std::vector<Arc>& arcs, std::optional<int> root) {
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const int l1 = std::min(arcs[i].head, arcs[i].dep), r1 = std::max(arcs[i].head, arcs[i].dep);
    if (root && l1 < *root && *root < r1) return false;
    for (std::size_t j = i + 1; j < arcs.size(); ++j) {
      const int l2 = std::min(arcs[j].head, arcs[j].dep), r2 = std::max(arcs[j].head, arcs[j].dep);
      if ((l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1)) return false;
    }
  }
  return true;
}

// ---- ParseSession --------------------------------------------------------------

ParseSession::ParseSession(const GrammarBundle& grammar, ParseOptions options)
    : grammar_(grammar), options_(options) {
  if (options_.max_readings < 1) throw Error("max readings must be at least 1");
  register_behavior();
}

void ParseSession::register_behavior() {
  rt_.register_behavior(kWordActor, WordBehavior(*this));
}

std::optional<ReadingId> ParseSession::try_fork(ReadingId parent) {
  std::lock_guard lock(mu_);
  if (reading_count_ >= static_cast<std::size_t>(options_.max_readings)) return std::nullopt;
  const ReadingId id = next_reading_++;
  ++reading_count_;
  forks_.emplace_back(id, parent);
  return id;
}

void ParseSession::warn(const std::string& w) {
  std::lock_guard lock(mu_);
  if (std::find(warnings_.begin(), warnings_.end(), w) == warnings_.end()) warnings_.push_back(w);
}

std::map<int, ActorRef> ParseSession::members(ReadingId reading) const {
  std::map<int, ActorRef> out;
  for (ActorRef a : const_cast<Runtime&>(rt_).actors()) {
    auto st = std::dynamic_pointer_cast<const WordActorState>(rt_.state(a));
    if (!st || st->reading != reading) continue;
    if (!out.emplace(st->position, a).second) {
      throw ProtocolFault("reading " + std::to_string(reading) + " has two actors at position " +
                          std::to_string(st->position));
    }
  }
  return out;
}

std::vector<ReadingId> ParseSession::readings() const {
  std::lock_guard lock(mu_);
  std::vector<ReadingId> out;
  for (const auto& [id, _] : cursors_) out.push_back(id);
  return out;
}

ActorRef ParseSession::spawn_word(const LexemeEntry& entry, int position, ReadingId reading) {
  auto st = std::make_shared<WordActorState>();
  st->vals = entry.valencies;
  st->feats = entry.features;
  st->word_class = entry.word_class;
  st->concept_name = entry.concept_name;
  st->position = position;
  st->span_left = position;
  st->order = entry.order;
  st->occurs = initial_occurs(entry, position);
  st->reading = reading;
  st->form = entry.form;
  return rt_.spawn(kWordActor, st);
}

bool ParseSession::run_to_quiescence(ParseResult& out) {
  const RunResult r = rt_.run(options_.run);
  out.deliveries += r.deliveries;
  if (r.ok()) return true;
  out.status = r.status == RunStatus::Fault ? ParseStatus::ProtocolFault : ParseStatus::LivenessFailure;
  out.error = r.message;
  return false;
}

void ParseSession::clone_reading(ReadingId from, ReadingId into) {
  const auto present = members(into);
  for (const auto& [pos, a] : members(from)) {
    auto cp = std::static_pointer_cast<const WordActorState>(rt_.checkpoint(a));
    if (cp->governed() || present.contains(pos)) continue;
    auto cs = std::make_shared<CopyStructure>();
    cs->stage = CopyStructure::Stage::Copy;
    cs->reading = into;
    rt_.send(make("copyStructure", a, cs, cp->reading));
  }
}

bool ParseSession::complete_forks(std::size_t forks_before, ParseResult& out) {
  std::vector<std::pair<ReadingId, ReadingId>> fresh;
  {
    std::lock_guard lock(mu_);
    fresh.assign(forks_.begin() + static_cast<std::ptrdiff_t>(forks_before), forks_.end());
  }
  if (fresh.empty()) return true;
  for (const auto& [child, parent] : fresh) clone_reading(parent, child);
  return run_to_quiescence(out);
}

int ParseSession::right_edge(ReadingId reading, ActorRef root) const {
  int edge = 0;
  for (const auto& [pos, a] : members(reading)) {
    ActorRef top = a;
    for (auto st = std::static_pointer_cast<const WordActorState>(rt_.state(top)); st->governed();
         st = std::static_pointer_cast<const WordActorState>(rt_.state(top))) {
      top = st->head;
    }
    if (top == root) edge = std::max(edge, pos);
  }
  return edge;
}

ReadingRecord ParseSession::harvest(ReadingId id, const std::vector<std::string>& tokens) const {
  ReadingRecord rec;
  rec.id = id;
  rec.tokens = tokens;
  int roots = 0;
  for (const auto& [pos, a] : members(id)) {
    auto st = std::static_pointer_cast<const WordActorState>(rt_.state(a));
    for (const auto& d : st->deps) rec.arcs.push_back({pos, d.position, d.name});
    if (!st->governed()) {
      ++roots;
      rec.root = pos;
    }
    rec.features[pos] = st->feats;
    rec.occurs[pos] = st->occurs;
    rec.entry_class[pos] = st->word_class;
  }
  std::sort(rec.arcs.begin(), rec.arcs.end());
  rec.complete = roots == 1 && rec.features.size() == tokens.size();
  if (roots != 1) rec.root.reset();
  return rec;
}

ParseResult ParseSession::parse(const std::vector<std::string>& tokens) {
  if (!cursors_.empty() || next_reading_ != 1) throw Error("a parse session runs a single sentence");
  ParseResult out;
  const int n_tokens = static_cast<int>(tokens.size());

  for (int n = 1; n <= n_tokens; ++n) {
    const auto entries = grammar_.lookup(tokens[n - 1]);
    if (entries.empty()) {
      throw DeclarationError("unknown form '" + tokens[n - 1] + "' at position " + std::to_string(n));
    }

    // Lexical ambiguity: one reading per entry.
    std::vector<std::pair<ReadingId, const LexemeEntry*>> assign;
    if (n == 1) {
      for (const auto* e : entries) {
        std::lock_guard lock(mu_);
        if (reading_count_ >= static_cast<std::size_t>(options_.max_readings)) {
          warnings_.push_back("reading cap reached; entry '" + e->form + "' (" + e->word_class + ") dropped");
          break;
        }
        ++reading_count_;
        assign.emplace_back(next_reading_++, e);
      }
    } else {
      rt_.checkpoint_all();
      for (ReadingId r : readings()) {
        assign.emplace_back(r, entries[0]);
        for (std::size_t i = 1; i < entries.size(); ++i) {
          auto fork = try_fork(r);
          if (!fork) {
            warn("reading cap reached; entry '" + entries[i]->form + "' (" + entries[i]->word_class + ") dropped");
            continue;
          }
          clone_reading(r, *fork);
          assign.emplace_back(*fork, entries[i]);
        }
      }
      if (!run_to_quiescence(out)) break;
    }

    for (const auto& [r, e] : assign) {
      Cursor c;
      for (const auto& [pos, a] : members(r)) {
        auto st = std::static_pointer_cast<const WordActorState>(rt_.state(a));
        if (!st->governed()) c.roots.push_back(pos);
      }
      std::reverse(c.roots.begin(), c.roots.end());
      spawn_word(*e, n, r);
      cursors_[r] = c;
    }

    // Steps: probe roots nearest first until one declines, then search left.
    bool failed = false;
    while (!failed) {
      std::map<ReadingId, Cursor> before;
      bool any = false;
      rt_.checkpoint_all();
      for (auto& [r, c] : cursors_) {
        if (c.phase == Cursor::Phase::Done) continue;
        const auto mem = members(r);
        const ActorRef w = mem.at(n);
        auto ws = std::static_pointer_cast<const WordActorState>(rt_.state(w));
        if (c.phase == Cursor::Phase::Probing && c.next_root >= c.roots.size()) c.phase = Cursor::Phase::Searching;
        if (c.phase == Cursor::Phase::Probing) {
          const int root = c.roots[c.next_root];
          rt_.send(make_probe(mem.at(root), w, right_edge(r, mem.at(root)), r));
        } else {
          if (ws->span_left <= 1) {
            c.phase = Cursor::Phase::Done;
            continue;
          }
          auto p = std::make_shared<StartUp>();
          p->left = mem.at(ws->span_left - 1);
          rt_.send(make("startUp", w, p, r));
        }
        before[r] = c;
        any = true;
      }
      if (!any) break;

      std::size_t forks_before;
      {
        std::lock_guard lock(mu_);
        forks_before = forks_.size();
      }
      if (!run_to_quiescence(out) || !complete_forks(forks_before, out)) {
        failed = true;
        break;
      }
      std::vector<std::pair<ReadingId, ReadingId>> fresh;
      {
        std::lock_guard lock(mu_);
        fresh.assign(forks_.begin() + static_cast<std::ptrdiff_t>(forks_before), forks_.end());
      }
      for (const auto& [child, parent] : fresh) before[child] = before.at(parent);

      for (auto& [r, c] : before) {
        if (c.phase == Cursor::Phase::Searching) {
          c.phase = Cursor::Phase::Done;
        } else {
          // Farther roots are still probed; the guard turns away any that
          // no longer touch the new word's subtree.
          ++c.next_root;
        }
        cursors_[r] = c;
      }
    }
    if (failed || out.status != ParseStatus::Ok) break;
  }

  for (ReadingId r : readings()) out.readings.push_back(harvest(r, tokens));
  {
    std::lock_guard lock(mu_);
    out.warnings = warnings_;
  }
  return out;
}

}  // namespace parsetalk
