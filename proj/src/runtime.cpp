#include "parsetalk/runtime.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <sstream>
#include <thread>

#include "parsetalk/error.hpp"

namespace parsetalk {

namespace {

// Actor whose handler is running on this thread (0 outside handlers).
thread_local ActorId tl_current = 0;

std::string ref_name(ActorRef r) { return r.valid() ? "a" + std::to_string(r.id) : "nil"; }

std::string refs(const std::vector<ActorRef>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + ref_name(v[i]);
  return s + "]";
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\t', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string_view event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Send:
      return "send";
    case EventKind::Deliver:
      return "deliver";
    case EventKind::Spawn:
      return "spawn";
    case EventKind::Become:
      return "become";
    case EventKind::TaskQueued:
      return "task-queued";
    case EventKind::Receipt:
      return "receipt";
    case EventKind::TaskFired:
      return "task-fired";
    case EventKind::Fault:
      return "fault";
  }
  return "?";
}

std::string render_trace(const std::vector<Event>& events) {
  std::ostringstream os;
  for (const auto& e : events) {
    os << e.step << '\t' << event_kind_name(e.kind) << '\t' << e.actor.id << '\t' << e.message_kind << '\t'
       << one_line(e.digest) << '\n';
  }
  return os.str();
}

// ---- Context ---------------------------------------------------------------

ActorRef Context::spawn(const std::string& behavior, std::shared_ptr<const ActorState> state) {
  std::lock_guard lock(rt_->mu_);
  return rt_->spawn_locked(behavior, std::move(state), self_);
}

void Context::send(Message m) {
  m.sender = self_;
  m.complex = nullptr;
  std::lock_guard lock(rt_->mu_);
  rt_->enqueue_locked(std::move(m), self_);
}

void Context::depart(std::shared_ptr<const ComplexMessageSpec> spec, Message m) {
  m.sender = self_;
  m.complex = std::move(spec);
  std::lock_guard lock(rt_->mu_);
  rt_->enqueue_locked(std::move(m), self_);
}

void Context::become(std::shared_ptr<const ActorState> state) { rt_->become(self_, std::move(state)); }

TaskId Context::queue_reception_task(ActorRef first_target, std::vector<std::string> descriptors,
                                     std::function<void(Context&)> continuation) {
  return rt_->queue_task(*this, first_target, std::move(descriptors), std::move(continuation));
}

void Context::record_receipt(TaskId task, ActorRef from, const std::vector<ActorRef>& forwarded_to) {
  rt_->receipt(*this, task, from, forwarded_to);
}

std::shared_ptr<const ActorState> Context::checkpoint() const { return rt_->checkpoint(self_); }

// ---- Runtime ---------------------------------------------------------------

void Runtime::register_behavior(const std::string& name, Behavior b) {
  std::lock_guard lock(mu_);
  behaviors_[name] = std::move(b);
}

ActorRef Runtime::spawn(const std::string& behavior, std::shared_ptr<const ActorState> state) {
  std::lock_guard lock(mu_);
  return spawn_locked(behavior, std::move(state), {});
}

ActorRef Runtime::spawn_locked(const std::string& behavior, std::shared_ptr<const ActorState> state,
                               ActorRef parent) {
  if (!behaviors_.count(behavior)) throw Error("unknown behavior '" + behavior + "'");
  const ActorRef ref{next_actor_++};
  Slot slot;
  slot.behavior = behavior;
  slot.state = std::move(state);
  slot.checkpoint = slot.state;
  log_locked(EventKind::Spawn, ref, behavior, slot.state ? slot.state->digest() : "", parent);
  actors_.emplace(ref.id, std::move(slot));
  return ref;
}

void Runtime::send(Message m) {
  m.complex = nullptr;
  const ActorRef from = m.sender;
  std::lock_guard lock(mu_);
  enqueue_locked(std::move(m), from);
}

void Runtime::depart(std::shared_ptr<const ComplexMessageSpec> spec, Message m) {
  m.complex = std::move(spec);
  const ActorRef from = m.sender;
  std::lock_guard lock(mu_);
  enqueue_locked(std::move(m), from);
}

void Runtime::enqueue_locked(Message m, ActorRef from) {
  m.seq = next_seq_++;
  log_locked(EventKind::Send, from, m.kind, m.payload ? m.payload->digest() : "", m.target, m.seq, m.reading);
  if (concurrent_) {
    auto it = actors_.find(m.target.id);
    if (it == actors_.end()) {
      fault_locked("undeliverable " + m.kind + " to " + ref_name(m.target), from);
      return;
    }
    it->second.mailbox.push_back(std::move(m));
    if (!it->second.busy && std::find(ready_.begin(), ready_.end(), it->first) == ready_.end()) {
      ready_.push_back(it->first);
    }
  } else {
    pool_.push_back(std::move(m));
  }
}

void Runtime::log_locked(EventKind k, ActorRef actor, std::string kind, std::string digest, ActorRef peer,
                         std::uint64_t seq, ReadingId reading) {
  Event e;
  e.step = next_step_++;
  e.kind = k;
  e.actor = actor;
  e.message_kind = std::move(kind);
  e.digest = std::move(digest);
  e.peer = peer;
  e.seq = seq;
  e.reading = reading;
  trace_.push_back(std::move(e));
}

void Runtime::fault_locked(const std::string& what, ActorRef actor) {
  faults_.push_back(what);
  log_locked(EventKind::Fault, actor, "", what);
}

void Runtime::become(ActorRef actor, std::shared_ptr<const ActorState> state) {
  if (tl_current != actor.id) {
    throw ProtocolFault("become on " + ref_name(actor) + " outside its own handler");
  }
  std::lock_guard lock(mu_);
  auto& slot = actors_.at(actor.id);
  slot.state = std::move(state);
  log_locked(EventKind::Become, actor, "", slot.state ? slot.state->digest() : "");
}

std::shared_ptr<const ActorState> Runtime::state(ActorRef a) const {
  std::lock_guard lock(mu_);
  auto it = actors_.find(a.id);
  return it == actors_.end() ? nullptr : it->second.state;
}

std::string Runtime::behavior_of(ActorRef a) const {
  std::lock_guard lock(mu_);
  auto it = actors_.find(a.id);
  return it == actors_.end() ? std::string() : it->second.behavior;
}

std::vector<ActorRef> Runtime::actors() const {
  std::lock_guard lock(mu_);
  std::vector<ActorRef> out;
  for (const auto& [id, _] : actors_) out.push_back(ActorRef{id});
  return out;
}

void Runtime::checkpoint_all() {
  std::lock_guard lock(mu_);
  for (auto& [_, slot] : actors_) slot.checkpoint = slot.state;
}

std::shared_ptr<const ActorState> Runtime::checkpoint(ActorRef a) const {
  std::lock_guard lock(mu_);
  auto it = actors_.find(a.id);
  return it == actors_.end() ? nullptr : it->second.checkpoint;
}

std::size_t Runtime::in_flight() const {
  std::lock_guard lock(mu_);
  std::size_t n = pool_.size();
  for (const auto& [_, slot] : actors_) n += slot.mailbox.size();
  return n;
}

std::size_t Runtime::pending_tasks() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(tasks_.begin(), tasks_.end(), [](const auto& kv) { return !kv.second.fired; }));
}

TaskId Runtime::queue_task(Context& ctx, ActorRef first_target, std::vector<std::string> descriptors,
                           std::function<void(Context&)> continuation) {
  std::lock_guard lock(mu_);
  ReceptionTask t;
  t.id = next_task_++;
  t.initiator = ctx.self();
  t.outstanding[first_target] = 1;
  t.descriptors = std::move(descriptors);
  t.continuation = std::move(continuation);
  log_locked(EventKind::TaskQueued, ctx.self(), ctx.message().kind,
             "task=" + std::to_string(t.id) + " outstanding=" + refs({first_target}));
  const TaskId id = t.id;
  tasks_.emplace(id, std::move(t));
  return id;
}

void Runtime::receipt(Context& ctx, TaskId task, ActorRef from, const std::vector<ActorRef>& forwarded_to) {
  std::function<void(Context&)> fire;
  {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task);
    const std::string what = "receipt for task " + std::to_string(task) + " from " + ref_name(from);
    if (it == tasks_.end()) throw ProtocolFault(what + ": no such task");
    ReceptionTask& t = it->second;
    if (t.fired) throw ProtocolFault(what + ": task already fired");
    if (t.initiator != ctx.self()) throw ProtocolFault(what + ": recorded by non-initiator " + ref_name(ctx.self()));
    if (!t.descriptors.empty() &&
        std::find(t.descriptors.begin(), t.descriptors.end(), ctx.message().kind) == t.descriptors.end()) {
      throw ProtocolFault(what + ": message kind " + ctx.message().kind + " not expected");
    }
    // A forwarded copy can be receipted before the forwarder reports it;
    // the balance then goes negative until the report arrives.
    auto settle = [&](ActorRef a, int delta) {
      if ((t.outstanding[a] += delta) == 0) t.outstanding.erase(a);
    };
    settle(from, -1);
    for (const auto& f : forwarded_to) settle(f, +1);
    log_locked(EventKind::Receipt, ctx.self(), ctx.message().kind,
               "task=" + std::to_string(task) + " from=" + ref_name(from) + " fwd=" + refs(forwarded_to));
    if (t.outstanding.empty()) {
      t.fired = true;
      log_locked(EventKind::TaskFired, ctx.self(), ctx.message().kind, "task=" + std::to_string(task));
      fire = t.continuation;
    }
  }
  if (fire) fire(ctx);
}

void Runtime::deliver(Message m) {
  std::shared_ptr<const ActorState> st;
  Behavior behavior;
  {
    std::lock_guard lock(mu_);
    auto it = actors_.find(m.target.id);
    if (it == actors_.end()) {
      fault_locked("undeliverable " + m.kind + " to " + ref_name(m.target), m.sender);
      return;
    }
    st = it->second.state;
    behavior = behaviors_.at(it->second.behavior);
    log_locked(EventKind::Deliver, m.target, m.kind, m.payload ? m.payload->digest() : "", m.sender, m.seq,
               m.reading);
  }
  Context ctx(this, m.target, &m);
  const ActorId saved = tl_current;
  tl_current = m.target.id;
  try {
    auto distribute = [&](const std::vector<DistributeClause>& clauses, const ActorState& s) {
      for (const auto& c : clauses) {
        if (!c.when(s, m)) continue;
        auto to = s.acquaintance(c.tag);
        if (!to || !to->valid()) continue;
        Message copy = m;
        copy.sender = m.target;
        copy.target = *to;
        std::lock_guard lock(mu_);
        enqueue_locked(std::move(copy), m.target);
        ctx.forwarded_.push_back(*to);
      }
    };
    if (m.complex) {
      distribute(m.complex->distribute, *st);
      const bool compute =
          std::any_of(m.complex->compute.begin(), m.complex->compute.end(), [&](const Condition& c) { return c(*st, m); });
      if (compute) behavior(ctx, *st, m);
      if (!m.complex->post_distribute.empty()) distribute(m.complex->post_distribute, *state(m.target));
    } else {
      behavior(ctx, *st, m);
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    fault_locked(e.what(), m.target);
  }
  tl_current = saved;
}

RunResult Runtime::run(const RunOptions& options) {
  return options.mode == Mode::Concurrent ? run_concurrent(options) : run_deterministic(options);
}

RunResult Runtime::run_deterministic(const RunOptions& o) {
  std::mt19937_64 rng(o.seed);
  RunResult r;
  const std::size_t faults_before = faults_.size();
  while (true) {
    if (faults_.size() > faults_before) {
      r.status = RunStatus::Fault;
      r.message = faults_.back();
      return r;
    }
    if (pool_.empty()) {
      if (pending_tasks() > 0) {
        r.status = RunStatus::Deadlock;
        r.message = std::to_string(pending_tasks()) + " reception task(s) never fired";
        std::lock_guard lock(mu_);
        fault_locked(r.message, {});
      }
      return r;
    }
    if (r.deliveries >= o.step_bound) {
      r.status = RunStatus::StepBoundExceeded;
      r.message = "step bound " + std::to_string(o.step_bound) + " exceeded";
      return r;
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    const std::size_t idx = pick(rng);
    Message m = std::move(pool_[idx]);
    if (idx + 1 != pool_.size()) pool_[idx] = std::move(pool_.back());
    pool_.pop_back();
    deliver(std::move(m));
    ++r.deliveries;
  }
}

RunResult Runtime::run_concurrent(const RunOptions& o) {
  std::condition_variable_any cv;
  std::size_t active = 0;
  bool stop = false;
  RunResult r;
  std::size_t faults_before;
  {
    std::lock_guard lock(mu_);
    faults_before = faults_.size();
    concurrent_ = true;
    std::vector<Message> pending;
    pending.swap(pool_);
    std::sort(pending.begin(), pending.end(), [](const Message& a, const Message& b) { return a.seq < b.seq; });
    for (auto& m : pending) {
      auto it = actors_.find(m.target.id);
      if (it == actors_.end()) {
        fault_locked("undeliverable " + m.kind + " to " + ref_name(m.target), m.sender);
        continue;
      }
      it->second.mailbox.push_back(std::move(m));
      if (std::find(ready_.begin(), ready_.end(), it->first) == ready_.end()) ready_.push_back(it->first);
    }
  }

  auto worker = [&] {
    std::unique_lock lock(mu_);
    while (true) {
      cv.wait(lock, [&] { return stop || !ready_.empty() || active == 0; });
      if (stop || (ready_.empty() && active == 0)) break;
      const ActorId id = ready_.front();
      ready_.erase(ready_.begin());
      Slot& slot = actors_.at(id);
      slot.busy = true;
      Message m = std::move(slot.mailbox.front());
      slot.mailbox.erase(slot.mailbox.begin());
      ++active;
      lock.unlock();
      deliver(std::move(m));
      lock.lock();
      --active;
      ++r.deliveries;
      Slot& after = actors_.at(id);
      after.busy = false;
      if (!after.mailbox.empty()) ready_.push_back(id);
      if (faults_.size() > faults_before || r.deliveries >= o.step_bound) stop = true;
      cv.notify_all();
    }
    cv.notify_all();
  };

  std::vector<std::thread> threads;
  for (unsigned i = 0; i < std::max(1u, o.threads); ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::lock_guard lock(mu_);
  concurrent_ = false;
  ready_.clear();
  std::vector<Message> rest;
  for (auto& [_, slot] : actors_) {
    for (auto& m : slot.mailbox) rest.push_back(std::move(m));
    slot.mailbox.clear();
  }
  std::sort(rest.begin(), rest.end(), [](const Message& a, const Message& b) { return a.seq < b.seq; });
  for (auto& m : rest) pool_.push_back(std::move(m));

  if (faults_.size() > faults_before) {
    r.status = RunStatus::Fault;
    r.message = faults_.back();
  } else if (!pool_.empty()) {
    r.status = RunStatus::StepBoundExceeded;
    r.message = "step bound " + std::to_string(o.step_bound) + " exceeded";
  } else if (pending_tasks() > 0) {
    r.status = RunStatus::Deadlock;
    r.message = std::to_string(pending_tasks()) + " reception task(s) never fired";
    fault_locked(r.message, {});
  }
  return r;
}

}  // namespace parsetalk
