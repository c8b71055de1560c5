#pragma once

// Actor runtime: isolated actors with immutable state records, asynchronous
// direct and complex messages, reception tasks for termination detection,
// and two schedulers (seeded deterministic, multi-threaded concurrent).
//
// Each actor processes one message at a time. A complex message carries a
// distribute/compute table: on every delivery the runtime forwards a copy to
// each acquaintance whose distribute condition holds, then runs the
// receiver's behavior if a compute condition holds, then applies the
// post-compute distribute clauses.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace parsetalk {

using ActorId = std::uint64_t;
using TaskId = std::uint64_t;
using ReadingId = std::uint64_t;

struct ActorRef {
  ActorId id = 0;  // 0 is nil
  bool valid() const { return id != 0; }
  auto operator<=>(const ActorRef&) const = default;
};

struct Payload {
  virtual ~Payload() = default;
  virtual std::string digest() const = 0;
};

// Acquaintance record of an actor. Replaced wholesale by become().
struct ActorState {
  virtual ~ActorState() = default;
  virtual std::optional<ActorRef> acquaintance(std::string_view tag) const = 0;
  virtual std::string digest() const = 0;
};

struct ComplexMessageSpec;

struct Message {
  std::string kind;
  ActorRef sender;
  ActorRef target;
  ActorRef initiator;
  std::shared_ptr<const Payload> payload;
  ReadingId reading = 0;
  std::uint64_t seq = 0;                             // stamped by the runtime
  std::shared_ptr<const ComplexMessageSpec> complex;  // null for direct messages

  template <class T>
  const T& as() const {
    return dynamic_cast<const T&>(*payload);
  }
};

using Condition = std::function<bool(const ActorState& receiver, const Message&)>;

struct DistributeClause {
  Condition when;
  std::string tag;
};

struct ComplexMessageSpec {
  std::vector<DistributeClause> distribute;
  std::vector<Condition> compute;
  std::vector<DistributeClause> post_distribute;
};

enum class EventKind { Send, Deliver, Spawn, Become, TaskQueued, Receipt, TaskFired, Fault };

std::string_view event_kind_name(EventKind k);

struct Event {
  std::uint64_t step = 0;
  EventKind kind = EventKind::Send;
  ActorRef actor;
  std::string message_kind;
  std::string digest;
  // Not part of the trace file.
  ActorRef peer;  // target for send, sender for deliver
  std::uint64_t seq = 0;
  ReadingId reading = 0;
};

// step \t kind \t actor-id \t message-kind \t digest, one line per event.
std::string render_trace(const std::vector<Event>& events);

class Runtime;

// Handed to a behavior for the duration of one delivery.
class Context {
 public:
  ActorRef self() const { return self_; }
  const Message& message() const { return *message_; }
  // Acquaintances the current complex message was forwarded to before compute.
  const std::vector<ActorRef>& forwarded_to() const { return forwarded_; }
  Runtime& runtime() { return *rt_; }

  ActorRef spawn(const std::string& behavior, std::shared_ptr<const ActorState> state);
  void send(Message m);
  void depart(std::shared_ptr<const ComplexMessageSpec> spec, Message m);
  void become(std::shared_ptr<const ActorState> state);

  TaskId queue_reception_task(ActorRef first_target, std::vector<std::string> descriptors,
                              std::function<void(Context&)> continuation = {});
  void record_receipt(TaskId task, ActorRef from, const std::vector<ActorRef>& forwarded_to);

  // State of self as of the last Runtime::checkpoint_all().
  std::shared_ptr<const ActorState> checkpoint() const;

 private:
  friend class Runtime;
  Context(Runtime* rt, ActorRef self, const Message* m) : rt_(rt), self_(self), message_(m) {}
  Runtime* rt_;
  ActorRef self_;
  const Message* message_;
  std::vector<ActorRef> forwarded_;
};

using Behavior = std::function<void(Context&, const ActorState&, const Message&)>;

struct ReceptionTask {
  TaskId id = 0;
  ActorRef initiator;
  std::map<ActorRef, int> outstanding;  // receipts still owed per actor; negative = arrived early
  std::vector<std::string> descriptors;  // message kinds acceptable as receipts
  std::function<void(Context&)> continuation;
  bool fired = false;
};

enum class Mode { Deterministic, Concurrent };

struct RunOptions {
  Mode mode = Mode::Deterministic;
  std::uint64_t seed = 0;
  std::uint64_t step_bound = 1'000'000;
  unsigned threads = 4;
};

enum class RunStatus { Quiescent, Fault, StepBoundExceeded, Deadlock };

struct RunResult {
  RunStatus status = RunStatus::Quiescent;
  std::uint64_t deliveries = 0;
  std::string message;
  bool ok() const { return status == RunStatus::Quiescent; }
};

class Runtime {
 public:
  Runtime() = default;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void register_behavior(const std::string& name, Behavior b);

  // Setup-time operations (outside any handler).
  ActorRef spawn(const std::string& behavior, std::shared_ptr<const ActorState> state);
  void send(Message m);
  void depart(std::shared_ptr<const ComplexMessageSpec> spec, Message m);

  // Must be called from inside the actor's own handler; throws ProtocolFault otherwise.
  void become(ActorRef actor, std::shared_ptr<const ActorState> state);

  // Delivers until quiescent (no message in flight, no unfired task), a
  // fault, or the step bound. The seed is reused on each call, so repeated
  // calls on the same history are reproducible.
  RunResult run(const RunOptions& options);

  std::shared_ptr<const ActorState> state(ActorRef a) const;
  std::string behavior_of(ActorRef a) const;
  std::vector<ActorRef> actors() const;
  void checkpoint_all();
  std::shared_ptr<const ActorState> checkpoint(ActorRef a) const;

  const std::vector<Event>& trace() const { return trace_; }
  const std::map<TaskId, ReceptionTask>& tasks() const { return tasks_; }
  std::size_t in_flight() const;
  std::size_t pending_tasks() const;
  const std::vector<std::string>& faults() const { return faults_; }

 private:
  friend class Context;

  struct Slot {
    std::string behavior;
    std::shared_ptr<const ActorState> state;
    std::shared_ptr<const ActorState> checkpoint;
    std::vector<Message> mailbox;  // concurrent mode only
    bool busy = false;
  };

  ActorRef spawn_locked(const std::string& behavior, std::shared_ptr<const ActorState> state, ActorRef parent);
  void enqueue_locked(Message m, ActorRef from);
  void log_locked(EventKind k, ActorRef actor, std::string kind, std::string digest, ActorRef peer = {},
                  std::uint64_t seq = 0, ReadingId reading = 0);
  void fault_locked(const std::string& what, ActorRef actor);
  void deliver(Message m);
  RunResult run_deterministic(const RunOptions& o);
  RunResult run_concurrent(const RunOptions& o);

  TaskId queue_task(Context& ctx, ActorRef first_target, std::vector<std::string> descriptors,
                    std::function<void(Context&)> continuation);
  void receipt(Context& ctx, TaskId task, ActorRef from, const std::vector<ActorRef>& forwarded_to);

  mutable std::recursive_mutex mu_;
  std::map<std::string, Behavior> behaviors_;
  std::map<ActorId, Slot> actors_;
  std::vector<Message> pool_;  // deterministic mode: every message in flight
  std::map<TaskId, ReceptionTask> tasks_;
  std::vector<Event> trace_;
  std::vector<std::string> faults_;
  ActorId next_actor_ = 1;
  TaskId next_task_ = 1;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_step_ = 1;
  bool concurrent_ = false;
  std::vector<ActorId> ready_;  // concurrent mode: actors with mail and not busy
};

}  // namespace parsetalk
