#pragma once

// Word-actor behavior and the scan controller.
//
// Every token becomes a word actor. Dependencies are negotiated in three
// steps: a candidate head receives a search (searchHead, or a rightAttach
// probe from an ungoverned word to the left), answers headFound for each
// satisfied valency, and the modifier answers headAccepted. A second
// headFound at an already governed modifier splits the reading: the
// modifier, its dependents and the offering head's whole structure are
// copied into a fresh reading (copyStructure / duplicateStructure) where the
// alternative attachment is made.
//
// searchHead is a complex message forwarded along `head` acquaintances, so
// a new word's head search only visits the right fringe of the structure to
// its left. Every search and every offer is tracked by a reception task.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parsetalk/grammar.hpp"
#include "parsetalk/runtime.hpp"
#include "parsetalk/satisfies.hpp"

namespace parsetalk {

inline constexpr const char* kWordActor = "wordActor";

struct DependencyRecord {
  std::string name;
  ActorRef modifier;
  int position = 0;
};

// Offer made by a head and not yet answered by the modifier.
struct PendingOffer {
  TaskId head_task = 0;
  ActorRef modifier;
  std::string name;
  FeatureStructure features_after;
  int modifier_position = 0;
  TaskId modifier_task = 0;           // modifier's search/probe task; 0 for re-issued offers
  std::vector<ActorRef> forwarded;    // what the originating search was forwarded to
};

struct WordActorState final : ActorState {
  ActorRef head;
  std::string head_name;  // dependency name under which this word is governed
  std::vector<DependencyRecord> deps;
  std::vector<Valency> vals;
  FeatureStructure feats;
  std::string word_class;
  std::string concept_name;
  int position = 0;
  int span_left = 0;  // leftmost position of the subtree
  std::vector<OrderTuple> order;
  OccursMap occurs;
  ReadingId reading = 0;
  std::string form;
  std::vector<PendingOffer> offers;
  std::set<std::pair<TaskId, ActorId>> expanded;  // (own task, head) offers already accounted

  bool governed() const { return head.valid(); }
  CandidateView view() const;

  std::optional<ActorRef> acquaintance(std::string_view tag) const override;
  std::string digest() const override;
};

struct Arc {
  int head = 0;
  int dep = 0;
  std::string name;
  auto operator<=>(const Arc&) const = default;
};

struct ReadingRecord {
  ReadingId id = 0;
  bool complete = false;
  std::vector<std::string> tokens;
  std::vector<Arc> arcs;  // sorted
  std::optional<int> root;
  std::map<int, FeatureStructure> features;  // final features per position
  std::map<int, OccursMap> occurs;
  std::map<int, std::string> entry_class;  // word class of the chosen entry
};

struct ParseOptions {
  RunOptions run;
  int max_readings = 64;
};

enum class ParseStatus { Ok, ProtocolFault, LivenessFailure };

struct ParseResult {
  ParseStatus status = ParseStatus::Ok;
  std::string error;
  std::vector<ReadingRecord> readings;  // ordered by reading id
  std::vector<std::string> warnings;
  std::uint64_t deliveries = 0;

  std::vector<const ReadingRecord*> complete() const;
};

// True iff no two arcs cross and no arc covers the root.
bool is_projective(const std::vector<Arc>& arcs, std::optional<int> root = std::nullopt);

// Controller message asking an ungoverned root to offer itself to target,
// the new word on its right; root_right_edge is the root's rightmost position.
Message make_probe(ActorRef root, ActorRef target, int root_right_edge, ReadingId reading);

class ParseSession {
 public:
  ParseSession(const GrammarBundle& grammar, ParseOptions options);
  ParseSession(const ParseSession&) = delete;
  ParseSession& operator=(const ParseSession&) = delete;

  // Throws DeclarationError for a token with no lexicon entry.
  ParseResult parse(const std::vector<std::string>& tokens);

  Runtime& runtime() { return rt_; }
  const GrammarBundle& grammar() const { return grammar_; }

  // Word actors of a reading keyed by position, from the current states.
  std::map<int, ActorRef> members(ReadingId reading) const;
  std::vector<ReadingId> readings() const;

  // Called from handlers; thread-safe.
  std::optional<ReadingId> try_fork(ReadingId parent);
  void warn(const std::string& w);

 private:
  struct Cursor {
    enum class Phase { Probing, Searching, Done } phase = Phase::Probing;
    std::vector<int> roots;  // positions, nearest first
    std::size_t next_root = 0;
  };

  void register_behavior();
  ActorRef spawn_word(const LexemeEntry& entry, int position, ReadingId reading);
  bool run_to_quiescence(ParseResult& out);
  bool complete_forks(std::size_t forks_before, ParseResult& out);
  void clone_reading(ReadingId from, ReadingId into);
  ReadingRecord harvest(ReadingId id, const std::vector<std::string>& tokens) const;
  // Rightmost position in the subtree headed by root, from current states.
  int right_edge(ReadingId reading, ActorRef root) const;

  const GrammarBundle& grammar_;
  ParseOptions options_;
  Runtime rt_;

  mutable std::mutex mu_;
  ReadingId next_reading_ = 1;
  std::size_t reading_count_ = 0;
  std::vector<std::pair<ReadingId, ReadingId>> forks_;  // (child, parent) in creation order
  std::vector<std::string> warnings_;
  std::map<ReadingId, Cursor> cursors_;
};

}  // namespace parsetalk
