#pragma once

// Brute-force reference parser: every projective single-root labelled tree
// over every lexical-entry choice, filtered by the SATISFIES clauses applied
// in the order an incremental left-to-right parser would establish the arcs.
// Exponential; meant for sentences of up to about eight tokens.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parsetalk/grammar.hpp"
#include "parsetalk/protocol.hpp"

namespace parsetalk {

struct OracleTree {
  std::vector<Arc> arcs;                      // sorted
  std::vector<const LexemeEntry*> entries;    // entries[i] is the entry for position i+1
  std::map<int, FeatureStructure> features;   // final features per position
  std::map<int, OccursMap> occurs;
  int root = 0;
};

struct TreeCheck {
  bool valid = false;
  std::string reason;  // first violated condition when invalid
  std::map<int, FeatureStructure> features;
  std::map<int, OccursMap> occurs;
};

// Arcs in the order the incremental parser establishes them: grouped by
// their right endpoint; within a group, left dependents nearest first, then
// the arc to the right endpoint's own head.
std::vector<Arc> attachment_order(std::vector<Arc> arcs);

// Structural checks (forest, single root, projective, distinct names per
// head) followed by one satisfies() per arc in attachment order, with
// feature and occurs updates threaded through.
TreeCheck check_tree(const GrammarBundle& bundle, const std::vector<const LexemeEntry*>& entries,
                     const std::vector<Arc>& arcs);
bool tree_valid(const GrammarBundle& bundle, const std::vector<const LexemeEntry*>& entries,
                const std::vector<Arc>& arcs);

// Whole-tree ordering clause: some tuple of the head has its occupied names
// at strictly increasing positions.
bool order_admits(const std::vector<OrderTuple>& order, const OccursMap& occurs);

// Throws DeclarationError for an unknown token.
std::vector<OracleTree> enumerate(const GrammarBundle& bundle, const std::vector<std::string>& tokens);

// Complete readings of a and b agree as sets: same arc sets, same entry
// classes, and equivalent features at every position.
bool same_complete_readings(const std::vector<ReadingRecord>& a, const std::vector<ReadingRecord>& b,
                            std::string* why = nullptr);

// Same record shape as ParseSession output (ids numbered from 1).
std::vector<ReadingRecord> oracle_records(const std::vector<OracleTree>& trees, const std::vector<std::string>& tokens);

}  // namespace parsetalk
