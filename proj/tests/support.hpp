#pragma once

// Shared test helpers: fixture access, random generators, and reference
// implementations written independently of the library (path-set model of
// feature structures, brute-force permit, literal SATISFIES evaluator).

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "parsetalk/grammar.hpp"
#include "parsetalk/protocol.hpp"
#include "parsetalk/satisfies.hpp"

namespace testsupport {

using namespace parsetalk;

std::string fixture_path(const std::string& file);
const GrammarBundle& fixture(bool ambiguous = false);
std::vector<std::string> split(const std::string& sentence);

struct FixtureSentence {
  std::string lexicon;
  std::string sentence;
  bool ambiguous() const { return lexicon == "lexicon-ambiguous.json"; }
};
std::vector<FixtureSentence> fixture_sentences();

inline const char* kNotebookSentence = "Compaq entwickelt einen Notebook mit einer 120-MByte-Harddisk";

// Random feature-structure text over a small alphabet, with coreference.
// May describe a cyclic structure; callers parse and skip SyntaxError.
std::string random_fs_text(std::mt19937_64& rng, int depth = 3);
FeatureStructure random_fs(std::mt19937_64& rng, int depth = 3);

// ---- path-set model ----------------------------------------------------------
// A structure as its set of label paths, a partition of the paths into
// shared nodes, and the symbol set constraining each atomic node.

using Path = std::vector<std::string>;

struct PathModel {
  bool bottom = false;
  std::map<Path, int> cls;                       // path -> class id (canonical: min path order)
  std::map<int, std::set<std::string>> symbols;  // class -> allowed symbols (absent = unconstrained)
  bool operator==(const PathModel&) const = default;
};

PathModel model_of(const FeatureStructure& fs);
PathModel model_unify(const PathModel& a, const PathModel& b);
PathModel model_expand(const std::string& label, const PathModel& m);
PathModel model_extract(const PathModel& m, const std::string& label);

// ---- concepts -------------------------------------------------------------------

struct RandomConcepts {
  ConceptSystem cs;
  std::vector<std::string> concepts, roles;
  std::map<std::string, std::vector<std::string>> parents;
  std::vector<CicTriple> cic;
};
RandomConcepts random_concepts(std::mt19937_64& rng, int max_concepts = 20, int max_roles = 10, int max_cic = 30);

// Closure enumeration: for every cic (f, r, g), every x below f and y below g.
std::set<std::tuple<std::string, std::string, std::string>> brute_permit(const RandomConcepts& rc);

// ---- SATISFIES reference ----------------------------------------------------

struct SatisfiesWorld {
  std::map<std::string, std::string> class_parent;  // class -> parent ("" for root)
  RandomConcepts concepts;
};

bool literal_satisfies(const CandidateView& mod, const Valency& val, const CandidateView& head,
                       const SatisfiesWorld& w);

// Random (modifier, valency, head) triple over a small random class tree and
// concept system, with names drawn so that every clause fails now and then.
struct SatisfiesCase {
  SatisfiesWorld world;
  ClassHierarchy classes{"K0"};
  CandidateView mod, head;
  Valency val;
};
SatisfiesCase random_satisfies_case(std::mt19937_64& rng);

// Runs a complete parse and returns the result with the session's trace.
struct ParseRun {
  ParseResult result;
  std::vector<Event> trace;
  std::map<TaskId, ReceptionTask> tasks;
  std::vector<std::string> faults;
};
ParseRun run_parse(const GrammarBundle& g, const std::vector<std::string>& tokens, std::uint64_t seed,
                   Mode mode = Mode::Deterministic, int max_readings = 64);

}  // namespace testsupport
