#pragma once

// Command-line front end: validate, parse, oracle, sweep.
//
// Exit codes: 0 success; 1 no complete reading / sweep divergence;
// 2 grammar load or unknown token; 3 protocol fault or liveness failure;
// 64 usage error.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "parsetalk/protocol.hpp"

namespace parsetalk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoParse = 1;
inline constexpr int kExitLoad = 2;
inline constexpr int kExitFault = 3;
inline constexpr int kExitUsage = 64;

nlohmann::json reading_to_json(const ReadingRecord& r);
ReadingRecord reading_from_json(const nlohmann::json& j);

// Indented dependency tree, one word per line ("name pos form").
std::string render_tree(const ReadingRecord& r);

// "a..b" inclusive, or a single number. Throws Error on malformed or empty ranges.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace parsetalk
