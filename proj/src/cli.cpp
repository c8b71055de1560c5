#include "parsetalk/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "parsetalk/error.hpp"
#include "parsetalk/oracle.hpp"

namespace parsetalk {

using nlohmann::json;

json reading_to_json(const ReadingRecord& r) {
  json j;
  j["readingId"] = r.id;
  j["complete"] = r.complete;
  j["tokens"] = r.tokens;
  j["arcs"] = json::array();
  for (const auto& a : r.arcs) j["arcs"].push_back({{"head", a.head}, {"dep", a.dep}, {"name", a.name}});
  j["rootPos"] = r.root ? json(*r.root) : json(nullptr);
  json feats = json::object(), classes = json::object(), occurs = json::object();
  for (const auto& [pos, fs] : r.features) feats[std::to_string(pos)] = render_fs(fs);
  for (const auto& [pos, c] : r.entry_class) classes[std::to_string(pos)] = c;
  for (const auto& [pos, occ] : r.occurs) occurs[std::to_string(pos)] = occ;
  j["features"] = feats;
  j["classes"] = classes;
  j["occurs"] = occurs;
  return j;
}

ReadingRecord reading_from_json(const json& j) {
  ReadingRecord r;
  r.id = j.at("readingId").get<ReadingId>();
  r.complete = j.at("complete").get<bool>();
  r.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const auto& a : j.at("arcs")) r.arcs.push_back({a.at("head").get<int>(), a.at("dep").get<int>(), a.at("name").get<std::string>()});
  if (!j.at("rootPos").is_null()) r.root = j["rootPos"].get<int>();
  if (j.contains("features")) {
    for (const auto& [k, v] : j["features"].items()) r.features[std::stoi(k)] = parse_fs(v.get<std::string>());
  }
  if (j.contains("classes")) {
    for (const auto& [k, v] : j["classes"].items()) r.entry_class[std::stoi(k)] = v.get<std::string>();
  }
  if (j.contains("occurs")) {
    for (const auto& [k, v] : j["occurs"].items()) r.occurs[std::stoi(k)] = v.get<OccursMap>();
  }
  return r;
}

std::string render_tree(const ReadingRecord& r) {
  std::ostringstream os;
  os << "reading " << r.id << (r.complete ? " complete" : " incomplete") << '\n';
  std::map<int, std::vector<const Arc*>> children;
  std::set<int> governed;
  for (const auto& a : r.arcs) {
    children[a.head].push_back(&a);
    governed.insert(a.dep);
  }
  std::function<void(int, const std::string&, int)> walk = [&](int pos, const std::string& label, int depth) {
    os << std::string(2 * depth + 2, ' ');
    if (!label.empty()) os << label << ' ';
    os << pos << ' ' << r.tokens.at(pos - 1) << '\n';
    auto& kids = children[pos];
    std::sort(kids.begin(), kids.end(), [](const Arc* x, const Arc* y) { return x->dep < y->dep; });
    for (const Arc* a : kids) walk(a->dep, a->name, depth + 1);
  };
  for (int pos = 1; pos <= static_cast<int>(r.tokens.size()); ++pos) {
    if (!governed.contains(pos)) walk(pos, "", 0);
  }
  return os.str();
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw Error("malformed seed range '" + text + "'");
    }
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    out.push_back(number(text));
    return out;
  }
  const auto lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
  if (hi < lo) throw Error("empty seed range '" + text + "'");
  for (auto s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

namespace {

struct Config {
  std::string classes, concepts, lexicon;
  std::string mode = "deterministic";
  std::uint64_t seed = 0;
  int max_readings = 64;
  std::uint64_t step_bound = 1'000'000;
  unsigned threads = 4;
  std::string format = "json";
  std::string trace_out;
  std::string seeds;
  std::vector<std::string> words;

  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    for (const auto& w : words) {
      std::istringstream is(w);
      for (std::string t; is >> t;) out.push_back(t);
    }
    return out;
  }

  ParseOptions parse_options(std::uint64_t s) const {
    ParseOptions o;
    o.run.mode = mode == "concurrent" ? Mode::Concurrent : Mode::Deterministic;
    o.run.seed = s;
    o.run.step_bound = step_bound;
    o.run.threads = threads;
    o.max_readings = max_readings;
    return o;
  }
};

void add_grammar_options(CLI::App* cmd, Config& c) {
  cmd->add_option("--classes", c.classes, "class hierarchy (JSON)")->required();
  cmd->add_option("--concepts", c.concepts, "concept system (JSON)")->required();
  cmd->add_option("--lexicon", c.lexicon, "lexicon (JSON)")->required();
}

void add_run_options(CLI::App* cmd, Config& c) {
  cmd->add_option("--mode", c.mode, "scheduler")->check(CLI::IsMember({"deterministic", "concurrent"}));
  cmd->add_option("--seed", c.seed, "scheduler seed");
  cmd->add_option("--max-readings", c.max_readings, "cap on readings")->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--step-bound", c.step_bound, "delivery bound per run")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads in concurrent mode")->check(CLI::Range(1u, 256u));
}

void print_readings(std::ostream& out, const std::string& format, const std::vector<ReadingRecord>& rs,
                    const std::vector<std::string>& warnings) {
  if (format == "tree") {
    for (const auto& r : rs) out << render_tree(r);
    for (const auto& w : warnings) out << "warning: " << w << '\n';
    return;
  }
  json j;
  j["readings"] = json::array();
  for (const auto& r : rs) j["readings"].push_back(reading_to_json(r));
  j["warnings"] = warnings;
  out << j.dump(2) << '\n';
}

int cmd_validate(const Config& c, std::ostream& out) {
  load_bundle({c.classes, c.concepts, c.lexicon});
  out << "ok\n";
  return kExitOk;
}

int cmd_parse(const Config& c, std::ostream& out, std::ostream& err) {
  const auto bundle = load_bundle({c.classes, c.concepts, c.lexicon});
  ParseSession session(bundle, c.parse_options(c.seed));
  const auto result = session.parse(c.tokens());
  if (!c.trace_out.empty()) {
    std::ofstream t(c.trace_out, std::ios::binary);
    if (!t) throw Error("cannot write trace to '" + c.trace_out + "'");
    t << render_trace(session.runtime().trace());
  }
  if (result.status != ParseStatus::Ok) {
    err << (result.status == ParseStatus::ProtocolFault ? "protocol fault: " : "liveness failure: ") << result.error
        << '\n';
    return kExitFault;
  }
  print_readings(out, c.format, result.readings, result.warnings);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  return result.complete().empty() ? kExitNoParse : kExitOk;
}

int cmd_oracle(const Config& c, std::ostream& out) {
  const auto bundle = load_bundle({c.classes, c.concepts, c.lexicon});
  const auto tokens = c.tokens();
  const auto records = oracle_records(enumerate(bundle, tokens), tokens);
  print_readings(out, c.format, records, {});
  return records.empty() ? kExitNoParse : kExitOk;
}

int cmd_sweep(const Config& c, std::ostream& out, std::ostream& err) {
  const auto seeds = parse_seed_range(c.seeds);
  const auto bundle = load_bundle({c.classes, c.concepts, c.lexicon});
  const auto tokens = c.tokens();
  const auto oracle = oracle_records(enumerate(bundle, tokens), tokens);
  bool identical = true, matches = true;
  std::vector<ReadingRecord> first;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    ParseSession session(bundle, c.parse_options(seeds[i]));
    const auto result = session.parse(tokens);
    if (result.status != ParseStatus::Ok) {
      err << "seed " << seeds[i] << ": " << result.error << '\n';
      return kExitFault;
    }
    std::string why;
    if (i == 0) {
      first = result.readings;
    } else if (!same_complete_readings(first, result.readings, &why)) {
      identical = false;
      err << "seed " << seeds[i] << " differs from seed " << seeds[0] << ": " << why << '\n';
    }
    if (!same_complete_readings(oracle, result.readings, &why)) {
      matches = false;
      err << "seed " << seeds[i] << " differs from the oracle: " << why << '\n';
    }
  }
  out << "seeds: " << seeds.size() << '\n'
      << "identical: " << (identical ? "true" : "false") << '\n'
      << "oracle-match: " << (matches ? "true" : "false") << '\n';
  return identical && matches ? kExitOk : kExitNoParse;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concurrent lexicalized dependency parser", "parsetalk"};
  app.require_subcommand(1);
  Config c;

  auto* validate = app.add_subcommand("validate", "load a grammar bundle and report diagnostics");
  add_grammar_options(validate, c);

  auto* parse = app.add_subcommand("parse", "parse a whitespace-separated sentence");
  add_grammar_options(parse, c);
  add_run_options(parse, c);
  parse->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "tree"}));
  parse->add_option("--trace-out", c.trace_out, "write the event trace here");
  parse->add_option("tokens", c.words, "sentence")->required();

  auto* oracle = app.add_subcommand("oracle", "enumerate all valid trees by brute force");
  add_grammar_options(oracle, c);
  oracle->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "tree"}));
  oracle->add_option("tokens", c.words, "sentence")->required();

  auto* sweep = app.add_subcommand("sweep", "parse under many seeds and compare with the oracle");
  add_grammar_options(sweep, c);
  add_run_options(sweep, c);
  sweep->add_option("--seeds", c.seeds, "seed range a..b")->required();
  sweep->add_option("tokens", c.words, "sentence")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(c, out);
    if (*parse) return cmd_parse(c, out, err);
    if (*oracle) return cmd_oracle(c, out);
    return cmd_sweep(c, out, err);
  } catch (const LoadError& e) {
    for (const auto& d : e.diagnostics()) err << d << '\n';
    return kExitLoad;
  } catch (const SyntaxError& e) {
    err << e.what() << '\n';
    return kExitLoad;
  } catch (const DeclarationError& e) {
    err << e.what() << '\n';
    return kExitLoad;
  } catch (const ProtocolFault& e) {
    err << "protocol fault: " << e.what() << '\n';
    return kExitFault;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace parsetalk
