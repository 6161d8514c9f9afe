#include "reactest/scenario_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "reactest/error.hpp"

namespace reactest {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ValidationError, where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                const std::set<std::string>& required) {
  if (!obj.is_object()) invalid(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) invalid(where, "unknown key '" + key + "'");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) invalid(where, "missing key '" + key + "'");
  }
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) invalid(where + "." + key, "expected a string");
  return v.get<std::string>();
}

long long get_int(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) invalid(where + "." + key, "expected an integer");
  return v.get<long long>();
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) invalid(where + "." + key, "expected a number");
  return v.get<double>();
}

std::vector<std::string> get_strings(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_array()) invalid(where + "." + key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) invalid(where + "." + key, "expected an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

std::vector<int> get_ints(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_array()) invalid(where + "." + key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) invalid(where + "." + key, "expected an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::string join_rows(const std::vector<std::string>& rows) {
  std::string text;
  for (const auto& r : rows) text += r + '\n';
  return text;
}

Legend parse_legend(const json& obj, const std::string& where) {
  if (!obj.is_object()) invalid(where, "expected an object");
  Legend legend;
  for (const auto& [key, value] : obj.items()) {
    if (key.size() != 1 || key[0] < 'a' || key[0] > 'z') {
      invalid(where, "legend keys must be single lowercase letters, got '" + key + "'");
    }
    if (!value.is_array()) invalid(where + "." + key, "expected an array of strings");
    std::vector<std::string> names;
    for (const auto& x : value) {
      if (!x.is_string()) invalid(where + "." + key, "expected an array of strings");
      names.push_back(x.get<std::string>());
    }
    legend[key[0]] = std::move(names);
  }
  return legend;
}

Scenario build_world(const json& doc) {
  const json& world = doc.at("world");
  if (!world.is_object() || !world.contains("type")) invalid("world", "expected an object with a 'type'");
  const std::string type = get_string(world, "type", "world");

  if (type == "corridor") {
    check_keys(world, "world", {"type", "length", "start", "goals", "keys"},
               {"type", "length", "start", "goals", "keys"});
    Scenario sc = build_corridor(static_cast<int>(get_int(world, "length", "world")),
                                 static_cast<int>(get_int(world, "start", "world")),
                                 get_ints(world, "goals", "world"), get_ints(world, "keys", "world"));
    if (doc.contains("propositions")) {
      if (get_strings(doc, "propositions", "scenario") != sc.ts.props().names()) {
        invalid("propositions", "corridor propositions are goal, key_1, key_2, ...");
      }
    }
    return sc;
  }

  if (!doc.contains("propositions")) invalid("scenario", "missing key 'propositions'");
  const PropositionTable props(get_strings(doc, "propositions", "scenario"));
  if (type == "ascii_map") {
    check_keys(world, "world", {"type", "map", "legend", "pickup"}, {"type", "map", "legend"});
    const std::string map = join_rows(get_strings(world, "map", "world"));
    const Legend legend = parse_legend(world.at("legend"), "world.legend");
    if (world.contains("pickup")) {
      const json& pickup = world.at("pickup");
      check_keys(pickup, "world.pickup", {"label", "carry"}, {"label", "carry"});
      return build_pickup_grid(map, legend, props, get_string(pickup, "label", "world.pickup"),
                               get_string(pickup, "carry", "world.pickup"));
    }
    return build_grid(map, legend, props);
  }
  if (type == "mode_grid") {
    check_keys(world, "world", {"type", "map", "legend", "modes", "mode_edges", "moving", "start_mode"},
               {"type", "map", "legend", "modes", "mode_edges", "moving", "start_mode"});
    ModeGraph modes;
    modes.modes = get_strings(world, "modes", "world");
    modes.moving = get_strings(world, "moving", "world");
    modes.start = get_string(world, "start_mode", "world");
    const json& edges = world.at("mode_edges");
    if (!edges.is_array()) invalid("world.mode_edges", "expected an array of pairs");
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        invalid("world.mode_edges", "expected an array of [mode, mode] pairs");
      }
      modes.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return build_mode_grid(join_rows(get_strings(world, "map", "world")),
                           parse_legend(world.at("legend"), "world.legend"), props, modes);
  }
  invalid("world.type", "expected corridor, ascii_map or mode_grid, got '" + type + "'");
}

SolverConfig parse_solver(const json& obj) {
  check_keys(obj, "solver", {"mode", "lambda_grid", "threshold", "hard_bypass"}, {});
  SolverConfig c;
  if (obj.contains("mode")) {
    try {
      c.mode = parse_solver_mode(get_string(obj, "mode", "solver"));
    } catch (const Error& e) {
      invalid("solver.mode", e.what());
    }
  }
  if (obj.contains("lambda_grid")) {
    const auto& v = obj.at("lambda_grid");
    if (!v.is_array() || v.empty()) invalid("solver.lambda_grid", "expected a nonempty array of numbers");
    c.lambda_grid.clear();
    for (const auto& x : v) {
      if (!x.is_number() || x.get<double>() < 0) {
        invalid("solver.lambda_grid", "expected nonnegative numbers");
      }
      c.lambda_grid.push_back(x.get<double>());
    }
  }
  if (obj.contains("threshold")) {
    c.threshold = get_number(obj, "threshold", "solver");
    if (!(c.threshold > 0.0 && c.threshold <= 1.0)) invalid("solver.threshold", "expected a value in (0, 1]");
  }
  if (obj.contains("hard_bypass")) {
    if (!obj.at("hard_bypass").is_boolean()) invalid("solver.hard_bypass", "expected a boolean");
    c.hard_bypass = obj.at("hard_bypass").get<bool>();
  }
  return c;
}

AgentConfig parse_agent(const json& obj) {
  check_keys(obj, "agent", {"kind", "seed", "script"}, {});
  AgentConfig c;
  if (obj.contains("kind")) c.kind = get_string(obj, "kind", "agent");
  if (c.kind != "replanning" && c.kind != "random" && c.kind != "scripted") {
    invalid("agent.kind", "expected replanning, random or scripted");
  }
  if (obj.contains("seed")) {
    const auto seed = get_int(obj, "seed", "agent");
    if (seed < 0) invalid("agent.seed", "expected a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  if (obj.contains("script")) c.script = get_strings(obj, "script", "agent");
  if (c.kind == "scripted" && c.script.empty()) invalid("agent.script", "scripted agent needs a script");
  return c;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ValidationError, std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(doc, "scenario",
             {"name", "world", "propositions", "sys_spec", "test_spec", "solver", "agent", "max_steps"},
             {"name", "world"});
  ScenarioConfig cfg;
  cfg.scenario = build_world(doc);
  cfg.scenario.name = get_string(doc, "name", "scenario");
  if (doc.contains("sys_spec")) {
    cfg.scenario.sys_spec = get_string(doc, "sys_spec", "scenario");
  } else if (cfg.scenario.sys_spec.empty()) {
    invalid("scenario", "missing key 'sys_spec'");
  }
  if (doc.contains("test_spec")) {
    cfg.scenario.test_spec = get_string(doc, "test_spec", "scenario");
  } else if (cfg.scenario.test_spec.empty()) {
    invalid("scenario", "missing key 'test_spec'");
  }
  if (doc.contains("solver")) cfg.solver = parse_solver(doc.at("solver"));
  if (doc.contains("agent")) cfg.agent = parse_agent(doc.at("agent"));
  if (doc.contains("max_steps")) {
    const auto n = get_int(doc, "max_steps", "scenario");
    if (n < 0) invalid("max_steps", "expected a nonnegative integer");
    cfg.max_steps = static_cast<int>(n);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(read_text_file(path)); }

std::vector<std::string> bundled_scenario_names() {
  return {"corridor-5", "corridor-7", "corridor-9", "beaver-rescue", "motion-primitives"};
}

ScenarioConfig bundled_scenario(const std::string& name) {
  ScenarioConfig cfg;
  if (name == "corridor-5") {
    cfg.scenario = build_corridor(5, 3, {1, 5}, {2, 4});
  } else if (name == "corridor-7") {
    cfg.scenario = build_corridor(7, 4, {1, 7}, {2, 6});
  } else if (name == "corridor-9") {
    cfg.scenario = build_corridor(9, 5, {1, 9}, {2, 8});
  } else if (name == "beaver-rescue") {
    cfg.scenario = beaver_rescue_scenario();
  } else if (name == "motion-primitives") {
    cfg.scenario = motion_primitive_scenario();
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown bundled scenario '" + name + "'");
  }
  return cfg;
}

// ---------------------------------------------------------------------------

TestSetup Pipeline::setup(std::vector<int> cuts) const {
  TestSetup s;
  s.ts = &scenario.ts;
  s.graph = &graph;
  s.system = &system;
  s.b_sys = &b_sys;
  s.sys_spec = sys_spec;
  s.test_spec = test_spec;
  s.cuts = std::move(cuts);
  return s;
}

std::unique_ptr<Pipeline> build_pipeline(const Scenario& scenario) {
  auto p = std::make_unique<Pipeline>();
  p->scenario = scenario;
  const auto& props = p->scenario.ts.props();
  p->sys_spec = parse_spec(p->scenario.sys_spec, SpecRole::System, props);
  p->test_spec = parse_spec(p->scenario.test_spec, SpecRole::Test, props);
  p->b_sys = build_nba(p->sys_spec, props);
  p->b_test = build_nba(p->test_spec, props);
  const auto bpi = spec_product(p->b_sys, p->b_test, ProductMode::Synchronous, &props);
  p->graph = virtual_product(p->scenario.ts, bpi);
  p->system = system_product(p->scenario.ts, p->b_sys);
  p->problem = build_flow_problem(p->graph, p->system);
  p->hash = graph_hash(p->graph, p->scenario.ts);
  return p;
}

CutSolution synthesize(const Pipeline& p, const SolverConfig& config) {
  SolverOptions options;
  options.mode = config.mode;
  options.hard_bypass = config.hard_bypass;
  options.threshold = config.threshold;
  CutSolution s = sweep_lambda(p.problem, config.lambda_grid, options);
  if (!s.verification.passed()) {
    throw Error(ErrorKind::Infeasible, "synthesized cuts failed verification");
  }
  return s;
}

std::unique_ptr<SystemAgent> make_agent(const AgentConfig& config) {
  if (config.kind == "replanning") return std::make_unique<ReplanningAgent>();
  if (config.kind == "random") return std::make_unique<RandomAgent>(config.seed);
  if (config.kind == "scripted") return std::make_unique<ScriptedAgent>(config.script);
  throw Error(ErrorKind::InvalidArgument, "unknown agent kind '" + config.kind + "'");
}

CutFile parse_cut_file(const std::string& json_text) {
  CutFile out;
  try {
    const json j = json::parse(json_text);
    out.graph_hash = j.at("graph_hash").get<std::string>();
    for (const auto& c : j.at("cuts")) out.cuts.push_back(c.at("edge").get<int>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("malformed cut file: ") + e.what());
  }
  return out;
}

std::vector<std::string> render_trace(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line;
  GridLayout layout;
  std::map<std::string, int> index;
  bool have_layout = false;
  std::set<std::pair<int, int>> blocked;
  std::vector<std::string> frames;

  auto state_of = [&](const json& name) {
    const auto it = index.find(name.get<std::string>());
    if (it == index.end()) {
      throw Error(ErrorKind::ValidationError, "trace names unknown state " + name.get<std::string>());
    }
    return it->second;
  };
  auto edge_of = [&](const json& e) { return std::make_pair(state_of(e.at(0)), state_of(e.at(2))); };

  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "header") {
        if (!rec.contains("layout")) throw Error(ErrorKind::ValidationError, "trace header has no layout");
        const json& l = rec.at("layout");
        layout.rows = l.at("rows").get<std::vector<std::string>>();
        for (const auto& c : l.at("cells")) {
          index[c.at("state").get<std::string>()] = static_cast<int>(layout.cells.size());
          layout.state_names.push_back(c.at("state").get<std::string>());
          layout.cells.push_back({c.at("x").get<int>(), c.at("y").get<int>(), c.at("mode").get<std::string>()});
        }
        have_layout = true;
      } else if (type == "step") {
        if (!have_layout) throw Error(ErrorKind::ValidationError, "trace step before header");
        for (const auto& e : rec.at("retracted")) blocked.erase(edge_of(e));
        for (const auto& e : rec.at("activated")) blocked.insert(edge_of(e));
        std::string caption = "step " + std::to_string(rec.at("step").get<int>());
        if (!rec.at("action").is_null()) caption += "  action " + rec.at("action").get<std::string>();
        caption += "  spec " + rec.at("bpi").get<std::string>();
        frames.push_back(render_frame(layout, state_of(rec.at("s")),
                                      {blocked.begin(), blocked.end()}, caption));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("malformed trace: ") + e.what());
  }
  return frames;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + path);
}

}  // namespace reactest
