#include "reactest/scenarios.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "reactest/error.hpp"

namespace reactest {

namespace {

struct Move {
  const char* action;
  int dx;
  int dy;
};
constexpr Move kMoves[] = {{"up", 0, -1}, {"down", 0, 1}, {"left", -1, 0}, {"right", 1, 0}};

struct ParsedMap {
  std::vector<std::string> rows;
  int start_x = -1;
  int start_y = -1;

  int width() const { return static_cast<int>(rows.front().size()); }
  int height() const { return static_cast<int>(rows.size()); }
  bool free(int x, int y) const {
    return y >= 0 && y < height() && x >= 0 && x < width() && rows[y][x] != '#';
  }
};

ParsedMap parse_map(const std::string& text, const Legend& legend) {
  ParsedMap m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    m.rows.push_back(line);
  }
  while (!m.rows.empty() && m.rows.back().empty()) m.rows.pop_back();
  if (m.rows.empty()) throw Error(ErrorKind::MapParseError, "empty map");
  for (std::size_t y = 0; y < m.rows.size(); ++y) {
    if (m.rows[y].size() != m.rows.front().size()) {
      throw Error(ErrorKind::MapParseError, "map is not rectangular (row " + std::to_string(y) + ")");
    }
    for (std::size_t x = 0; x < m.rows[y].size(); ++x) {
      const char c = m.rows[y][x];
      if (c == '#' || c == '.') continue;
      if (c == 'S') {
        if (m.start_x >= 0) throw Error(ErrorKind::MapParseError, "more than one start cell");
        m.start_x = static_cast<int>(x);
        m.start_y = static_cast<int>(y);
        continue;
      }
      if (c < 'a' || c > 'z') {
        throw Error(ErrorKind::MapParseError, std::string("unexpected map character '") + c + "'");
      }
      if (!legend.count(c)) {
        throw Error(ErrorKind::MapParseError, std::string("character '") + c + "' has no legend entry");
      }
    }
  }
  if (m.start_x < 0) throw Error(ErrorKind::MapParseError, "map has no start cell");
  return m;
}

LabelSet cell_labels(const ParsedMap& m, const Legend& legend, const PropositionTable& props, int x,
                     int y) {
  const char c = m.rows[y][x];
  auto it = legend.find(c);
  if (it == legend.end()) return 0;
  return props.labels(it->second);
}

std::string cell_name(int x, int y) { return "r" + std::to_string(y) + "c" + std::to_string(x); }

void check_legend(const Legend& legend, const PropositionTable& props) {
  for (const auto& [c, names] : legend) {
    if (c < 'a' || c > 'z') {
      throw Error(ErrorKind::MapParseError, std::string("legend key '") + c + "' is not lowercase");
    }
    for (const auto& n : names) props.index(n);
  }
}

}  // namespace

Scenario build_corridor(int n, int start, const std::vector<int>& goal_cells,
                        const std::vector<int>& key_cells) {
  if (n < 1) throw Error(ErrorKind::BadGeometry, "corridor needs at least one cell");
  auto in_range = [n](int c) { return c >= 1 && c <= n; };
  if (!in_range(start)) throw Error(ErrorKind::BadGeometry, "start outside the corridor");
  std::set<int> seen;
  for (int c : goal_cells) {
    if (!in_range(c)) throw Error(ErrorKind::BadGeometry, "goal cell outside the corridor");
    if (!seen.insert(c).second) throw Error(ErrorKind::BadGeometry, "goal/key cells must be distinct");
  }
  for (int c : key_cells) {
    if (!in_range(c)) throw Error(ErrorKind::BadGeometry, "key cell outside the corridor");
    if (!seen.insert(c).second) throw Error(ErrorKind::BadGeometry, "goal/key cells must be distinct");
  }
  if (goal_cells.empty()) throw Error(ErrorKind::BadGeometry, "corridor needs a goal cell");
  if (key_cells.empty()) throw Error(ErrorKind::BadGeometry, "corridor needs a key cell");
  if (key_cells.size() > 26) throw Error(ErrorKind::BadGeometry, "too many keys");

  PropositionTable props;
  const int goal = props.add("goal");
  std::vector<int> key_props;
  for (std::size_t i = 0; i < key_cells.size(); ++i) {
    key_props.push_back(props.add("key_" + std::to_string(i + 1)));
  }

  Scenario sc;
  sc.name = "corridor-" + std::to_string(n);
  sc.ts = TransitionSystem(props);
  std::string row(n, '.');
  for (int c = 1; c <= n; ++c) {
    LabelSet l = 0;
    if (std::find(goal_cells.begin(), goal_cells.end(), c) != goal_cells.end()) {
      l |= LabelSet{1} << goal;
      row[c - 1] = 'g';
    }
    for (std::size_t i = 0; i < key_cells.size(); ++i) {
      if (key_cells[i] == c) {
        l |= LabelSet{1} << key_props[i];
        row[c - 1] = static_cast<char>('a' + i);
      }
    }
    sc.ts.add_state("c" + std::to_string(c), l);
    sc.layout.cells.push_back({c - 1, 0, ""});
    sc.layout.state_names.push_back("c" + std::to_string(c));
  }
  row[start - 1] = 'S';
  sc.layout.rows = {row};
  sc.ts.add_action("left");
  sc.ts.add_action("right");
  for (int c = 0; c < n; ++c) {
    if (c > 0) sc.ts.add_edge(c, "left", c - 1);
    if (c + 1 < n) sc.ts.add_edge(c, "right", c + 1);
  }
  sc.ts.add_initial(start - 1);
  sc.sys_spec = "<> (goal)";
  for (std::size_t i = 0; i < key_cells.size(); ++i) {
    if (i) sc.test_spec += " && ";
    sc.test_spec += "<> (key_" + std::to_string(i + 1) + ")";
  }
  return sc;
}

Scenario build_grid(const std::string& map_text, const Legend& legend,
                    const PropositionTable& props) {
  check_legend(legend, props);
  const ParsedMap m = parse_map(map_text, legend);
  Scenario sc;
  sc.ts = TransitionSystem(props);
  sc.layout.rows = m.rows;
  std::vector<std::vector<int>> id(m.height(), std::vector<int>(m.width(), -1));
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.free(x, y)) continue;
      id[y][x] = sc.ts.add_state(cell_name(x, y), cell_labels(m, legend, props, x, y));
      sc.layout.cells.push_back({x, y, ""});
      sc.layout.state_names.push_back(cell_name(x, y));
    }
  }
  for (const auto& mv : kMoves) sc.ts.add_action(mv.action);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (id[y][x] < 0) continue;
      for (const auto& mv : kMoves) {
        if (m.free(x + mv.dx, y + mv.dy)) sc.ts.add_edge(id[y][x], mv.action, id[y + mv.dy][x + mv.dx]);
      }
    }
  }
  sc.ts.add_initial(id[m.start_y][m.start_x]);
  return sc;
}

Scenario build_pickup_grid(const std::string& map_text, const Legend& legend,
                           const PropositionTable& props, const std::string& pickup,
                           const std::string& carry_prop) {
  check_legend(legend, props);
  const ParsedMap m = parse_map(map_text, legend);
  const LabelSet pickup_bit = LabelSet{1} << props.index(pickup);
  const LabelSet carry_bit = LabelSet{1} << props.index(carry_prop);
  const int w = m.width();
  auto key = [w](int x, int y, int flag) { return (flag * 1000000) + y * w + x; };
  auto flag_after = [&](int x, int y, int flag) {
    return (flag || (cell_labels(m, legend, props, x, y) & pickup_bit)) ? 1 : 0;
  };

  // Reachable (cell, flag) pairs.
  std::set<std::tuple<int, int, int>> reach;  // (flag, y, x)
  std::vector<std::tuple<int, int, int>> queue;
  const int f0 = flag_after(m.start_x, m.start_y, 0);
  reach.insert({f0, m.start_y, m.start_x});
  queue.push_back({f0, m.start_y, m.start_x});
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto [f, y, x] = queue[head];
    for (const auto& mv : kMoves) {
      const int nx = x + mv.dx, ny = y + mv.dy;
      if (!m.free(nx, ny)) continue;
      const std::tuple<int, int, int> next{flag_after(nx, ny, f), ny, nx};
      if (reach.insert(next).second) queue.push_back(next);
    }
    if (f && !flag_after(x, y, 0)) {
      const std::tuple<int, int, int> dropped{0, y, x};
      if (reach.insert(dropped).second) queue.push_back(dropped);
    }
  }

  Scenario sc;
  sc.ts = TransitionSystem(props);
  sc.layout.rows = m.rows;
  std::map<int, int> id;
  for (const auto& [f, y, x] : reach) {
    LabelSet l = cell_labels(m, legend, props, x, y);
    if (f) l |= carry_bit;
    const std::string name = cell_name(x, y) + (f ? "+" : "");
    id[key(x, y, f)] = sc.ts.add_state(name, l);
    sc.layout.cells.push_back({x, y, f ? "carrying" : ""});
    sc.layout.state_names.push_back(name);
  }
  for (const auto& mv : kMoves) sc.ts.add_action(mv.action);
  for (const auto& [f, y, x] : reach) {
    for (const auto& mv : kMoves) {
      const int nx = x + mv.dx, ny = y + mv.dy;
      if (!m.free(nx, ny)) continue;
      sc.ts.add_edge(id.at(key(x, y, f)), mv.action, id.at(key(nx, ny, flag_after(nx, ny, f))));
    }
    if (f && !flag_after(x, y, 0)) sc.ts.add_edge(id.at(key(x, y, 1)), "drop", id.at(key(x, y, 0)));
  }
  sc.ts.add_initial(id.at(key(m.start_x, m.start_y, f0)));
  return sc;
}

Scenario build_mode_grid(const std::string& map_text, const Legend& legend,
                         const PropositionTable& props, const ModeGraph& modes) {
  check_legend(legend, props);
  const ParsedMap m = parse_map(map_text, legend);
  if (modes.modes.empty()) throw Error(ErrorKind::BadModeGraph, "no modes");
  std::map<std::string, int> mode_index;
  for (const auto& name : modes.modes) {
    if (!mode_index.emplace(name, static_cast<int>(mode_index.size())).second) {
      throw Error(ErrorKind::BadModeGraph, "duplicate mode " + name);
    }
    if (!props.find(name)) throw Error(ErrorKind::BadModeGraph, "mode " + name + " is not a proposition");
  }
  auto mode_of = [&](const std::string& name) {
    auto it = mode_index.find(name);
    if (it == mode_index.end()) throw Error(ErrorKind::BadModeGraph, "unknown mode " + name);
    return it->second;
  };
  const int k = static_cast<int>(modes.modes.size());
  std::vector<std::vector<int>> adj(k);
  for (const auto& [a, b] : modes.edges) {
    const int ia = mode_of(a), ib = mode_of(b);
    if (ia == ib) throw Error(ErrorKind::BadModeGraph, "self switch on mode " + a);
    adj[ia].push_back(ib);
    adj[ib].push_back(ia);
  }
  std::vector<bool> moving(k, false);
  for (const auto& name : modes.moving) moving[mode_of(name)] = true;
  const int start_mode = mode_of(modes.start);
  std::vector<bool> seen(k, false);
  std::vector<int> stack{start_mode};
  seen[start_mode] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    if (!seen[i]) {
      throw Error(ErrorKind::BadModeGraph, "mode " + modes.modes[i] + " unreachable from " + modes.start);
    }
  }

  Scenario sc;
  sc.ts = TransitionSystem(props);
  sc.layout.rows = m.rows;
  std::vector<std::vector<int>> cell_id(m.height(), std::vector<int>(m.width(), -1));
  int cells = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.free(x, y)) continue;
      cell_id[y][x] = cells++;
      const LabelSet base = cell_labels(m, legend, props, x, y);
      for (int i = 0; i < k; ++i) {
        const std::string name = cell_name(x, y) + ":" + modes.modes[i];
        sc.ts.add_state(name, base | (LabelSet{1} << props.index(modes.modes[i])));
        sc.layout.cells.push_back({x, y, modes.modes[i]});
        sc.layout.state_names.push_back(name);
      }
    }
  }
  for (const auto& mv : kMoves) sc.ts.add_action(mv.action);
  for (const auto& name : modes.modes) sc.ts.add_action("to_" + name);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (cell_id[y][x] < 0) continue;
      for (int i = 0; i < k; ++i) {
        const int s = cell_id[y][x] * k + i;
        if (moving[i]) {
          for (const auto& mv : kMoves) {
            if (m.free(x + mv.dx, y + mv.dy)) {
              sc.ts.add_edge(s, mv.action, cell_id[y + mv.dy][x + mv.dx] * k + i);
            }
          }
        }
        std::vector<int> targets = adj[i];
        std::sort(targets.begin(), targets.end());
        for (int j : targets) sc.ts.add_edge(s, "to_" + modes.modes[j], cell_id[y][x] * k + j);
      }
    }
  }
  sc.ts.add_initial(cell_id[m.start_y][m.start_x] * k + start_mode);
  return sc;
}

std::string render_map(const GridLayout& layout) {
  std::string out;
  for (const auto& r : layout.rows) out += r + "\n";
  return out;
}

std::string render_frame(const GridLayout& layout, int agent_state,
                         const std::vector<std::pair<int, int>>& blocked, const std::string& caption) {
  std::vector<std::string> rows = layout.rows;
  for (auto& r : rows) std::replace(r.begin(), r.end(), 'S', '.');
  const auto& here = layout.cells.at(agent_state);
  for (const auto& [from, to] : blocked) {
    const auto& a = layout.cells.at(from);
    const auto& b = layout.cells.at(to);
    if (a.x == b.x && a.y == b.y) continue;
    if (b.x == here.x && b.y == here.y) continue;
    rows.at(b.y).at(b.x) = '#';
  }
  rows.at(here.y).at(here.x) = '@';
  std::string out;
  for (const auto& r : rows) out += r + "\n";
  out += caption;
  if (!here.mode.empty()) out += " mode=" + here.mode;
  out += "\n";
  for (const auto& [from, to] : blocked) {
    out += "  blocked: " + layout.state_names.at(from) + " -> " + layout.state_names.at(to) + "\n";
  }
  return out;
}

Scenario beaver_rescue_scenario() {
  // Lab on top, hallway below. Each door is one cell wide on the lab side
  // and two cells wide on the hallway side. The robot starts above door_2,
  // which opens onto the beaver; a door is cheapest to shut at its lab-side
  // cell, once per context.
  const std::string map =
      "#######\n"
      "##g.S##\n"
      "#xx#yy#\n"
      "#...b.#\n"
      "#....##\n"
      "#######\n";
  PropositionTable props({"door_1", "door_2", "beaver", "safe", "carry"});
  const Legend legend{{'x', {"door_1"}}, {'y', {"door_2"}}, {'b', {"beaver"}}, {'g', {"safe"}}};
  Scenario sc = build_pickup_grid(map, legend, props, "beaver", "carry");
  sc.name = "beaver-rescue";
  sc.sys_spec = "<> (safe && carry)";
  sc.test_spec = "<> (door_1) && <> (door_2)";
  return sc;
}

Scenario motion_primitive_scenario() {
  const std::string map =
      "#####\n"
      "#S.g#\n"
      "#####\n";
  PropositionTable props({"goal", "lie", "stand", "walk", "jump"});
  const Legend legend{{'g', {"goal"}}};
  ModeGraph modes;
  modes.modes = {"lie", "stand", "walk", "jump"};
  // Jump is reachable only from stand; walking and jumping change the cell.
  modes.edges = {{"lie", "stand"}, {"stand", "walk"}, {"stand", "jump"}};
  modes.moving = {"walk", "jump"};
  modes.start = "walk";
  Scenario sc = build_mode_grid(map, legend, props, modes);
  sc.name = "motion-primitives";
  sc.sys_spec = "<> (goal)";
  sc.test_spec = "<> (jump) && <> (lie) && <> (stand)";
  return sc;
}

}  // namespace reactest
