#pragma once

// Grid-world scenario builders and ASCII rendering.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reactest/transition_system.hpp"

namespace reactest {

/// Screen geometry of a scenario: the base map and the cell (and mode, for
/// mode grids) of every transition-system state.
struct GridLayout {
  struct Cell {
    int x = 0;
    int y = 0;
    std::string mode;
  };
  std::vector<std::string> rows;  // base map, `S` marks the start
  std::vector<Cell> cells;        // per ts state
  std::vector<std::string> state_names;

  int width() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
  int height() const { return static_cast<int>(rows.size()); }
};

struct Scenario {
  std::string name;
  TransitionSystem ts;
  std::string sys_spec;
  std::string test_spec;
  GridLayout layout;
};

/// Maps a lowercase map character to the propositions holding on its cell.
using Legend = std::map<char, std::vector<std::string>>;

/// 1-D corridor c1..cn with `left`/`right` moves. Goal cells carry `goal`
/// and the i-th key cell carries `key_i`. Specs: <>goal and the
/// conjunction of <>key_i.
Scenario build_corridor(int n, int start, const std::vector<int>& goal_cells,
                        const std::vector<int>& key_cells);

/// 4-neighbour grid from an ASCII map (`#` wall, `.` free, `S` start,
/// lowercase letters bound through the legend). States are named rRcC.
/// Propositions are taken from `props`; every legend name must be in it.
Scenario build_grid(const std::string& map_text, const Legend& legend, const PropositionTable& props);

/// Grid in which entering a cell labelled `pickup` sets a carried flag that
/// stays set until a `drop` action, available off the pickup cell;
/// carrying states additionally hold `carry_prop` and are named with a `+`
/// suffix. Only states reachable from the start are built.
Scenario build_pickup_grid(const std::string& map_text, const Legend& legend,
                           const PropositionTable& props, const std::string& pickup,
                           const std::string& carry_prop);

struct ModeGraph {
  std::vector<std::string> modes;
  std::vector<std::pair<std::string, std::string>> edges;  // undirected switches
  std::vector<std::string> moving;  // modes in which the cell may change
  std::string start;
};

/// Grid x motion-primitive modes. Each mode name is a proposition holding in
/// that mode. Mode switches use the action `to_<mode>`; moves use the four
/// directions and are only available in moving modes. States are named
/// rRcC:mode. Throws BadModeGraph for unknown modes or modes unreachable from
/// the start mode.
Scenario build_mode_grid(const std::string& map_text, const Legend& legend,
                         const PropositionTable& props, const ModeGraph& modes);

/// Map text (rows joined by newlines) that rebuilds the same grid.
std::string render_map(const GridLayout& layout);

/// One frame: the agent as `@`, cells entered by blocked transitions as `#`
/// (when the transition changes cell), followed by a caption and the list of
/// blocked transitions.
std::string render_frame(const GridLayout& layout, int agent_state,
                         const std::vector<std::pair<int, int>>& blocked, const std::string& caption);

/// Replica of the beaver-rescue test: two rooms joined by two doors.
Scenario beaver_rescue_scenario();
/// Replica of the motion-primitive test on a small grid.
Scenario motion_primitive_scenario();

}  // namespace reactest
