#include "marsupial/graph.hpp"
#include "marsupial/map_export.hpp"
#include "marsupial/mission.hpp"
#include "marsupial/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace marsupial;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ScenarioSpec load(const std::string& path, const std::vector<std::string>& sets) {
  ScenarioSpec spec = load_scenario_file(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate_scenario(spec);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marsupial ground/aerial exploration simulator"};
  app.require_subcommand(1);
  std::vector<std::string> sets;

  std::string scenario_path, out_dir, policy, team = "marsupial", run_dir;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "Run one mission");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--policy", policy, "Ground policy after deployment")
      ->check(CLI::IsMember({"continue", "wait", "home"}));
  run->add_option("--team", team, "Agents taking part")
      ->check(CLI::IsMember({"ground_only", "aerial_only", "marsupial"}));
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--set", sets, "Override a setting, key=value (repeatable)")->take_all();

  auto* compare = app.add_subcommand("compare", "Run ground_only, aerial_only and marsupial");
  compare->add_option("scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--seed", seed, "Random seed");
  compare->add_option("--policy", policy, "Ground policy after deployment")
      ->check(CLI::IsMember({"continue", "wait", "home"}));
  compare->add_option("--set", sets, "Override a setting, key=value (repeatable)")->take_all();

  auto* exp = app.add_subcommand("export-map", "Write voxel and surface exports of a finished run");
  exp->add_option("run_dir", run_dir, "Directory written by `run`")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ScenarioSpec spec = load(scenario_path, sets);
      if (!policy.empty()) spec.config.mission.policy = parse_policy(policy);
      Mission mission(spec, seed, parse_team(team));
      const MissionResult r = mission.run();
      const fs::path out(out_dir);
      fs::create_directories(out);
      std::string log;
      for (const auto& line : r.log) log += line + "\n";
      write_file(out / "events.log", log);
      write_file(out / "metrics", r.metrics.to_text());
      write_file(out / "final_map.grid", save_grid(r.merged_map));
      const auto& st = r.final_state;
      if (st.ground.active) write_file(out / "graph_ground_global.txt", export_graph(st.ground.global));
      if (st.aerial.active) write_file(out / "graph_aerial_global.txt", export_graph(st.aerial.global));
      write_file(out / "graph_deployment.txt", export_graph(mission.deployment_graph().graph));
      write_file(out / "run.info", fmt::format("scenario={}\nseed={}\nteam={}\npolicy={}\n", scenario_path, seed,
                                               team, to_string(spec.config.mission.policy)));
      std::cout << r.metrics.to_text();
      return r.metrics.exit_code;
    }
    if (compare->parsed()) {
      ScenarioSpec spec = load(scenario_path, sets);
      if (!policy.empty()) spec.config.mission.policy = parse_policy(policy);
      std::cout << format_comparison(compare_runs(spec, seed));
      return 0;
    }
    if (exp->parsed()) {
      const fs::path dir(run_dir);
      const VoxelGrid grid = load_grid(read_file(dir / "final_map.grid"));
      write_file(dir / "map_voxels.txt", export_voxels(grid));
      write_file(dir / "map_surface.txt", export_surface(grid));
      std::cout << fmt::format("wrote {} and {}\n", (dir / "map_voxels.txt").string(),
                               (dir / "map_surface.txt").string());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
