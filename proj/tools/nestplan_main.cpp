// Command-line front end: validate, hull, resolve, settle, sequence, plan, serve.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI/CLI.hpp>

#include "nestplan/io.hpp"
#include "nestplan/pipeline.hpp"
#include "nestplan/service.hpp"

using namespace nestplan;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  double cell_size = 0.0;
  std::string out;
};

void emit(const Globals& g, const Json& doc) {
  const std::string text = canonical(doc) + "\n";
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + g.out, g.out);
  f << text;
}

SpecDocument load_spec(const std::string& path, const ConstraintTree& tree) { return spec_from_json(load_json(path), &tree); }

Placement settled_placement(const SpecDocument& spec, const Scene& scene, const Globals& g,
                            const std::string& placement_file) {
  Placement start = placement_file.empty() ? resolve_poses(spec, scene.workspace, g.seed)
                                           : placement_from_json(load_json(placement_file).at("placement"));
  const SettleResult r = settle(spec, start, scene.workspace);
  if (!r.converged) throw Error(ErrorCode::NoConvergence, "settling left overlapping or unsupported parts");
  return r.placement;
}

SessionService* running = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical assembly constraints and planning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed for the pose solver and path planner");
  app.add_option("--cell-size", g.cell_size, "Grid cell size for hull point reduction (0 = automatic)");
  app.add_option("--out", g.out, "Write the result here instead of stdout");

  std::string scene_path, spec_path, placement_path, host = "127.0.0.1";
  int port = 8080;

  auto* validate = app.add_subcommand("validate", "Check a scene (and optionally a spec) file");
  validate->add_option("scene", scene_path)->required();
  validate->add_option("spec", spec_path);

  auto* hull = app.add_subcommand("hull", "Group and object hulls of a spec at its authored poses");
  hull->add_option("scene", scene_path)->required();
  hull->add_option("spec", spec_path)->required();

  auto* resolve = app.add_subcommand("resolve", "Solve world poses for the spec's groups");
  resolve->add_option("scene", scene_path)->required();
  resolve->add_option("spec", spec_path)->required();

  auto* settle_cmd = app.add_subcommand("settle", "Resolve (or load) a placement and settle it");
  settle_cmd->add_option("scene", scene_path)->required();
  settle_cmd->add_option("spec", spec_path)->required();
  settle_cmd->add_option("--placement", placement_path, "Output of `resolve` to start from");

  auto* sequence = app.add_subcommand("sequence", "Group tour and per-group object order");
  sequence->add_option("scene", scene_path)->required();
  sequence->add_option("spec", spec_path)->required();
  sequence->add_option("--placement", placement_path, "Output of `resolve` to start from");

  auto* plan = app.add_subcommand("plan", "Full plan: placement, order, configurations, paths");
  plan->add_option("scene", scene_path)->required();
  plan->add_option("spec", spec_path)->required();

  auto* serve = app.add_subcommand("serve", "Run the authoring session service");
  serve->add_option("scene", scene_path, "Scene used for new sessions");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    GroupHullOptions hull_options;
    hull_options.cell_size = g.cell_size;

    if (*serve) {
      Scene scene = scene_path.empty() ? Scene{} : load_scene(scene_path);
      if (scene_path.empty()) scene.arm = planar_arm();
      SessionService service(std::move(scene), g.seed);
      running = &service;
      std::signal(SIGINT, [](int) {
        if (running) running->stop();
      });
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!service.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on port " + std::to_string(port));
      return 0;
    }

    const Scene scene = load_scene(scene_path);
    const ConstraintTree tree = tree_from_scene(scene);

    if (*validate) {
      Json report{{"ok", true}, {"objects", scene.objects.size()}, {"arm", scene.arm.name}};
      if (!spec_path.empty()) {
        const SpecDocument spec = load_spec(spec_path, tree);
        report["groups"] = spec.groups.size();
        report["spec_objects"] = spec.objects.size();
      }
      emit(g, report);
      return 0;
    }

    const SpecDocument spec = load_spec(spec_path, tree);
    if (*hull) {
      Json groups = Json::object(), objects = Json::object();
      for (const auto& [id, h] : all_group_hulls(import_spec(spec), hull_options)) groups[id] = to_json(h);
      for (const auto& [id, h] : object_hulls(spec, authored_placement(spec))) objects[id] = to_json(h);
      emit(g, {{"format_version", kFormatVersion}, {"groups", groups}, {"objects", objects}});
    } else if (*resolve) {
      emit(g, {{"format_version", kFormatVersion}, {"placement", to_json(resolve_poses(spec, scene.workspace, g.seed))}});
    } else if (*settle_cmd) {
      Placement start = placement_path.empty() ? resolve_poses(spec, scene.workspace, g.seed)
                                               : placement_from_json(load_json(placement_path).at("placement"));
      emit(g, to_json(settle(spec, start, scene.workspace)));
    } else if (*sequence) {
      const Placement placed = settled_placement(spec, scene, g, placement_path);
      const AssemblyPlan p = assemble_plan(spec, placed, scene.workspace, scene.arm, g.seed, hull_options);
      Json seqs = Json::array();
      for (const auto& s : p.sequences) seqs.push_back(to_json(s));
      emit(g, {{"format_version", kFormatVersion}, {"tour", to_json(p.tour)}, {"sequences", seqs}});
    } else if (*plan) {
      PlanOptions options;
      options.seed = g.seed;
      options.hulls = hull_options;
      emit(g, to_json(plan_assembly(spec, scene.workspace, scene.arm, options)));
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << canonical(to_json(e)) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << canonical(to_json(Error(ErrorCode::Io, e.what()))) << "\n";
    return 1;
  }
}
