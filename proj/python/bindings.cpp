// Python entry points. Documents cross the boundary as JSON text; the
// nestplan package converts to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nestplan/error.hpp"
#include "nestplan/hull.hpp"
#include "nestplan/io.hpp"
#include "nestplan/kinematics.hpp"
#include "nestplan/pipeline.hpp"
#include "nestplan/placement.hpp"
#include "nestplan/sequence.hpp"
#include "nestplan/service.hpp"

namespace py = pybind11;
using namespace nestplan;

namespace {

struct Loaded {
  Scene scene;
  ConstraintTree tree;
  SpecDocument spec;
};

// Arguments are JSON text or, when they do not start with '{', a file path.
bool is_document(const std::string& s) {
  const auto i = s.find_first_not_of(" \t\r\n");
  return i != std::string::npos && s[i] == '{';
}

Json read_json(const std::string& s) { return is_document(s) ? parse_json(s) : load_json(s); }

Scene read_scene(const std::string& s) { return is_document(s) ? scene_from_json(parse_json(s)) : load_scene(s); }

Loaded load(const std::string& scene, const std::string& spec) {
  Loaded l;
  l.scene = read_scene(scene);
  l.tree = tree_from_scene(l.scene);
  l.spec = spec_from_json(read_json(spec), &l.tree);
  return l;
}

std::vector<Vec3> to_points(const std::vector<std::array<double, 3>>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(p[0], p[1], p[2]);
  return out;
}

std::vector<std::array<double, 3>> from_points(const std::vector<Vec3>& pts) {
  std::vector<std::array<double, 3>> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.x(), p.y(), p.z()});
  return out;
}

JointConfig to_config(const std::vector<double>& q) {
  return Eigen::Map<const JointConfig>(q.data(), static_cast<Eigen::Index>(q.size()));
}

std::vector<double> from_config(const JointConfig& q) { return {q.data(), q.data() + q.size()}; }

class Session {
 public:
  explicit Session(const std::string& scene, std::uint64_t seed)
      : service_(scene.empty() ? Scene{{}, {}, planar_arm()} : read_scene(scene), seed) {}

  std::pair<int, std::string> request(const std::string& method, const std::string& path, const std::string& body,
                                      const std::map<std::string, std::string>& query) {
    const auto r = service_.handle({method, path, body, query});
    return {r.status, canonical(r.body)};
  }

  std::vector<std::pair<std::uint64_t, std::string>> events(const std::string& session, std::uint64_t after) const {
    std::vector<std::pair<std::uint64_t, std::string>> out;
    for (const auto& e : service_.events(session, after)) out.emplace_back(e.seq, canonical(e.data));
    return out;
  }

  int serve() { return service_.start_background(); }
  void stop() { service_.stop(); }

 private:
  SessionService service_;
};

}  // namespace

PYBIND11_MODULE(_nestplan, m) {
  m.doc() = "Assembly-constraint engine and planner";

  static py::exception<Error> error(m, "NestplanError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, canonical(to_json(e)).c_str());
    }
  });

  m.def(
      "quickhull",
      [](const std::vector<std::array<double, 3>>& points, bool parallel) {
        QuickhullOptions o;
        o.parallel = parallel;
        return canonical(to_json(quickhull(to_points(points), o)));
      },
      py::arg("points"), py::arg("parallel") = true, "Convex hull of a point list as a JSON document.");

  m.def(
      "reduce",
      [](const std::vector<std::array<double, 3>>& points, double cell_size) {
        const auto pts = to_points(points);
        const Reduction r = reduce(pts, cell_size > 0.0 ? cell_size : default_cell_size(pts));
        return py::make_tuple(from_points(r.representatives), r.grid.touches, r.grid.cells.size());
      },
      py::arg("points"), py::arg("cell_size") = 0.0, "Grid reduction: (representatives, touches, occupied cells).");

  m.def(
      "validate_scene", [](const std::string& scene) { return canonical(scene_to_json(read_scene(scene))); },
      py::arg("scene"), "Parses and re-emits a scene in canonical form.");

  m.def(
      "group_hulls",
      [](const std::string& scene, const std::string& spec) {
        const Loaded l = load(scene, spec);
        Json out = Json::object();
        for (const auto& [id, h] : all_group_hulls(import_spec(l.spec))) out[id] = to_json(h);
        return canonical(out);
      },
      py::arg("scene"), py::arg("spec"));

  m.def(
      "resolve",
      [](const std::string& scene, const std::string& spec, std::uint64_t seed) {
        const Loaded l = load(scene, spec);
        return canonical(to_json(resolve_poses(l.spec, l.scene.workspace, seed)));
      },
      py::arg("scene"), py::arg("spec"), py::arg("seed") = 0);

  m.def(
      "settle",
      [](const std::string& scene, const std::string& spec, const std::string& placement) {
        const Loaded l = load(scene, spec);
        return canonical(to_json(settle(l.spec, placement_from_json(read_json(placement)), l.scene.workspace)));
      },
      py::arg("scene"), py::arg("spec"), py::arg("placement"));

  m.def(
      "plan",
      [](const std::string& scene, const std::string& spec, std::uint64_t seed) {
        const Loaded l = load(scene, spec);
        PlanOptions o;
        o.seed = seed;
        py::gil_scoped_release release;
        return canonical(to_json(plan_assembly(l.spec, l.scene.workspace, l.scene.arm, o)));
      },
      py::arg("scene"), py::arg("spec"), py::arg("seed") = 0);

  m.def(
      "fk", [](const std::string& arm, const std::vector<double>& q) {
        return canonical(to_json(fk(arm_from_json(read_json(arm)), to_config(q))));
      },
      py::arg("arm"), py::arg("q"));

  m.def(
      "ik",
      [](const std::string& arm, const std::string& pose, const std::vector<double>& seed) {
        const ArmModel model = arm_from_json(read_json(arm));
        return from_config(ik(model, pose_from_json(read_json(pose)), seed.empty() ? model.home_config() : to_config(seed)));
      },
      py::arg("arm"), py::arg("pose"), py::arg("seed") = std::vector<double>{});

  m.def(
      "order_groups",
      [](const std::map<std::string, std::array<double, 3>>& centroids, std::array<double, 3> base,
         const std::map<std::string, std::optional<std::string>>& parents) {
        std::map<std::string, Vec3> c;
        for (const auto& [id, p] : centroids) c[id] = Vec3(p[0], p[1], p[2]);
        const GroupTour t = order_groups(c, Vec3(base[0], base[1], base[2]), Hierarchy(parents.begin(), parents.end()));
        return py::make_tuple(t.order, t.length);
      },
      py::arg("centroids"), py::arg("base") = std::array<double, 3>{0, 0, 0},
      py::arg("parents") = std::map<std::string, std::optional<std::string>>{});

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("scene") = "", py::arg("seed") = 0)
      .def("request", &Session::request, py::arg("method"), py::arg("path"), py::arg("body") = "",
           py::arg("query") = std::map<std::string, std::string>{})
      .def("events", &Session::events, py::arg("session"), py::arg("after") = 0)
      .def("serve", &Session::serve, "Starts the HTTP service on a free local port and returns it.")
      .def("stop", &Session::stop);
}
