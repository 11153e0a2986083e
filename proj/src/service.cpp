#include "nestplan/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace nestplan {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownId:
      return 404;
    case ErrorCode::AlreadyGrouped:
    case ErrorCode::GroupFrozen:
    case ErrorCode::CycleError:
    case ErrorCode::NotRoot:
    case ErrorCode::AlreadyExported:
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::Schema:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NegativePadding:
    case ErrorCode::EmptyInput:
    case ErrorCode::NonPositiveCell:
    case ErrorCode::DegenerateInput:
    case ErrorCode::DegenerateMesh:
    case ErrorCode::FormatVersion:
    case ErrorCode::InvalidSpec:
    case ErrorCode::LimitViolation:
      return 400;
    case ErrorCode::Io:
      return 500;
    default:
      return 422;  // planning failures on a well-formed request
  }
}

namespace {

struct Session {
  mutable std::mutex mutex;
  ConstraintTree tree;
  Scene scene;
  std::map<std::string, Hull> hulls;
  std::vector<SessionService::Event> events;
  std::vector<SpecDocument> exports;
  std::uint64_t seq = 0;
};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream in(path);
  for (std::string part; std::getline(in, part, '/');)
    if (!part.empty()) parts.push_back(part);
  return parts;
}

std::string string_field(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) throw Error(ErrorCode::Schema, std::string("body needs string field \"") + key + "\"");
  return it->get<std::string>();
}

Vec3 parse_cursor(const std::string& text) {
  std::stringstream in(text);
  Vec3 p;
  char comma = 0;
  if (!(in >> p.x() >> comma >> p.y() >> comma >> p.z()) || !in.eof())
    throw Error(ErrorCode::Schema, "cursor must be x,y,z");
  return p;
}

Json hulls_json(const std::map<std::string, Hull>& hulls) {
  Json out = Json::object();
  for (const auto& [id, h] : hulls) out[id] = to_json(h);
  return out;
}

}  // namespace

struct SessionService::Impl {
  Scene default_scene;
  std::uint64_t seed = 0;
  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_session = 1;
  mutable std::condition_variable_any changed;
  mutable std::mutex changed_mutex;
  std::atomic<bool> stopping{false};
  httplib::Server server;
  std::thread worker;

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::UnknownId, "no session " + id, id);
    return it->second;
  }

  Response create(const Json& body) {
    auto s = std::make_shared<Session>();
    s->scene = body.is_object() && body.contains("objects") ? scene_from_json(body) : default_scene;
    s->tree = tree_from_scene(s->scene);
    std::string id;
    {
      std::lock_guard lock(sessions_mutex);
      id = "s" + std::to_string(next_session++);
      sessions[id] = s;
    }
    return {200, {{"session", id}, {"tree", tree_to_json(s->tree)}}};
  }

  /// Applies `op` to a copy of the tree; commits and publishes on success.
  template <class Fn>
  Response mutate(Session& s, const std::string& name, Fn&& op) {
    std::lock_guard lock(s.mutex);
    ConstraintTree next = s.tree;
    Json extra = op(next);
    auto hulls = all_group_hulls(next);
    Json changed_hulls = Json::object();
    Json removed = Json::array();
    for (const auto& [id, h] : hulls) {
      auto old = s.hulls.find(id);
      if (old == s.hulls.end() || canonical(to_json(old->second)) != canonical(to_json(h))) changed_hulls[id] = to_json(h);
    }
    for (const auto& [id, _] : s.hulls)
      if (!hulls.contains(id)) removed.push_back(id);
    s.tree = std::move(next);
    s.hulls = std::move(hulls);
    const std::uint64_t seq = ++s.seq;
    Json tree = tree_to_json(s.tree);
    s.events.push_back({seq, name, {{"seq", seq}, {"op", name}, {"tree", tree}, {"hulls", changed_hulls}, {"removed", removed}}});
    {
      std::lock_guard wake(changed_mutex);
    }
    changed.notify_all();
    if (!extra.is_object()) extra = Json::object();
    extra["seq"] = seq;
    extra["tree"] = std::move(tree);
    return {200, extra};
  }

  Response route(const Request& req) {
    const auto parts = split_path(req.path);
    const std::string& m = req.method;
    if (parts.empty() || parts[0] != "session") throw Error(ErrorCode::UnknownId, "no route " + req.path, req.path);
    Json body = req.body.empty() ? Json::object() : parse_json(req.body);
    if (!body.is_object()) throw Error(ErrorCode::Schema, "request body must be a JSON object");

    if (parts.size() == 1 && m == "POST") return create(body);
    if (parts.size() < 3) throw Error(ErrorCode::UnknownId, "no route " + req.path, req.path);
    auto s = find(parts[1]);
    const std::string& what = parts[2];

    if (m == "GET" && what == "scene" && parts.size() == 3) {
      std::lock_guard lock(s->mutex);
      return {200, {{"seq", s->seq}, {"tree", tree_to_json(s->tree)}, {"hulls", hulls_json(s->hulls)}}};
    }
    if (m == "GET" && what == "hulls" && parts.size() == 3) {
      std::lock_guard lock(s->mutex);
      auto q = req.query.find("cursor");
      if (q == req.query.end()) throw Error(ErrorCode::Schema, "hulls needs ?cursor=x,y,z");
      const auto visible = visible_hulls(s->tree, parse_cursor(q->second), s->hulls);
      Json hulls = Json::object();
      for (const auto& id : visible) hulls[id] = to_json(s->hulls.at(id));
      return {200, {{"visible", visible}, {"hulls", hulls}}};
    }
    if (m == "POST" && what == "group" && parts.size() == 3) {
      const std::string a = string_field(body, "a"), b = string_field(body, "b");
      return mutate(*s, "group", [&](ConstraintTree& t) {
        auto r = create_group(t, a, b);
        t = std::move(r.tree);
        return Json{{"group", r.group}};
      });
    }
    if (m == "POST" && what == "group" && parts.size() == 5 && parts[4] == "object") {
      const std::string o = string_field(body, "o");
      return mutate(*s, "add_object", [&](ConstraintTree& t) {
        t = add_object(t, parts[3], o);
        return Json::object();
      });
    }
    if (m == "POST" && what == "group" && parts.size() == 5 && parts[4] == "toggle") {
      return mutate(*s, "toggle", [&](ConstraintTree& t) {
        t = toggle_mode(t, parts[3]);
        return Json{{"mode", std::string(to_string(t.group(parts[3]).mode))}};
      });
    }
    if (m == "DELETE" && what == "group" && parts.size() == 4) {
      return mutate(*s, "delete", [&](ConstraintTree& t) {
        t = delete_group(t, parts[3]);
        return Json::object();
      });
    }
    if (m == "POST" && what == "nest" && parts.size() == 3) {
      const std::string first = string_field(body, "first"), second = string_field(body, "second");
      return mutate(*s, "nest", [&](ConstraintTree& t) {
        t = nest_groups(t, first, second);
        return Json::object();
      });
    }
    if (m == "POST" && what == "wrap" && parts.size() == 3) {
      const std::string a = string_field(body, "a"), b = string_field(body, "b");
      return mutate(*s, "wrap", [&](ConstraintTree& t) {
        auto r = wrap_in_parent(t, a, b);
        t = std::move(r.tree);
        return Json{{"group", r.group}};
      });
    }
    if (m == "PUT" && what == "pose" && parts.size() == 4) {
      const Pose pose = pose_from_json(body);
      return mutate(*s, "pose", [&](ConstraintTree& t) {
        t = set_pose(t, parts[3], pose);
        return Json::object();
      });
    }
    if (m == "POST" && what == "export" && parts.size() == 4) {
      return mutate(*s, "export", [&](ConstraintTree& t) {
        auto r = export_spec(t, parts[3]);
        t = std::move(r.tree);
        s->exports.push_back(r.spec);
        return Json{{"spec", spec_to_json(r.spec)}};
      });
    }
    if (m == "POST" && what == "plan" && parts.size() == 3) {
      SpecDocument spec;
      Scene scene;
      {
        std::lock_guard lock(s->mutex);
        scene = s->scene;
        if (body.contains("spec")) {
          spec = spec_from_json(body["spec"], &s->tree);
        } else {
          if (s->exports.empty()) throw Error(ErrorCode::InvalidSpec, "nothing exported in this session");
          spec = merge_specs(s->exports);
        }
      }
      PlanOptions options;
      options.seed = seed;
      if (auto it = body.find("seed"); it != body.end()) {
        if (!it->is_number_unsigned()) throw Error(ErrorCode::Schema, "seed must be a non-negative integer");
        options.seed = it->get<std::uint64_t>();
      }
      return {200, {{"plan", to_json(plan_assembly(spec, scene.workspace, scene.arm, options))}}};
    }
    throw Error(ErrorCode::UnknownId, "no route " + m + " " + req.path, req.path);
  }
};

SessionService::SessionService(Scene default_scene, std::uint64_t seed) : impl_(std::make_unique<Impl>()) {
  impl_->default_scene = std::move(default_scene);
  impl_->seed = seed;

  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, req.body, {}};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const Response out = handle(r);
    res.status = out.status;
    res.set_content(canonical(out.body), "application/json");
  };
  auto& server = impl_->server;
  server.Get(R"(/session/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string session = req.matches[1];
    std::uint64_t after = 0;
    try {
      impl_->find(session);
      if (req.has_param("since")) after = std::stoull(req.get_param_value("since"));
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(canonical(to_json(e)), "application/json");
      return;
    } catch (const std::exception&) {
      res.status = 400;
      res.set_content(canonical(to_json(Error(ErrorCode::Schema, "since must be an integer"))), "application/json");
      return;
    }
    const bool follow = req.get_param_value("follow") != "0";
    auto cursor = std::make_shared<std::uint64_t>(after);
    res.set_chunked_content_provider("text/event-stream", [this, session, cursor, follow](std::size_t, httplib::DataSink& sink) {
      const auto batch = follow ? wait_events(session, *cursor, 1000) : events(session, *cursor);
      for (const auto& e : batch) {
        const std::string frame = "id: " + std::to_string(e.seq) + "\nevent: delta\ndata: " + canonical(e.data) + "\n\n";
        if (!sink.write(frame.data(), frame.size())) return false;
        *cursor = e.seq;
      }
      if (!follow || impl_->stopping) {
        sink.done();
        return true;
      }
      return true;
    });
  });
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Put(".*", forward);
  server.Delete(".*", forward);
}

SessionService::~SessionService() { stop(); }

SessionService::Response SessionService::handle(const Request& request) {
  try {
    return impl_->route(request);
  } catch (const Error& e) {
    return {http_status(e.code()), to_json(e)};
  } catch (const std::exception& e) {
    return {500, to_json(Error(ErrorCode::Io, e.what()))};
  }
}

std::vector<SessionService::Event> SessionService::events(const std::string& session, std::uint64_t after) const {
  auto s = impl_->find(session);
  std::lock_guard lock(s->mutex);
  std::vector<Event> out;
  for (const auto& e : s->events)
    if (e.seq > after) out.push_back(e);
  return out;
}

std::vector<SessionService::Event> SessionService::wait_events(const std::string& session, std::uint64_t after,
                                                               int timeout_ms) const {
  auto s = impl_->find(session);
  std::unique_lock lock(impl_->changed_mutex);
  impl_->changed.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] {
    if (impl_->stopping) return true;
    std::lock_guard inner(s->mutex);
    return s->seq > after;
  });
  lock.unlock();
  return events(session, after);
}

ConstraintTree SessionService::tree(const std::string& session) const {
  auto s = impl_->find(session);
  std::lock_guard lock(s->mutex);
  return s->tree;
}

bool SessionService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int SessionService::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) return port;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void SessionService::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  {
    std::lock_guard wake(impl_->changed_mutex);
  }
  impl_->changed.notify_all();
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace nestplan
