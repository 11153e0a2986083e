#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nestplan/constraint_tree.hpp"
#include "nestplan/io.hpp"
#include "nestplan/pipeline.hpp"

namespace nestplan {

/// Authoring sessions over HTTP. Each session owns one tree; mutations on a
/// session are serialized and each commit is followed by a push event
/// carrying the new tree and the hulls that changed.
class SessionService {
 public:
  struct Request {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> query;
  };
  struct Response {
    int status = 200;
    Json body;
  };
  struct Event {
    std::uint64_t seq = 0;
    std::string op;
    Json data;
  };

  /// `default_scene` seeds sessions created with an empty body.
  explicit SessionService(Scene default_scene, std::uint64_t seed = 0);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Transport-free entry point; the HTTP server forwards every call here.
  Response handle(const Request& request);

  /// Events of a session with seq > `after`. Throws UnknownId.
  std::vector<Event> events(const std::string& session, std::uint64_t after) const;
  /// Blocks until an event with seq > `after` exists, the timeout passes or
  /// the service stops.
  std::vector<Event> wait_events(const std::string& session, std::uint64_t after, int timeout_ms) const;
  ConstraintTree tree(const std::string& session) const;

  /// Binds and serves until stop(). Returns false if the port is taken.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for a core error code.
int http_status(ErrorCode code);

}  // namespace nestplan
