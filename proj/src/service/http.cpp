#include <sipinv/service/service.hpp>

#include <httplib.h>

namespace sipinv::service {

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

/// Parsed request body; an empty body reads as {}.
std::optional<json> body_of(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) {
    send(res, {400, {{"error", "request body is not valid JSON"}}});
    return std::nullopt;
  }
  return j;
}

}  // namespace

void Service::mount(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.set_payload_max_length(1 << 20);

  server.Get("/api/levels", [this](const httplib::Request&, httplib::Response& res) { send(res, list_levels()); });
  server.Get(R"(/api/levels/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, get_level(req.matches[1]));
  });
  server.Post("/api/sessions", [this](const httplib::Request&, httplib::Response& res) { send(res, create_session()); });
  server.Get(R"(/api/sessions/([^/]+)/levels/([^/]+)/state)",
             [this](const httplib::Request& req, httplib::Response& res) {
               send(res, get_state(req.matches[1], req.matches[2]));
             });
  server.Post(R"(/api/sessions/([^/]+)/levels/([^/]+)/(propose|trace|whynot))",
              [this](const httplib::Request& req, httplib::Response& res) {
                auto body = body_of(req, res);
                if (!body) return;
                const std::string sid = req.matches[1], level = req.matches[2], op = req.matches[3];
                if (op == "propose") {
                  send(res, propose(sid, level, *body));
                } else if (op == "trace") {
                  send(res, trace(sid, level, *body));
                } else {
                  send(res, why_not(sid, level, *body));
                }
              });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.set_exception_handler([this](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    log({{"event", "error"}, {"method", req.method}, {"path", req.path}, {"error", what}});
    send(res, {500, {{"error", what}}});
  });
  server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
    log({{"event", "request"}, {"method", req.method}, {"path", req.path}, {"status", res.status}});
  });
}

}  // namespace sipinv::service
