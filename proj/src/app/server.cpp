#include "qiraa/server.hpp"

#include "httplib.h"
#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  long long v = 0;
  if (!util::parse_int(req.get_param_value(key), v) || v < 0) {
    throw InvalidHyperparam(std::string("query parameter '") + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

struct ApiServer::Impl {
  TriageStore& store;
  ServeConfig cfg;
  const TrainedModel* model;
  const app::LoadedResources* resources;
  httplib::Server http;
  int port = -1;

  Impl(TriageStore& s, ServeConfig c, const TrainedModel* m, const app::LoadedResources* r)
      : store(s), cfg(std::move(c)), model(m), resources(r) {
    routes();
  }

  void routes() {
    http.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!cfg.token.empty() && req.path.rfind("/api/", 0) == 0 &&
          req.get_header_value("X-Qiraa-Token") != cfg.token) {
        send_error(res, 401, "missing or wrong X-Qiraa-Token header");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    http.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    http.Get("/api/triage", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<TriageStatus> status = TriageStatus::pending;
      const auto s = req.has_param("status") ? req.get_param_value("status") : std::string("pending");
      if (s == "decided") {
        status = TriageStatus::decided;
      } else if (s == "all") {
        status.reset();
      } else if (s != "pending") {
        send_error(res, 400, "status must be pending, decided or all");
        return;
      }
      std::size_t offset = 0, limit = 0;
      try {
        offset = query_size(req, "offset", 0);
        limit = query_size(req, "limit", cfg.page_size);
      } catch (const Error& e) {
        send_error(res, 400, e.what());
        return;
      }
      const auto page = store.list(status, offset, limit);
      json items = json::array();
      for (const auto& item : page.items) items.push_back(to_json(item));
      send_json(res, 200, {{"items", items}, {"total", page.total}, {"offset", offset}, {"limit", limit}});
    });

    http.Get(R"(/api/triage/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto item = store.item(id);
      if (!item) {
        send_error(res, 404, "unknown sentence '" + id + "'");
        return;
      }
      json body = to_json(*item);
      if (auto d = store.decision(id)) body["decision"] = to_json(*d);
      send_json(res, 200, body);
    });

    auto decide = [this](const httplib::Request& req, httplib::Response& res, bool amend) {
      const std::string id = req.matches[1];
      if (!store.item(id)) {
        send_error(res, 404, "unknown sentence '" + id + "'");
        return;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        send_error(res, 400, "request body is not valid JSON");
        return;
      }
      try {
        if (body.is_object()) body["sentence_id"] = id;
        auto decision = triage_decision_from_json(body);
        decision.timestamp.clear();
        if (amend) {
          store.amend(decision);
        } else {
          store.append(decision);
        }
        send_json(res, amend ? 200 : 201, to_json(*store.decision(id)));
      } catch (const DuplicateDecision& e) {
        send_error(res, 409, e.what());
      } catch (const UnknownSentence& e) {
        send_error(res, 404, e.what());
      } catch (const MissingNewLabel& e) {
        send_error(res, 422, e.what());
      } catch (const InvalidDecision& e) {
        send_error(res, 422, e.what());
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    };
    http.Post(R"(/api/triage/([^/]+)/decision)",
              [decide](const httplib::Request& req, httplib::Response& res) { decide(req, res, false); });
    http.Put(R"(/api/triage/([^/]+)/decision)",
             [decide](const httplib::Request& req, httplib::Response& res) { decide(req, res, true); });

    http.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, to_json(store.stats()));
    });

    http.Post("/api/predict", [this](const httplib::Request& req, httplib::Response& res) {
      if (!model || !resources) {
        send_error(res, 503, "no prediction model loaded");
        return;
      }
      std::string conllu = req.body;
      if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        try {
          conllu = json::parse(req.body).at("conllu").get<std::string>();
        } catch (const json::exception&) {
          send_error(res, 400, "expected a JSON body with a 'conllu' string");
          return;
        }
      }
      try {
        const auto d = parse_annotated(conllu, cfg.scheme);
        if (d.sentences.empty()) {
          send_error(res, 422, "no sentence in request");
          return;
        }
        send_json(res, 200, app::predict_sentence(*model, d.sentences.front(), *resources));
      } catch (const Error& e) {
        send_error(res, 422, e.what());
      }
    });

    if (!cfg.ui_dir.empty()) http.set_mount_point("/", cfg.ui_dir);
  }
};

ApiServer::ApiServer(TriageStore& store, ServeConfig cfg, const TrainedModel* model,
                     const app::LoadedResources* resources)
    : impl_(std::make_unique<Impl>(store, std::move(cfg), model, resources)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  if (impl_->cfg.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(impl_->cfg.host);
  } else {
    impl_->port = impl_->http.bind_to_port(impl_->cfg.host, impl_->cfg.port) ? impl_->cfg.port : -1;
  }
  return impl_->port;
}

bool ApiServer::serve() { return impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace qiraa
