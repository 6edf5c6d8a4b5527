#pragma once

#include <memory>
#include <string>

#include "qiraa/app.hpp"
#include "qiraa/cleaning.hpp"
#include "qiraa/models.hpp"

namespace qiraa {

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8337;
  std::string token;   // when set, every /api request needs X-Qiraa-Token
  std::string ui_dir;  // static assets mounted at /
  std::size_t page_size = 20;
  LabelScheme scheme = LabelScheme::three_way;
};

/// JSON API over a triage store and an optional prediction model.
class ApiServer {
 public:
  /// `model` and `resources` may be null; /api/predict then answers 503.
  ApiServer(TriageStore& store, ServeConfig cfg, const TrainedModel* model = nullptr,
            const app::LoadedResources* resources = nullptr);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds the listening socket; port 0 picks a free one. Returns the bound
  /// port, or -1 on failure.
  int bind();
  /// Serves until stop() is called.
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qiraa
