#include "flashguard/gateway/service.hpp"

#include <algorithm>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flashguard/error.hpp"
#include "flashguard/overlay.hpp"
#include "flashguard/pipeline.hpp"
#include "flashguard/png_io.hpp"

namespace flashguard::gateway {

using json = nlohmann::json;

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::not_found: return 404;
    case Errc::conflict: return 409;
    case Errc::insufficient_feedback:
    case Errc::single_class:
    case Errc::separation:
    case Errc::not_converged:
    case Errc::empty_outcome_class:
    case Errc::degenerate_variance:
    case Errc::no_component_retained: return 422;
    case Errc::provider_unavailable: return 503;
    case Errc::io: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

std::string error_code_for_status(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 409: return "conflict";
    case 413: return "payload_too_large";
    case 503: return "model_not_loaded";
    default: return status >= 500 ? "internal" : "error";
  }
}

json review_json(const ReviewItem& item) {
  json frames = json::array();
  for (std::size_t k = 1; k <= item.frames.size(); ++k) {
    frames.push_back("/v1/review/" + item.item_id + "/frames/" + std::to_string(k));
  }
  return {{"item_id", item.item_id},
          {"user_id", item.user_id},
          {"verdict_id", item.verdict_id},
          {"frames", frames},
          {"verdict", json::parse(to_json(item.verdict))},
          {"status", to_string(item.status)},
          {"moderator_id", item.moderator_id ? json(*item.moderator_id) : json(nullptr)},
          {"decided_at", item.decided_at ? json(*item.decided_at) : json(nullptr)},
          {"created_at", item.created_at}};
}

json verdict_json(const StoredVerdict& v, const std::optional<ReviewItem>& item) {
  return {{"verdict_id", v.verdict_id},
          {"bundle_version", v.bundle_version},
          {"created_at", v.created_at},
          {"review_item_id", item ? json(item->item_id) : json(nullptr)},
          {"verdict", json::parse(to_json(v.verdict))}};
}

// Frame parts are "frames" (repeated, in upload order) or "frame_<k>"/"frame<k>".
std::vector<const httplib::MultipartFormData*> frame_parts(const httplib::Request& req) {
  std::vector<const httplib::MultipartFormData*> out;
  for (const auto& [name, part] : req.files) {
    if (name.rfind("frame", 0) == 0) out.push_back(&part);
  }
  return out;
}

std::optional<std::vector<std::vector<Detection>>> inline_detections(
    const httplib::Request& req, std::size_t frames) {
  if (req.has_file("detections")) {
    const auto arr = json::parse(req.get_file_value("detections").content);
    if (!arr.is_array() || arr.size() != frames) {
      throw Error(Errc::invalid_argument, "detections must be an array with one entry per frame");
    }
    std::vector<std::vector<Detection>> out;
    for (const auto& f : arr) out.push_back(parse_sidecar(f.dump()));
    return out;
  }
  bool any = false;
  std::vector<std::vector<Detection>> out(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const std::string name = "detections_" + std::to_string(k + 1);
    if (!req.has_file(name)) continue;
    out[k] = parse_sidecar(req.get_file_value(name).content);
    any = true;
  }
  if (!any) return std::nullopt;
  return out;
}

std::size_t frame_index(const std::string& text, std::size_t count) {
  const std::size_t k = std::stoul(text);
  if (k < 1 || k > count) throw Error(Errc::not_found, "no frame " + text);
  return k - 1;
}

}  // namespace

Service::Service(Store& store, ServiceOptions options)
    : store_(store), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (!options_.provider) options_.provider = std::make_shared<RecordedProvider>();
  reload();
  routes();
}

Service::~Service() = default;

void Service::reload() {
  const auto version = store_.active_bundle();
  if (!version) return;
  auto bundle = std::make_shared<const ModelBundle>(store_.bundle(*version));
  std::lock_guard lock(active_mutex_);
  active_ = {*version, std::move(bundle)};
}

Service::Active Service::active() const {
  std::lock_guard lock(active_mutex_);
  return active_;
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = server_->bind_to_any_port(host);
    if (p < 0) throw Error(Errc::io, "cannot bind " + host);
    return p;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(Errc::io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop() { server_->stop(); }

void Service::routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(options_.frames_per_user * options_.max_image_bytes * 2 + (1u << 20));

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "parse", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, res.status, error_code_for_status(res.status),
               httplib::status_message(res.status));
    return httplib::Server::HandlerResponse::Handled;
  });

  const auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (!options_.moderator_token) return true;
    if (req.get_header_value("Authorization") == "Bearer " + *options_.moderator_token) {
      return true;
    }
    send_error(res, 401, "unauthorized", "missing or wrong moderator token");
    return false;
  };

  srv.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto a = active();
    send_json(res, {{"status", "ok"},
                    {"bundle_version", a.bundle ? json(a.version) : json(nullptr)}});
  });

  srv.Post(R"(/v1/users/([^/]+)/screenshots)",
           [this](const httplib::Request& req, httplib::Response& res) {
             const std::string user_id = req.matches[1];
             const auto model = active();
             if (!model.bundle) {
               send_error(res, 503, "model_not_loaded", "no active model bundle");
               return;
             }
             if (!req.is_multipart_form_data()) {
               send_error(res, 400, "invalid_argument", "expected multipart/form-data");
               return;
             }
             const auto parts = frame_parts(req);
             for (const auto* p : parts) {
               if (p->content.size() > options_.max_image_bytes) {
                 send_error(res, 413, "payload_too_large",
                            "frame '" + p->name + "' exceeds " +
                                std::to_string(options_.max_image_bytes) + " bytes");
                 return;
               }
             }
             if (parts.size() != options_.frames_per_user) {
               send_error(res, 400, "invalid_argument",
                          "expected " + std::to_string(options_.frames_per_user) +
                              " frames, got " + std::to_string(parts.size()));
               return;
             }
             FrameSequence seq;
             seq.user_id = user_id;
             std::vector<std::vector<std::uint8_t>> pngs;
             for (const auto* p : parts) {
               pngs.emplace_back(p->content.begin(), p->content.end());
               seq.frames.push_back(decode_png(pngs.back()));
             }
             seq.validate();

             const auto detections = inline_detections(req, parts.size());
             Verdict verdict;
             if (detections) {
               RecordedProvider recorded;
               for (std::size_t k = 0; k < detections->size(); ++k) {
                 recorded.add(seq.frame_id(k), (*detections)[k]);
               }
               verdict = classify_user(seq, *model.bundle, recorded);
             } else {
               verdict = classify_user(seq, *model.bundle, *options_.provider);
             }
             const auto stored = store_.submit(verdict, pngs, model.version);
             spdlog::info("user {} -> {} ({})", user_id, to_string(verdict.decision),
                          stored.verdict.verdict_id);
             send_json(res, verdict_json(stored.verdict, stored.review_item));
           });

  srv.Get(R"(/v1/users/([^/]+)/verdict)",
          [this](const httplib::Request& req, httplib::Response& res) {
            const std::string user_id = req.matches[1];
            const auto v = store_.latest_verdict(user_id);
            if (!v) {
              send_error(res, 404, "not_found", "no verdict for user " + user_id);
              return;
            }
            std::optional<ReviewItem> item;
            for (const auto& it : store_.queue()) {
              if (it.verdict_id == v->verdict_id) item = it;
            }
            send_json(res, verdict_json(*v, item));
          });

  srv.Get("/v1/review/queue", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<ReviewStatus> status;
    if (req.has_param("status")) {
      const auto s = req.get_param_value("status");
      if (s != "all") status = review_status_from_string(s);
    } else {
      status = ReviewStatus::pending;
    }
    json items = json::array();
    for (const auto& item : store_.queue(status)) items.push_back(review_json(item));
    send_json(res, {{"items", items}});
  });

  srv.Get(R"(/v1/review/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto item = store_.item(req.matches[1]);
    if (!item) throw Error(Errc::not_found, "no review item " + std::string(req.matches[1]));
    send_json(res, review_json(*item));
  });

  srv.Post(R"(/v1/review/([^/]+)/decision)",
           [this, authorized](const httplib::Request& req, httplib::Response& res) {
             if (!authorized(req, res)) return;
             const auto body = json::parse(req.body);
             const auto decision = body.value("decision", std::string());
             const auto moderator = body.value("moderator_id", std::string());
             if (decision != "confirm" && decision != "override") {
               send_error(res, 400, "invalid_argument",
                          "decision must be \"confirm\" or \"override\"");
               return;
             }
             if (moderator.empty()) {
               send_error(res, 400, "invalid_argument", "moderator_id is required");
               return;
             }
             const auto item = store_.decide(req.matches[1], decision == "confirm", moderator);
             send_json(res, review_json(item));
           });

  srv.Get(R"(/v1/review/([^/]+)/frames/(\d+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            const auto item = store_.item(req.matches[1]);
            if (!item) throw Error(Errc::not_found, "no review item " + std::string(req.matches[1]));
            const auto k = frame_index(req.matches[2], item->frames.size());
            const auto bytes = read_file_bytes(store_.root() / item->frames[k]);
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
          });

  srv.Get(R"(/v1/review/([^/]+)/overlays)",
          [this](const httplib::Request& req, httplib::Response& res) {
            const auto item = store_.item(req.matches[1]);
            if (!item) throw Error(Errc::not_found, "no review item " + std::string(req.matches[1]));
            json overlays = json::array();
            for (std::size_t k = 1; k <= item->frames.size(); ++k) {
              overlays.push_back(
                  {{"frame", k},
                   {"url", "/v1/review/" + item->item_id + "/overlays/" + std::to_string(k)}});
            }
            send_json(res, {{"item_id", item->item_id}, {"overlays", overlays}});
          });

  srv.Get(R"(/v1/review/([^/]+)/overlays/(\d+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            const auto item = store_.item(req.matches[1]);
            if (!item) throw Error(Errc::not_found, "no review item " + std::string(req.matches[1]));
            const auto k = frame_index(req.matches[2], item->frames.size());
            const auto stored = store_.verdict(item->verdict_id);
            const auto bundle = store_.bundle(stored->bundle_version);
            FrameSequence seq;
            seq.user_id = item->user_id;
            for (const auto& f : item->frames) seq.frames.push_back(read_png(store_.root() / f));
            const auto overlays = render_user_overlays(seq, bundle, item->verdict.evidence_log);
            const auto png = encode_png(overlays[k]);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          });

  srv.Get("/v1/admin/bundles", [this](const httplib::Request&, httplib::Response& res) {
    const auto a = active();
    send_json(res, {{"versions", store_.bundle_versions()},
                    {"active", a.bundle ? json(a.version) : json(nullptr)}});
  });

  srv.Post("/v1/admin/recalibrate",
           [this, authorized](const httplib::Request& req, httplib::Response& res) {
             if (!authorized(req, res)) return;
             const auto result = recalibrate(store_, options_.recalibration);
             const auto version = store_.add_bundle(result.bundle);
             spdlog::info("recalibrated bundle {} from {} training and {} feedback rows", version,
                          result.training_rows, result.feedback_rows);
             send_json(res, {{"bundle_version", version},
                             {"active", active().version},
                             {"training_rows", result.training_rows},
                             {"feedback_rows", result.feedback_rows},
                             {"bundle", json::parse(to_json(result.bundle))}});
           });

  srv.Post(R"(/v1/admin/activate/([^/]+))",
           [this, authorized](const httplib::Request& req, httplib::Response& res) {
             if (!authorized(req, res)) return;
             const std::string version = req.matches[1];
             auto bundle = std::make_shared<const ModelBundle>(store_.bundle(version));
             store_.activate(version);
             {
               std::lock_guard lock(active_mutex_);
               active_ = {version, std::move(bundle)};
             }
             spdlog::info("activated bundle {}", version);
             send_json(res, {{"active", version}});
           });

  if (options_.console_dir) {
    if (!srv.set_mount_point("/console", options_.console_dir->string())) {
      spdlog::warn("console directory {} not found", options_.console_dir->string());
    }
  }
}

}  // namespace flashguard::gateway
