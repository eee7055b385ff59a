#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "flashguard/bundle.hpp"
#include "flashguard/evidence.hpp"
#include "flashguard/gateway/recalibrate.hpp"
#include "flashguard/gateway/store.hpp"

namespace httplib {
class Server;
}

namespace flashguard::gateway {

struct ServiceOptions {
  std::size_t max_image_bytes = 2u << 20;
  std::size_t frames_per_user = 3;
  /// Required as `Authorization: Bearer <token>` on decision and admin routes.
  std::optional<std::string> moderator_token;
  /// Static files served under /console/.
  std::optional<std::filesystem::path> console_dir;
  /// Detector backend for submissions that carry no inline detections.
  std::shared_ptr<const DetectorProvider> provider;
  RecalibrationOptions recalibration;
};

/// HTTP front end over a Store. Classification runs synchronously on the
/// request thread against the active bundle, which is swapped atomically on
/// activation.
class Service {
 public:
  Service(Store& store, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads the store's active bundle, if any.
  void reload();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop().
  void run();
  void stop();

 private:
  struct Active {
    std::string version;
    std::shared_ptr<const ModelBundle> bundle;
  };
  Active active() const;
  void routes();

  Store& store_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::mutex active_mutex_;
  Active active_;
};

}  // namespace flashguard::gateway
