#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flashguard/bundle.hpp"
#include "flashguard/dataset.hpp"
#include "flashguard/error.hpp"
#include "flashguard/evaluation.hpp"
#include "flashguard/gateway/recalibrate.hpp"
#include "flashguard/gateway/service.hpp"
#include "flashguard/gateway/store.hpp"
#include "flashguard/pipeline.hpp"
#include "flashguard/png_io.hpp"
#include "flashguard/synthetic.hpp"

namespace fs = std::filesystem;
using namespace flashguard;

namespace {

fs::path sibling(const fs::path& bundle, const std::string& suffix) {
  return bundle.parent_path() / (bundle.stem().string() + suffix);
}

// The SP table and detector outcomes travel next to the bundle so that
// recalibration can later refit on them.
void save_training_artifacts(const fs::path& out, const TrainResult& result) {
  save_bundle(out, result.bundle);
  write_text_file(sibling(out, ".training.csv"), training_csv(result.table));
  write_text_file(sibling(out, ".detections.jsonl"), detections_jsonl(result.detections));
}

void print_skin_fit(const SkinModelFit& fit) {
  const auto& m = fit.model;
  std::printf("loadings       %.4f %.4f %.4f\n", m.loadings[0], m.loadings[1], m.loadings[2]);
  std::printf("alpha, beta    %.4f %.4f (se %.4f)\n", m.alpha, m.beta, m.beta_se);
  std::printf("hosmer-lemeshow chi2 %.3f df %d p %.4f\n", fit.goodness.chi_square,
              fit.goodness.df, fit.goodness.p_value);
  if (fit.goodness.wald) std::printf("wald           %.3f\n", *fit.goodness.wald);
}

void print_reliability(const ReliabilityTable& table) {
  std::printf("%-11s %9s %9s %9s %9s\n", "detector", "present", "sd", "absent", "sd");
  for (const auto& [kind, r] : table.entries) {
    std::printf("%-11s %9.4f %9.4f %9.4f %9.4f\n", std::string(to_string(kind)).c_str(),
                r.rel_present, r.stdev_present, r.rel_absent, r.stdev_absent);
  }
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::invalid_argument, "address must be HOST:PORT");
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

int cmd_train(const fs::path& data, const fs::path& out, std::uint64_t seed, bool published) {
  const auto dataset = load_dataset(data);
  TrainOptions options;
  options.seed = seed;
  options.calibration.seed = seed;
  const auto result = published ? calibrate(dataset, options) : train(dataset, options);
  save_training_artifacts(out, result);
  std::printf("users          %zu (%zu dark)\n", dataset.users.size(), result.dark_users);
  print_skin_fit(result.skin);
  print_reliability(result.bundle.reliability);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_classify(const fs::path& model, const std::vector<std::string>& frames,
                 const std::optional<fs::path>& detections, const std::string& user) {
  const auto bundle = load_bundle(model);
  FrameSequence seq;
  seq.user_id = user;
  for (const auto& f : frames) {
    seq.frames.push_back(read_png(f));
    seq.frame_ids.push_back(f);
  }
  const SidecarProvider provider(detections);
  const auto verdict = classify_user(seq, bundle, provider);
  std::cout << to_json(verdict) << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& model, const fs::path& data, const fs::path& out, int steps) {
  const auto bundle = load_bundle(model);
  const auto dataset = load_dataset(data);
  const auto thetas = theta_grid(steps);
  const auto result = evaluate(dataset, bundle, thetas);
  write_text_file(out, pr_csv(result.curve));
  std::printf("users %zu, dark %zu\n", dataset.users.size(), result.dark_users);
  std::printf("%8s %10s %10s\n", "theta", "precision", "recall");
  for (const auto& p : result.curve.misbehaving) {
    std::printf("%8.3f %10.4f %10.4f\n", p.theta, p.precision, p.recall);
  }
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_serve(const std::optional<fs::path>& model, const std::string& addr,
              const fs::path& store_dir, gateway::ServiceOptions options,
              const std::optional<fs::path>& port_file) {
  // Block termination signals before any thread starts; one thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gateway::Store store(store_dir);
  if (model) {
    const auto bundle = load_bundle(*model);
    auto version = store.find_bundle(bundle);
    if (!version) version = store.add_bundle(bundle);
    if (store.active_bundle() != version) store.activate(*version);
    const auto table = sibling(*model, ".training.csv");
    const auto dets = sibling(*model, ".detections.jsonl");
    if (fs::exists(table)) {
      const auto rows = parse_training_csv(read_text_file(table));
      const auto labeled = fs::exists(dets) ? parse_detections_jsonl(read_text_file(dets))
                                            : std::vector<LabeledDetections>{};
      store.set_training_data(rows, labeled);
    }
    spdlog::info("serving bundle {}", *version);
  } else if (!store.active_bundle()) {
    spdlog::warn("no model bundle; submissions will be refused until one is activated");
  }

  gateway::Service service(store, std::move(options));
  const auto [host, port] = parse_addr(addr);
  const int bound = service.bind(host, port);
  spdlog::info("listening on {}:{}", host, bound);
  if (port_file) write_text_file(*port_file, std::to_string(bound) + "\n");

  std::thread waiter([&service, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, shutting down", sig);
    service.stop();
  });
  service.run();
  // run() returned without a signal only on a listen failure.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int cmd_recalibrate(const fs::path& store_dir, const fs::path& out,
                    const gateway::RecalibrationOptions& options) {
  const gateway::Store store(store_dir, true);
  const auto result = gateway::recalibrate(store, options);
  save_bundle(out, result.bundle);
  std::printf("training rows  %zu\nfeedback rows  %zu\n", result.training_rows,
              result.feedback_rows);
  print_skin_fit(result.skin);
  print_reliability(result.bundle.reliability);
  std::printf("wrote %s (not activated)\n", out.string().c_str());
  return 0;
}

int cmd_synth(const fs::path& out, std::size_t users, std::uint64_t seed, double dark) {
  synthetic::CorpusOptions options;
  options.seed = seed;
  options.dark_fraction = dark;
  save_dataset(out, synthetic::generate_corpus(users, options));
  std::printf("wrote %zu users to %s\n", users, out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("flashguard"));

  CLI::App app{"Flasher screening for random video chat"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  fs::path data, out, model, store_dir;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "Fit palette 3, the skin model and detector reliability");
  train->add_option("--data", data)->required();
  train->add_option("--out", out)->required();
  train->add_option("--seed", seed);

  auto* calib = app.add_subcommand(
      "calibrate", "Keep the published skin model; fit palette 3, SP scaling and reliability");
  calib->add_option("--data", data)->required();
  calib->add_option("--out", out)->required();
  calib->add_option("--seed", seed);

  std::vector<std::string> frames;
  std::optional<fs::path> detections;
  std::string user = "user";
  auto* classify = app.add_subcommand("classify", "Classify one user from three screenshots");
  classify->add_option("--model", model)->required();
  classify->add_option("--frames", frames)->required()->expected(2, 64);
  classify->add_option("--detections", detections, "Directory of <frame>.det.json sidecars");
  classify->add_option("--user", user);

  int steps = 20;
  auto* eval = app.add_subcommand("evaluate", "Precision-recall over a threshold sweep");
  eval->add_option("--model", model)->required();
  eval->add_option("--data", data)->required();
  eval->add_option("--out", out)->required();
  eval->add_option("--theta-steps", steps)->check(CLI::PositiveNumber);

  std::optional<fs::path> serve_model, console_dir, port_file;
  std::optional<std::string> token;
  std::string addr = "127.0.0.1:8080";
  std::size_t min_rows = 200;
  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  serve->add_option("--model", serve_model, "Bundle to import and activate");
  serve->add_option("--addr", addr);
  serve->add_option("--store", store_dir)->required();
  serve->add_option("--console", console_dir, "Static files served under /console/");
  serve->add_option("--token", token, "Moderator bearer token");
  serve->add_option("--port-file", port_file, "Write the bound port here");
  serve->add_option("--min-feedback", min_rows);
  serve->add_option("--seed", seed, "Seed for recalibration bootstrap");

  auto* recal = app.add_subcommand("recalibrate", "Refit on training data plus moderator feedback");
  recal->add_option("--store", store_dir)->required();
  recal->add_option("--out", out)->required();
  recal->add_option("--min-feedback", min_rows);
  recal->add_option("--seed", seed);

  std::size_t users = 200;
  double dark = 0.0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic labelled corpus");
  synth->add_option("--out", out)->required();
  synth->add_option("--users", users);
  synth->add_option("--seed", seed);
  synth->add_option("--dark-fraction", dark)->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) return cmd_train(data, out, seed, false);
    if (*calib) return cmd_train(data, out, seed, true);
    if (*classify) return cmd_classify(model, frames, detections, user);
    if (*eval) return cmd_evaluate(model, data, out, steps);
    if (*serve) {
      gateway::ServiceOptions options;
      options.console_dir = console_dir;
      options.moderator_token = token;
      options.recalibration.min_rows = min_rows;
      options.recalibration.calibration.seed = seed;
      return cmd_serve(serve_model, addr, store_dir, std::move(options), port_file);
    }
    if (*recal) {
      gateway::RecalibrationOptions options;
      options.min_rows = min_rows;
      options.calibration.seed = seed;
      return cmd_recalibrate(store_dir, out, options);
    }
    if (*synth) return cmd_synth(out, users, seed, dark);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
