// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "flashguard/bundle.hpp"
#include "flashguard/error.hpp"
#include "flashguard/evaluation.hpp"
#include "flashguard/fusion.hpp"
#include "flashguard/imaging.hpp"
#include "flashguard/pipeline.hpp"
#include "flashguard/png_io.hpp"
#include "flashguard/skin.hpp"
#include "flashguard/skinmodel.hpp"
#include "flashguard/synthetic.hpp"
#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"

extern char** environ;

using namespace flashguard;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---- evidence combination --------------------------------------------------

Outcome worked_example() {
  Outcome o;
  const auto m = combine({0.87, 0.13, 0.0}, {0.95, 0.0, 0.05});
  o.expect(near(m.m_n, 0.9926, 1e-4), "m_n=" + fmt(m.m_n));
  o.expect(near(m.m_f, 0.0074, 1e-4), "m_f=" + fmt(m.m_f));
  o.expect(near(m.m_theta, 0.0, 1e-4), "m_theta=" + fmt(m.m_theta));
  if (o.pass) o.detail = "m=(" + fmt(m.m_n) + ", " + fmt(m.m_f) + ", " + fmt(m.m_theta) + ")";
  return o;
}

Outcome belief_goldens() {
  Outcome o;
  const auto a = belief({0.0, 0.7, 0.3});
  o.expect(a.bel_f == 0.7 && a.bel_n == 0.0, "simple support " + fmt(a.bel_n) + "/" + fmt(a.bel_f));
  const auto b = belief({0.87, 0.13, 0.0});
  o.expect(b.bel_n == 0.87 && b.bel_f == 0.13, "additive " + fmt(b.bel_n) + "/" + fmt(b.bel_f));
  return o;
}

Outcome dst_algebra() {
  Outcome o;
  std::mt19937_64 rng(2024);
  int checked = 0;
  auto mf = [](const std::array<double, 3>& m) { return MassFunction{m[0], m[1], m[2]}; };
  auto same = [](const MassFunction& x, const MassFunction& y, double tol) {
    return near(x.m_n, y.m_n, tol) && near(x.m_f, y.m_f, tol) && near(x.m_theta, y.m_theta, tol);
  };
  for (int i = 0; i < 1000; ++i) {
    const auto a = mf(oracle::random_mass(rng)), b = mf(oracle::random_mass(rng)),
               c = mf(oracle::random_mass(rng));
    if (conflict(a, b) >= 1 - 1e-9 || conflict(b, c) >= 1 - 1e-9) continue;
    try {
      const auto ab = combine(a, b);
      if (conflict(ab, c) >= 1 - 1e-9 || conflict(a, combine(b, c)) >= 1 - 1e-9) continue;
      o.expect(same(ab, combine(b, a), 1e-12), "commutativity");
      o.expect(same(combine(ab, c), combine(a, combine(b, c)), 1e-12), "associativity");
      o.expect(same(combine(a, MassFunction::vacuous()), a, 1e-12), "vacuous neutrality");
      o.expect(near(ab.m_n + ab.m_f + ab.m_theta, 1.0, 1e-12), "normalization");
      o.expect(ab.m_n >= 0 && ab.m_f >= 0 && ab.m_theta >= 0, "non-negative");
      const auto ps = oracle::dempster(oracle::to_power_set(a.m_n, a.m_f, a.m_theta),
                                       oracle::to_power_set(b.m_n, b.m_f, b.m_theta));
      o.expect(ps[0] == 0.0, "empty set mass");
      o.expect(near(ab.m_n, ps[1], 1e-12) && near(ab.m_f, ps[2], 1e-12) &&
                   near(ab.m_theta, ps[3], 1e-12),
               "power-set oracle");
      const auto bl = belief(ab);
      o.expect(near(bl.bel_n, oracle::bel(ps, 1), 1e-12) && near(bl.bel_f, oracle::bel(ps, 2), 1e-12),
               "belief oracle");
      ++checked;
    } catch (const Error& e) {
      o.expect(false, std::string("unexpected ") + e.what());
    }
  }
  o.expect(checked > 900, "only " + std::to_string(checked) + " triples usable");
  if (o.pass) o.detail = std::to_string(checked) + " triples";
  return o;
}

// ---- skin model ------------------------------------------------------------

Outcome logistic_link() {
  Outcome o;
  const auto model = SkcModel::published();
  const double p0 = misbehaving_probability(0.0, model);
  const double half = misbehaving_probability(0.775 / 1.114, model);
  // Independent: 1 / (1 + e^0.775).
  o.expect(near(p0, 1.0 / (1.0 + std::exp(0.775)), 1e-12), "oracle");
  o.expect(near(p0, 0.3154, 1e-4), "p(0)=" + fmt(p0));
  o.expect(near(half, 0.5, 1e-9), "p(0.775/1.114)=" + fmt(half, 12));
  if (o.pass) o.detail = "p(0)=" + fmt(p0) + ", p(x0)=" + fmt(half, 12);
  return o;
}

struct Sample {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
};

Sample logistic_sample(std::uint64_t seed, std::size_t n, double a, double b) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Sample s;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z(rng);
    s.x.push_back(x);
    s.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-(a + b * x))) ? 1 : 0);
  }
  return s;
}

Outcome logistic_fit() {
  Outcome o;
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = logistic_sample(seed * 7919, 5000, -0.775, 1.114);
    const auto fit = fit_logistic(s.x, s.y);
    if (near(fit.alpha, -0.775, 0.1) && near(fit.beta, 1.114, 0.1)) ++recovered;
  }
  o.expect(recovered >= 48, "recovered " + std::to_string(recovered) + "/50");

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const auto s = logistic_sample(77, 5000, -0.775, 1.114);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = coef(rng), b = coef(rng), h = 1e-5;
    const double da = (oracle::log_likelihood(s.x, s.y, a + h, b) -
                       oracle::log_likelihood(s.x, s.y, a - h, b)) / (2 * h);
    const double db = (oracle::log_likelihood(s.x, s.y, a, b + h) -
                       oracle::log_likelihood(s.x, s.y, a, b - h)) / (2 * h);
    const auto g = logistic_gradient(s.x, s.y, a, b);
    worst = std::max({worst, std::abs(g[0] - da) / std::max(1.0, std::abs(da)),
                      std::abs(g[1] - db) / std::max(1.0, std::abs(db))});
  }
  o.expect(worst < 1e-6, "gradient rel err " + fmt(worst));
  if (o.pass) o.detail = std::to_string(recovered) + "/50 recovered, gradient rel err " + fmt(worst, 3);
  return o;
}

Outcome pca() {
  Outcome o;
  const Matrix3 corr{{{1.0, 0.900, 0.765}, {0.900, 1.0, 0.855}, {0.765, 0.855, 1.0}}};
  const auto eig = oracle::eigenvalues(corr);
  const auto power = oracle::power_iteration(corr);
  const auto got = pca_from_correlation(corr);
  o.expect(near(got.eigenvalues[0], power.value, 1e-6), "lambda1");
  for (int i = 0; i < 3; ++i) {
    o.expect(near(got.eigenvectors[0][i], power.vector[i], 1e-6), "eigenvector");
    o.expect(near(got.eigenvalues[i], eig[i], 1e-6), "spectrum");
  }
  const std::size_t kaiser = static_cast<std::size_t>(std::count_if(eig.begin(), eig.end(), [](double e) { return e > 1.0; }));
  o.expect(kaiser == 1 && got.retained == 1, "retained " + std::to_string(got.retained));

  std::vector<SkinProportionVector> rows;
  for (int i = 0; i < 30; ++i) rows.push_back({0.03 * i, 0.06 * i + 0.1, 0.01 * i + 0.2});
  const auto perfect = fit_pca(rows);
  o.expect(near(perfect.eigenvalues[0], 3.0, 1e-9), "perfect lambda " + fmt(perfect.eigenvalues[0]));
  for (double l : perfect.loadings) o.expect(near(l, perfect.loadings[0], 1e-9), "perfect loadings");
  if (o.pass) {
    o.detail = "eigenvalues " + fmt(eig[0]) + ", " + fmt(eig[1]) + ", " + fmt(eig[2]);
  }
  return o;
}

Outcome hosmer_lemeshow_oracle() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = logistic_sample(seed + 500, 800 + 53 * seed, -0.4, 1.0);
    const double slope = seed % 2 ? 1.0 : 0.3;
    std::vector<double> p;
    for (double x : s.x) p.push_back(1.0 / (1.0 + std::exp(-(-0.4 + slope * x))));
    for (int g : {4, 8, 10}) {
      const auto got = hosmer_lemeshow(p, s.y, g);
      const auto want = oracle::hosmer_lemeshow(p, s.y, g);
      o.expect(got.df == g - 2 && want.df == g - 2, "df");
      o.expect(near(got.chi_square, want.chi_square, 1e-6), "chi2 " + fmt(got.chi_square));
      o.expect(near(got.p_value, want.p_value, 1e-6), "p " + fmt(got.p_value));
    }
  }
  return o;
}

// ---- imaging ---------------------------------------------------------------

Outcome target_maps() {
  Outcome o;
  std::mt19937_64 rng(64);
  std::uniform_int_distribution<int> dim(16, 64);
  const int ns[] = {2, 4, 8};
  for (int i = 0; i < 100; ++i) {
    const int w = dim(rng), h = dim(rng), n = ns[i % 3];
    const auto a = oracle::random_frame(rng, w, h);
    const auto b = oracle::perturbed(a, rng);
    const auto want_means = oracle::tile_means(a, n);
    const auto grid = tile_average(a, n);
    for (std::size_t k = 0; k < want_means.size(); ++k) {
      o.expect(near(grid.means[k], want_means[k], 1e-9), "tile mean");
    }
    MotionConfig cfg;
    cfg.n = n;
    const auto raw = raw_target_map(a, b, cfg);
    o.expect(raw.cells == oracle::raw_cells(a, b, n, 9.0), "cells");
    o.expect(target_map(a, a, cfg).area() == 0, "identical frames");
  }
  // A uniform shift of exactly 9 is not motion; any more is.
  MotionConfig cfg;
  cfg.n = 4;
  const auto base = Frame::filled(32, 32, {100, 100, 100});
  o.expect(raw_target_map(base, Frame::filled(32, 32, {109, 109, 109}), cfg).area() == 0, "boundary 9");
  o.expect(raw_target_map(base, Frame::filled(32, 32, {110, 109, 109}), cfg).area() == 16, "above 9");
  return o;
}

// ---- skin ------------------------------------------------------------------

Outcome skin_proportions() {
  Outcome o;
  std::mt19937_64 rng(88);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    std::uniform_int_distribution<int> dim(8, 64);
    const int n = 1 << std::uniform_int_distribution<int>(1, 3)(rng);
    const int w = dim(rng), h = dim(rng);
    TargetMap map;
    map.n = n;
    map.frame_width = w;
    map.frame_height = h;
    std::bernoulli_distribution cell(0.4), pix(std::uniform_real_distribution<double>(0, 1)(rng));
    for (int k = 0; k < n * n; ++k) map.cells.push_back(cell(rng));
    map.cells[static_cast<std::size_t>(n * n - 1)] = 1;
    SkinMask mask(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) mask.set(x, y, pix(rng));
    }
    double region = 0, skin = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int r = std::min(y / (h / n), n - 1), c = std::min(x / (w / n), n - 1);
        if (!map.cells[static_cast<std::size_t>(r * n + c)]) continue;
        region += 1;
        skin += mask.at(x, y);
      }
    }
    worst = std::max(worst, std::abs(skin_proportion(mask, map) - skin / region));
  }
  o.expect(worst <= 1e-12, "counting diff " + fmt(worst));

  const auto p1 = SkinPalette::palette1(), p2 = SkinPalette::palette2();
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = oracle::random_frame(rng, 24, 24);
    TargetMap map;
    map.n = 4;
    map.frame_width = map.frame_height = 24;
    std::bernoulli_distribution cell(0.5);
    for (int k = 0; k < 16; ++k) map.cells.push_back(cell(rng));
    map.cells[5] = 1;
    if (skin_proportion(detect_skin(f, p1), map) > skin_proportion(detect_skin(f, p2), map)) ++violations;
  }
  o.expect(violations == 0, std::to_string(violations) + " monotonicity violations");
  return o;
}

// ---- end-to-end ------------------------------------------------------------

Outcome fused_dominates_skin() {
  Outcome o;
  synthetic::CorpusOptions opts;
  opts.seed = 101;
  const auto training = synthetic::generate_corpus(2000, opts);
  TrainOptions topts;
  topts.seed = 7;
  const auto trained = train(training, topts);
  opts.seed = 202;
  const auto corpus = synthetic::generate_corpus(2000, opts);
  const auto eval = evaluate(corpus, trained.bundle, theta_grid(100));
  const auto fused = ranked_pr(eval.fused_scores);
  const auto skin = ranked_pr(eval.skin_scores);

  int strictly = 0, lower = 0;
  double worst = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double r = k / 100.0;
    const double pf = interpolated_precision(fused, r), ps = interpolated_precision(skin, r);
    if (pf > ps + 1e-12) ++strictly;
    if (pf < ps - 1e-12) {
      ++lower;
      worst = std::max(worst, ps - pf);
    }
  }
  o.expect(lower == 0, "fused precision lower at " + std::to_string(lower) +
                           " recall points (max gap " + fmt(worst, 3) + ")");
  o.expect(strictly >= 3, "strictly higher at " + std::to_string(strictly) + " points");
  if (o.pass) {
    o.detail = "strictly higher at " + std::to_string(strictly) + "/100 recall points";
  } else {
    o.detail += "; strictly higher at " + std::to_string(strictly);
  }
  return o;
}

Outcome latency() {
  Outcome o;
  synthetic::CorpusOptions opts;
  opts.width = 320;
  opts.height = 240;
  std::mt19937_64 rng(3);
  const auto user = synthetic::make_user("latency", true, 0.6, opts, rng);
  auto bundle = fixture::bundle();
  bundle.motion.n = 16;
  const auto provider = user.provider();
  std::vector<double> ms;
  for (int i = 0; i < 10; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)classify_user(user.seq, bundle, provider);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  const double slowest = *std::max_element(ms.begin(), ms.end());
  o.expect(slowest <= 878.0, "slowest " + fmt(slowest, 4) + " ms");
  if (o.pass) o.detail = "slowest of 10 runs " + fmt(slowest, 4) + " ms";
  return o;
}

// ---- gateway ---------------------------------------------------------------

#ifdef FLASHGUARD_CLI
class Server {
 public:
  Server(const fs::path& store, const std::optional<fs::path>& model, const fs::path& port_file) {
    fs::remove(port_file);
    std::vector<std::string> args{FLASHGUARD_CLI, "serve", "--store", store.string(), "--addr",
                                  "127.0.0.1:0", "--port-file", port_file.string()};
    if (model) {
      args.push_back("--model");
      args.push_back(model->string());
    }
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, argv[0], nullptr, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("cannot start the server");
    }
    for (int i = 0; i < 300 && port_ == 0; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      std::ifstream in(port_file);
      in >> port_;
    }
    if (port_ == 0) throw std::runtime_error("server did not report a port");
  }
  ~Server() {
    if (pid_ > 0) kill(SIGTERM);
  }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }
  void kill(int signal) {
    ::kill(pid_, signal);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

httplib::MultipartFormDataItems frames_form(const FrameSequence& seq) {
  httplib::MultipartFormDataItems items;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto png = encode_png(seq.frames[k]);
    items.push_back({"frame_" + std::to_string(k + 1), std::string(png.begin(), png.end()),
                     "frame.png", "image/png"});
  }
  return items;
}

std::vector<std::string> queued_ids(httplib::Client& cli, const std::string& status) {
  std::vector<std::string> ids;
  const auto r = cli.Get("/v1/review/queue?status=" + status);
  if (!r || r->status != 200) return ids;
  const auto body = json::parse(r->body);
  for (const auto& item : body["items"]) ids.push_back(item["item_id"]);
  return ids;
}

Outcome gateway_durability() {
  Outcome o;
  const auto root = fs::temp_directory_path() / ("flashguard_acceptance_" + std::to_string(getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const auto model = root / "model.json";
  save_bundle(model, fixture::bundle());
  const auto store = root / "store", port_file = root / "port";

  std::vector<std::string> items;
  {
    Server server(store, model, port_file);
    httplib::Client cli("127.0.0.1", server.port());
    for (int i = 0; i < 6; ++i) {
      const auto r = cli.Post("/v1/users/flasher" + std::to_string(i) + "/screenshots",
                              frames_form(fixture::moving_block("f", fixture::kSkin)));
      if (!r || r->status != 200) {
        o.expect(false, "submit failed");
        continue;
      }
      const auto body = json::parse(r->body);
      if (body["review_item_id"].is_string()) items.push_back(body["review_item_id"]);
    }
    const auto r = cli.Post("/v1/users/clothed/screenshots",
                            frames_form(fixture::moving_block("c", fixture::kCloth)));
    o.expect(r && r->status == 200, "normal submit");
    o.expect(items.size() == 6, std::to_string(items.size()) + "/6 enqueued");
    server.kill(SIGKILL);
  }

  // Crash debris: a half-written record after the last complete one.
  std::ofstream(store / "review.jsonl", std::ios::app) << R"({"type":"decision","item_id":")";

  {
    Server server(store, std::nullopt, port_file);
    httplib::Client cli("127.0.0.1", server.port());
    auto recovered = queued_ids(cli, "pending");
    std::sort(recovered.begin(), recovered.end());
    auto want = items;
    std::sort(want.begin(), want.end());
    o.expect(recovered == want, "recovered " + std::to_string(recovered.size()) + "/" +
                                    std::to_string(want.size()));
    if (!items.empty()) {
      const std::string body = R"({"decision":"confirm","moderator_id":"acceptance"})";
      const auto first = cli.Post("/v1/review/" + items[0] + "/decision", body, "application/json");
      const auto second = cli.Post("/v1/review/" + items[0] + "/decision", body, "application/json");
      o.expect(first && first->status == 200, "first decision");
      o.expect(second && second->status == 409, "second decision not 409");
    }
    server.kill(SIGKILL);
  }

  {
    Server server(store, std::nullopt, port_file);
    httplib::Client cli("127.0.0.1", server.port());
    o.expect(queued_ids(cli, "pending").size() + 1 == items.size(), "pending after decision");
    o.expect(queued_ids(cli, "confirmed_misbehaving").size() == 1, "decision lost");
  }
  if (o.pass) fs::remove_all(root);
  if (o.pass) o.detail = std::to_string(items.size()) + " items survived SIGKILL, repeat decision got 409";
  return o;
}
#else
Outcome gateway_durability() { return {false, "built without the CLI"}; }
#endif

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"worked-example combination", worked_example},
      {"belief goldens", belief_goldens},
      {"evidence algebra properties", dst_algebra},
      {"logistic link goldens", logistic_link},
      {"logistic fit recovery and gradient", logistic_fit},
      {"PCA and Kaiser retention", pca},
      {"target-map oracle", target_maps},
      {"skin proportion oracle and palette monotonicity", skin_proportions},
      {"Hosmer-Lemeshow oracle", hosmer_lemeshow_oracle},
      {"fused PR curve dominates skin-only", fused_dominates_skin},
      {"single-user latency", latency},
      {"gateway durability", gateway_durability},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
