#include "flashguard/gateway/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flashguard/error.hpp"
#include "flashguard/png_io.hpp"

namespace flashguard::gateway {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVerdicts = "verdicts.jsonl";
constexpr const char* kReview = "review.jsonl";
constexpr const char* kFeedback = "feedback.jsonl";
constexpr const char* kActivations = "activations.jsonl";

std::string numbered(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
  return buf;
}

void fsync_path(const fs::path& p, int flags) {
  const int fd = ::open(p.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Write-then-rename so a reader never sees a half-written file.
void write_durable(const fs::path& path, const void* data, std::size_t size) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(Errc::io, "cannot write " + tmp.string() + ": " + std::strerror(errno));
  const auto* p = static_cast<const char*>(data);
  std::size_t left = size;
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(Errc::io, "write failed for " + tmp.string());
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
  fsync_path(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

// Parsed lines of a JSON-lines log. A final line that is unterminated or
// unparsable is a torn write; `good_bytes` marks where the intact prefix ends.
struct LogContents {
  std::vector<json> records;
  std::size_t good_bytes = 0;
  bool torn = false;
};

LogContents read_log(const fs::path& path) {
  LogContents out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.torn = true;
      break;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) {
      try {
        out.records.push_back(json::parse(line));
      } catch (const json::exception&) {
        if (nl + 1 >= text.size()) {
          out.torn = true;
          break;
        }
        spdlog::warn("{}: skipping corrupt record at byte {}", path.string(), pos);
      }
    }
    pos = nl + 1;
    out.good_bytes = pos;
  }
  return out;
}

json detections_json(const std::vector<std::vector<Detection>>& frames) {
  json arr = json::array();
  for (const auto& f : frames) arr.push_back(json::parse(sidecar_json(f)));
  return arr;
}

std::vector<std::vector<Detection>> detections_from(const json& arr) {
  std::vector<std::vector<Detection>> out;
  for (const auto& f : arr) out.push_back(parse_sidecar(f.dump()));
  return out;
}

json verdict_record(const StoredVerdict& v) {
  return {{"verdict_id", v.verdict_id},     {"bundle_version", v.bundle_version},
          {"created_at", v.created_at},     {"frames", v.frames},
          {"verdict", json::parse(to_json(v.verdict))}};
}

StoredVerdict verdict_from_record(const json& j) {
  StoredVerdict v;
  v.verdict_id = j.at("verdict_id").get<std::string>();
  v.bundle_version = j.at("bundle_version").get<std::string>();
  v.created_at = j.at("created_at").get<double>();
  v.frames = j.at("frames").get<std::vector<std::string>>();
  v.verdict = verdict_from_json(j.at("verdict").dump());
  return v;
}

json feedback_record(const FeedbackRow& f) {
  return {{"item_id", f.item_id},
          {"user_id", f.user_id},
          {"label", f.misbehaving ? "misbehaving" : "normal"},
          {"sp", {f.sp.sp1, f.sp.sp2, f.sp.sp3}},
          {"detections", detections_json(f.detections)},
          {"moderator_id", f.moderator_id},
          {"decided_at", f.decided_at}};
}

FeedbackRow feedback_from_record(const json& j) {
  FeedbackRow f;
  f.item_id = j.at("item_id").get<std::string>();
  f.user_id = j.at("user_id").get<std::string>();
  f.misbehaving = j.at("label").get<std::string>() == "misbehaving";
  const auto& sp = j.at("sp");
  f.sp = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
  f.detections = detections_from(j.at("detections"));
  f.moderator_id = j.at("moderator_id").get<std::string>();
  f.decided_at = j.at("decided_at").get<double>();
  return f;
}

std::size_t id_number(const std::string& id) {
  return id.size() > 1 ? std::stoul(id.substr(1)) : 0;
}

}  // namespace

std::string to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::pending: return "pending";
    case ReviewStatus::confirmed_misbehaving: return "confirmed_misbehaving";
    case ReviewStatus::overridden_normal: return "overridden_normal";
  }
  return "pending";
}

ReviewStatus review_status_from_string(const std::string& s) {
  if (s == "pending") return ReviewStatus::pending;
  if (s == "confirmed_misbehaving") return ReviewStatus::confirmed_misbehaving;
  if (s == "overridden_normal") return ReviewStatus::overridden_normal;
  throw Error(Errc::invalid_argument, "unknown review status '" + s + "'");
}

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

Store::Store(fs::path root, bool read_only) : root_(std::move(root)), read_only_(read_only) {
  if (read_only_) {
    if (!fs::is_directory(root_)) throw Error(Errc::io, "no store at " + root_.string());
  } else {
    fs::create_directories(root_ / "bundles");
    fs::create_directories(root_ / "images");
    fs::create_directories(root_ / "training");
  }
  load();
}

void Store::append(const std::string& file, const std::string& line) {
  if (read_only_) throw Error(Errc::io, "store opened read-only");
  std::string data = line;
  data.push_back('\n');
  const fs::path p = path(file);
  const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(Errc::io, "cannot open " + p.string() + ": " + std::strerror(errno));
  const ssize_t n = ::write(fd, data.data(), data.size());
  const bool ok = n == static_cast<ssize_t>(data.size());
  if (ok) ::fsync(fd);
  ::close(fd);
  if (!ok) throw Error(Errc::io, "short write to " + p.string());
}

void Store::load() {
  auto repair = [&](const char* name, const LogContents& log) {
    if (!log.torn) return;
    spdlog::warn("{}: dropping torn trailing record", name);
    if (!read_only_) fs::resize_file(path(name), log.good_bytes);
  };

  const auto verdicts = read_log(path(kVerdicts));
  repair(kVerdicts, verdicts);
  for (const auto& r : verdicts.records) {
    auto v = verdict_from_record(r);
    verdict_index_[v.verdict_id] = verdicts_.size();
    latest_by_user_[v.verdict.user_id] = verdicts_.size();
    verdicts_.push_back(std::move(v));
  }

  const auto review = read_log(path(kReview));
  repair(kReview, review);
  for (const auto& r : review.records) {
    const auto type = r.at("type").get<std::string>();
    const auto id = r.at("item_id").get<std::string>();
    if (type == "enqueue") {
      const auto vid = r.at("verdict_id").get<std::string>();
      const auto it = verdict_index_.find(vid);
      if (it == verdict_index_.end()) continue;
      const auto& v = verdicts_[it->second];
      ReviewItem item;
      item.item_id = id;
      item.user_id = v.verdict.user_id;
      item.verdict_id = vid;
      item.frames = v.frames;
      item.verdict = v.verdict;
      item.created_at = r.at("created_at").get<double>();
      items_[id] = item;
      item_by_verdict_[vid] = id;
      next_item_ = std::max(next_item_, id_number(id) + 1);
    } else if (type == "decision") {
      const auto it = items_.find(id);
      if (it == items_.end() || it->second.status != ReviewStatus::pending) continue;
      it->second.status = review_status_from_string(r.at("status").get<std::string>());
      it->second.moderator_id = r.at("moderator_id").get<std::string>();
      it->second.decided_at = r.at("decided_at").get<double>();
    }
  }

  const auto fb = read_log(path(kFeedback));
  repair(kFeedback, fb);
  for (const auto& r : fb.records) feedback_.push_back(feedback_from_record(r));

  const auto act = read_log(path(kActivations));
  repair(kActivations, act);
  for (const auto& r : act.records) active_ = r.at("version").get<std::string>();

  if (fs::is_directory(root_ / "bundles")) {
    for (const auto& e : fs::directory_iterator(root_ / "bundles")) {
      if (e.path().extension() == ".json") bundle_versions_.push_back(e.path().stem().string());
    }
    std::sort(bundle_versions_.begin(), bundle_versions_.end());
  }

  if (read_only_) return;

  // Finish work interrupted between two appends.
  for (const auto& v : verdicts_) {
    if (v.verdict.decision == Decision::misbehaving && !item_by_verdict_.contains(v.verdict_id)) {
      spdlog::info("enqueueing {} left unqueued by an interrupted submit", v.verdict_id);
      enqueue_locked(v, v.created_at);
    }
  }
  std::map<std::string, bool> has_feedback;
  for (const auto& f : feedback_) has_feedback[f.item_id] = true;
  for (const auto& [id, item] : items_) {
    if (item.status != ReviewStatus::pending && !has_feedback.contains(id)) {
      auto row = feedback_for(item);
      append(kFeedback, feedback_record(row).dump());
      feedback_.push_back(std::move(row));
    }
  }
}

ReviewItem Store::enqueue_locked(const StoredVerdict& v, double created_at) {
  ReviewItem item;
  item.item_id = numbered('r', next_item_);
  item.user_id = v.verdict.user_id;
  item.verdict_id = v.verdict_id;
  item.frames = v.frames;
  item.verdict = v.verdict;
  item.created_at = created_at;
  append(kReview, json{{"type", "enqueue"},
                       {"item_id", item.item_id},
                       {"verdict_id", v.verdict_id},
                       {"created_at", created_at}}
                      .dump());
  ++next_item_;
  items_[item.item_id] = item;
  item_by_verdict_[v.verdict_id] = item.item_id;
  return item;
}

FeedbackRow Store::feedback_for(const ReviewItem& item) const {
  FeedbackRow f;
  f.item_id = item.item_id;
  f.user_id = item.user_id;
  f.misbehaving = item.status == ReviewStatus::confirmed_misbehaving;
  f.sp = item.verdict.sp;
  f.detections = item.verdict.evidence_log;
  f.moderator_id = item.moderator_id.value_or("");
  f.decided_at = item.decided_at.value_or(0.0);
  return f;
}

SubmitResult Store::submit(const Verdict& verdict,
                           std::span<const std::vector<std::uint8_t>> png_frames,
                           const std::string& bundle_version) {
  std::lock_guard lock(mutex_);
  StoredVerdict v;
  v.verdict_id = numbered('v', verdicts_.size() + 1);
  v.bundle_version = bundle_version;
  v.created_at = now_seconds();
  v.verdict = verdict;
  for (std::size_t k = 0; k < png_frames.size(); ++k) {
    const std::string rel =
        "images/" + v.verdict_id + "/frame_" + std::to_string(k + 1) + ".png";
    write_durable(root_ / rel, png_frames[k].data(), png_frames[k].size());
    v.frames.push_back(rel);
  }
  append(kVerdicts, verdict_record(v).dump());
  verdict_index_[v.verdict_id] = verdicts_.size();
  latest_by_user_[verdict.user_id] = verdicts_.size();
  verdicts_.push_back(v);

  SubmitResult out{v, std::nullopt};
  if (verdict.decision == Decision::misbehaving) out.review_item = enqueue_locked(v, v.created_at);
  return out;
}

std::optional<StoredVerdict> Store::latest_verdict(const std::string& user_id) const {
  std::lock_guard lock(mutex_);
  const auto it = latest_by_user_.find(user_id);
  if (it == latest_by_user_.end()) return std::nullopt;
  return verdicts_[it->second];
}

std::optional<StoredVerdict> Store::verdict(const std::string& verdict_id) const {
  std::lock_guard lock(mutex_);
  const auto it = verdict_index_.find(verdict_id);
  if (it == verdict_index_.end()) return std::nullopt;
  return verdicts_[it->second];
}

std::vector<ReviewItem> Store::queue(std::optional<ReviewStatus> status) const {
  std::lock_guard lock(mutex_);
  std::vector<ReviewItem> out;
  for (const auto& [id, item] : items_) {
    if (!status || item.status == *status) out.push_back(item);
  }
  return out;
}

std::optional<ReviewItem> Store::item(const std::string& item_id) const {
  std::lock_guard lock(mutex_);
  const auto it = items_.find(item_id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

ReviewItem Store::decide(const std::string& item_id, bool confirm,
                         const std::string& moderator_id) {
  std::lock_guard lock(mutex_);
  const auto it = items_.find(item_id);
  if (it == items_.end()) throw Error(Errc::not_found, "no review item " + item_id);
  if (it->second.status != ReviewStatus::pending) {
    throw Error(Errc::conflict,
                "item " + item_id + " already " + to_string(it->second.status));
  }
  ReviewItem next = it->second;
  next.status = confirm ? ReviewStatus::confirmed_misbehaving : ReviewStatus::overridden_normal;
  next.moderator_id = moderator_id;
  next.decided_at = now_seconds();
  append(kReview, json{{"type", "decision"},
                       {"item_id", item_id},
                       {"status", to_string(next.status)},
                       {"moderator_id", moderator_id},
                       {"decided_at", *next.decided_at}}
                      .dump());
  it->second = next;
  auto row = feedback_for(next);
  append(kFeedback, feedback_record(row).dump());
  feedback_.push_back(std::move(row));
  return next;
}

std::vector<FeedbackRow> Store::feedback() const {
  std::lock_guard lock(mutex_);
  return feedback_;
}

std::string Store::add_bundle(const ModelBundle& bundle) {
  bundle.validate();
  std::lock_guard lock(mutex_);
  if (read_only_) throw Error(Errc::io, "store opened read-only");
  std::size_t n = 1;
  for (const auto& v : bundle_versions_) n = std::max(n, id_number(v) + 1);
  const std::string version = numbered('b', n);
  const std::string text = to_json(bundle);
  write_durable(root_ / "bundles" / (version + ".json"), text.data(), text.size());
  bundle_versions_.push_back(version);
  return version;
}

std::optional<std::string> Store::find_bundle(const ModelBundle& bundle) const {
  const std::string text = to_json(bundle);
  std::lock_guard lock(mutex_);
  for (const auto& v : bundle_versions_) {
    if (read_text_file(root_ / "bundles" / (v + ".json")) == text) return v;
  }
  return std::nullopt;
}

ModelBundle Store::bundle(const std::string& version) const {
  const fs::path p = root_ / "bundles" / (version + ".json");
  {
    std::lock_guard lock(mutex_);
    if (std::find(bundle_versions_.begin(), bundle_versions_.end(), version) ==
        bundle_versions_.end()) {
      throw Error(Errc::not_found, "no bundle version " + version);
    }
  }
  return load_bundle(p);
}

std::vector<std::string> Store::bundle_versions() const {
  std::lock_guard lock(mutex_);
  return bundle_versions_;
}

std::optional<std::string> Store::active_bundle() const {
  std::lock_guard lock(mutex_);
  return active_;
}

void Store::activate(const std::string& version) {
  std::lock_guard lock(mutex_);
  if (std::find(bundle_versions_.begin(), bundle_versions_.end(), version) ==
      bundle_versions_.end()) {
    throw Error(Errc::not_found, "no bundle version " + version);
  }
  append(kActivations, json{{"version", version}, {"at", now_seconds()}}.dump());
  active_ = version;
}

void Store::set_training_data(std::span<const TrainingRow> table,
                              std::span<const LabeledDetections> detections) {
  std::lock_guard lock(mutex_);
  if (read_only_) throw Error(Errc::io, "store opened read-only");
  const std::string csv = training_csv(table);
  const std::string jsonl = detections_jsonl(detections);
  write_durable(root_ / "training" / "table.csv", csv.data(), csv.size());
  write_durable(root_ / "training" / "detections.jsonl", jsonl.data(), jsonl.size());
}

std::vector<TrainingRow> Store::training_table() const {
  const fs::path p = root_ / "training" / "table.csv";
  if (!fs::exists(p)) return {};
  return parse_training_csv(read_text_file(p));
}

std::vector<LabeledDetections> Store::training_detections() const {
  const fs::path p = root_ / "training" / "detections.jsonl";
  if (!fs::exists(p)) return {};
  return parse_detections_jsonl(read_text_file(p));
}

}  // namespace flashguard::gateway
