#include "flashguard/evidence.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "flashguard/error.hpp"
#include "flashguard/stats.hpp"

namespace flashguard {

using nlohmann::json;

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::face: return "face";
    case DetectorKind::eye: return "eye";
    case DetectorKind::nose: return "nose";
    case DetectorKind::mouth: return "mouth";
    case DetectorKind::upper_body: return "upper_body";
  }
  return "face";
}

std::optional<DetectorKind> detector_from_string(std::string_view name) noexcept {
  for (auto kind : kAllDetectors) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<FaceBox> first_face(std::span<const Detection> detections, int width,
                                  int height) {
  for (const auto& d : detections) {
    if (d.kind != DetectorKind::face || !d.present || !d.box) continue;
    const int x0 = std::clamp(d.box->x, 0, width);
    const int y0 = std::clamp(d.box->y, 0, height);
    const int x1 = std::clamp(d.box->x + d.box->w, 0, width);
    const int y1 = std::clamp(d.box->y + d.box->h, 0, height);
    return FaceBox{x0, y0, x1 - x0, y1 - y0};
  }
  return std::nullopt;
}

void ReliabilityTable::validate() const {
  for (const auto& [kind, r] : entries) {
    for (double v : {r.rel_present, r.rel_absent, r.stdev_present, r.stdev_absent}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(Errc::invalid_argument,
                    "reliability for " + std::string(to_string(kind)) + " outside [0, 1]");
      }
    }
  }
}

std::vector<DetectorKind> ReliabilityTable::kinds() const {
  std::vector<DetectorKind> out;
  for (const auto& [kind, r] : entries) out.push_back(kind);
  return out;
}

const Reliability* ReliabilityTable::find(DetectorKind kind) const {
  const auto it = entries.find(kind);
  return it == entries.end() ? nullptr : &it->second;
}

ReliabilityTable ReliabilityTable::published() {
  ReliabilityTable t;
  t.entries[DetectorKind::face] = {0.984, 0.327, 0.017, 0.018};
  t.entries[DetectorKind::eye] = {0.773, 0.434, 0.018, 0.020};
  t.entries[DetectorKind::nose] = {0.802, 0.455, 0.029, 0.030};
  t.entries[DetectorKind::mouth] = {0.711, 0.219, 0.016, 0.020};
  t.entries[DetectorKind::upper_body] = {0.821, 0.491, 0.030, 0.025};
  return t;
}

std::vector<Detection> run_detectors(const Frame& frame, std::string_view frame_id,
                                     const DetectorProvider& provider,
                                     std::span<const DetectorKind> kinds) {
  const auto raw = provider.detect(frame, frame_id);
  return complete_detections(raw, kinds, frame_id);
}

std::vector<Detection> complete_detections(std::span<const Detection> raw,
                                           std::span<const DetectorKind> kinds,
                                           std::string_view frame_id) {
  std::vector<Detection> out;
  out.reserve(kinds.size());
  for (auto kind : kinds) {
    const auto it = std::find_if(raw.begin(), raw.end(),
                                 [kind](const Detection& d) { return d.kind == kind; });
    if (it == raw.end()) {
      spdlog::warn("no {} detection reported for {}; treating as absent", to_string(kind),
                   frame_id);
      out.push_back({kind, false, std::nullopt});
    } else {
      out.push_back(*it);
    }
  }
  return out;
}

std::vector<Detection> parse_sidecar(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("detection sidecar: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::parse, "detection sidecar must be a JSON object");
  std::vector<Detection> out;
  for (const auto& [key, value] : doc.items()) {
    const auto kind = detector_from_string(key);
    if (!kind) {
      spdlog::warn("ignoring unknown detector '{}' in sidecar", key);
      continue;
    }
    if (!value.is_object() || !value.contains("present") || !value["present"].is_boolean()) {
      throw Error(Errc::parse, "sidecar entry '" + key + "' needs a boolean 'present'");
    }
    Detection d{*kind, value["present"].get<bool>(), std::nullopt};
    if (value.contains("box")) {
      if (*kind != DetectorKind::face || !d.present) {
        throw Error(Errc::parse, "only a present face may carry a box");
      }
      const auto& b = value["box"];
      if (!b.is_array() || b.size() != 4) {
        throw Error(Errc::parse, "face box must be [x, y, w, h]");
      }
      d.box = FaceBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
      if (d.box->w < 0 || d.box->h < 0) throw Error(Errc::parse, "face box has negative size");
    }
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(),
            [](const Detection& a, const Detection& b) { return a.kind < b.kind; });
  return out;
}

std::string sidecar_json(std::span<const Detection> detections) {
  json doc = json::object();
  for (const auto& d : detections) {
    json entry{{"present", d.present}};
    if (d.box) entry["box"] = {d.box->x, d.box->y, d.box->w, d.box->h};
    doc[std::string(to_string(d.kind))] = entry;
  }
  return doc.dump();
}

std::filesystem::path sidecar_path(const std::filesystem::path& image,
                                   const std::optional<std::filesystem::path>& dir) {
  const auto base = dir ? *dir : image.parent_path();
  return base / (image.stem().string() + ".det.json");
}

SidecarProvider::SidecarProvider(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {
  if (directory_ && !std::filesystem::is_directory(*directory_)) {
    throw Error(Errc::provider_unavailable,
                "detection directory " + directory_->string() + " does not exist");
  }
}

std::vector<Detection> SidecarProvider::detect(const Frame&, std::string_view frame_id) const {
  const auto path = sidecar_path(std::filesystem::path(frame_id), directory_);
  std::ifstream in(path);
  if (!in) {
    spdlog::warn("no detection sidecar at {}", path.string());
    return {};
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_sidecar(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void RecordedProvider::add(std::string frame_id, std::vector<Detection> detections) {
  records_[std::move(frame_id)] = std::move(detections);
}

std::vector<Detection> RecordedProvider::detect(const Frame&,
                                                std::string_view frame_id) const {
  const auto it = records_.find(frame_id);
  return it == records_.end() ? std::vector<Detection>{} : it->second;
}

std::vector<Detection> ConstantProvider::detect(const Frame&, std::string_view) const {
  std::vector<Detection> out;
  for (auto kind : kAllDetectors) {
    Detection d{kind, present_, std::nullopt};
    if (present_ && kind == DetectorKind::face) d.box = face_box_;
    out.push_back(d);
  }
  return out;
}

std::string detections_jsonl(std::span<const LabeledDetections> corpus) {
  std::string out;
  for (const auto& rec : corpus) {
    json line;
    line["user_id"] = rec.user_id;
    line["normal"] = rec.normal;
    line["frames"] = json::array();
    for (const auto& frame : rec.frames) line["frames"].push_back(json::parse(sidecar_json(frame)));
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledDetections> parse_detections_jsonl(std::string_view text) {
  std::vector<LabeledDetections> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      LabeledDetections rec;
      rec.user_id = j.at("user_id").get<std::string>();
      rec.normal = j.at("normal").get<bool>();
      for (const auto& frame : j.at("frames")) rec.frames.push_back(parse_sidecar(frame.dump()));
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw Error(Errc::parse, "detections line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void CalibrationConfig::validate() const {
  if (k < 1) throw Error(Errc::invalid_argument, "calibration k must be >= 1");
  if (sample_size < 1) throw Error(Errc::invalid_argument, "calibration sample size must be >= 1");
}

ReliabilityTable calibrate_reliability(std::span<const LabeledDetections> corpus,
                                       const CalibrationConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw Error(Errc::empty_input, "calibration corpus is empty");

  // Per user, per kind, per outcome: frame count and whether the user is normal.
  struct Tally {
    std::array<std::array<std::size_t, 2>, kAllDetectors.size()> frames{};
  };
  std::vector<Tally> tallies(corpus.size());
  std::array<std::array<std::size_t, 2>, kAllDetectors.size()> totals{};
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    for (const auto& frame : corpus[u].frames) {
      for (const auto& d : frame) {
        const auto k = static_cast<std::size_t>(d.kind);
        ++tallies[u].frames[k][d.present ? 1 : 0];
        ++totals[k][d.present ? 1 : 0];
      }
    }
  }

  std::array<std::array<std::vector<double>, 2>, kAllDetectors.size()> draws;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  for (int rep = 0; rep < cfg.k; ++rep) {
    std::array<std::array<double, 2>, kAllDetectors.size()> normal{};
    std::array<std::array<double, 2>, kAllDetectors.size()> all{};
    for (std::size_t s = 0; s < cfg.sample_size; ++s) {
      const auto u = pick(rng);
      for (std::size_t k = 0; k < kAllDetectors.size(); ++k) {
        for (std::size_t x = 0; x < 2; ++x) {
          const auto c = static_cast<double>(tallies[u].frames[k][x]);
          all[k][x] += c;
          if (corpus[u].normal) normal[k][x] += c;
        }
      }
    }
    for (std::size_t k = 0; k < kAllDetectors.size(); ++k) {
      for (std::size_t x = 0; x < 2; ++x) {
        if (all[k][x] > 0.0) draws[k][x].push_back(normal[k][x] / all[k][x]);
      }
    }
  }

  ReliabilityTable table;
  for (std::size_t k = 0; k < kAllDetectors.size(); ++k) {
    if (totals[k][0] + totals[k][1] == 0) continue;
    const auto kind = kAllDetectors[k];
    for (std::size_t x = 0; x < 2; ++x) {
      if (totals[k][x] == 0 || draws[k][x].empty()) {
        throw Error(Errc::empty_outcome_class,
                    std::string(to_string(kind)) + " never reports " +
                        (x ? "present" : "absent") + " in the calibration corpus");
      }
    }
    const auto summarise = [](const std::vector<double>& v) {
      const double m = stats::mean(v);
      return std::pair{m, v.size() > 1 ? stats::sample_stdev(v) : 0.0};
    };
    const auto [mp, sp] = summarise(draws[k][1]);
    const auto [ma, sa] = summarise(draws[k][0]);
    table.entries[kind] = {mp, ma, sp, sa};
  }
  return table;
}

}  // namespace flashguard
