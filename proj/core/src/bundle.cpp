#include "flashguard/bundle.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "flashguard/error.hpp"

namespace flashguard {

using nlohmann::ordered_json;

void ModelBundle::validate() const {
  motion.validate();
  for (const auto& p : palettes) p.validate();
  if (palettes[0].id != PaletteId::p1 || palettes[1].id != PaletteId::p2 ||
      palettes[2].id != PaletteId::p3) {
    throw Error(Errc::invalid_argument, "palettes must be ordered P1, P2, P3");
  }
  skc.validate();
  reliability.validate();
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(Errc::invalid_argument, "theta must lie in [0, 1]");
  }
  if (!(darkness_tau >= 0.0 && darkness_tau <= 255.0)) {
    throw Error(Errc::invalid_argument, "darkness_tau must lie in [0, 255]");
  }
}

ModelBundle ModelBundle::defaults() {
  ModelBundle b;
  b.palettes[0] = SkinPalette::palette1();
  b.palettes[1] = SkinPalette::palette2();
  b.palettes[2] = SkinPalette{PaletteId::p3, {}, 0.0, 0.0,
                              SkinHistogram{std::vector<std::uint8_t>(SkinHistogram::kBins, 0)}};
  b.skc = SkcModel::published();
  b.reliability = ReliabilityTable::published();
  return b;
}

namespace {

std::string palette_name(PaletteId id) {
  switch (id) {
    case PaletteId::p1: return "P1";
    case PaletteId::p2: return "P2";
    case PaletteId::p3: return "P3";
  }
  return "P1";
}

PaletteId palette_id(const std::string& s) {
  if (s == "P1") return PaletteId::p1;
  if (s == "P2") return PaletteId::p2;
  if (s == "P3") return PaletteId::p3;
  throw Error(Errc::parse, "unknown palette id '" + s + "'");
}

ordered_json vec3(const Vector3& v) { return ordered_json::array({v[0], v[1], v[2]}); }

Vector3 read_vec3(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::parse, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ordered_json palette_json(const SkinPalette& p) {
  ordered_json j;
  j["id"] = palette_name(p.id);
  if (p.histogram) {
    ordered_json bins = ordered_json::array();
    for (std::size_t i = 0; i < p.histogram->skin.size(); ++i) {
      if (p.histogram->skin[i]) bins.push_back(i);
    }
    j["histogram"] = {{"hue_bins", SkinHistogram::kHueBins},
                      {"sat_bins", SkinHistogram::kSatBins},
                      {"val_bins", SkinHistogram::kValBins},
                      {"skin_bins", bins}};
  } else {
    ordered_json ranges = ordered_json::array();
    for (const auto& r : p.hue_ranges) ranges.push_back({r.lo, r.hi});
    j["hue_ranges"] = ranges;
    j["sat_min"] = p.sat_min;
    j["val_min"] = p.val_min;
  }
  return j;
}

SkinPalette read_palette(const ordered_json& j) {
  SkinPalette p;
  p.id = palette_id(j.at("id").get<std::string>());
  if (j.contains("histogram")) {
    const auto& h = j["histogram"];
    if (h.at("hue_bins").get<int>() != SkinHistogram::kHueBins ||
        h.at("sat_bins").get<int>() != SkinHistogram::kSatBins ||
        h.at("val_bins").get<int>() != SkinHistogram::kValBins) {
      throw Error(Errc::parse, "unsupported palette histogram geometry");
    }
    SkinHistogram hist{std::vector<std::uint8_t>(SkinHistogram::kBins, 0)};
    for (const auto& b : h.at("skin_bins")) {
      const auto idx = b.get<std::size_t>();
      if (idx >= SkinHistogram::kBins) throw Error(Errc::parse, "histogram bin out of range");
      hist.skin[idx] = 1;
    }
    p.histogram = std::move(hist);
  } else {
    for (const auto& r : j.at("hue_ranges")) {
      p.hue_ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    p.sat_min = j.at("sat_min").get<double>();
    p.val_min = j.at("val_min").get<double>();
  }
  return p;
}

}  // namespace

std::string to_json(const ModelBundle& b) {
  ordered_json j;
  j["format_version"] = kBundleFormatVersion;
  j["motion"] = {{"n", b.motion.n},
                 {"diff_threshold", b.motion.diff_threshold},
                 {"ta_min_fraction", b.motion.ta_min_fraction},
                 {"morphology_radius", b.motion.morphology_radius}};
  j["palettes"] = ordered_json::array();
  for (const auto& p : b.palettes) j["palettes"].push_back(palette_json(p));

  ordered_json skc;
  skc["loadings"] = vec3(b.skc.loadings);
  skc["alpha"] = b.skc.alpha;
  skc["beta"] = b.skc.beta;
  skc["beta_se"] = b.skc.beta_se;
  if (b.skc.standardization) {
    skc["sp_mean"] = vec3(b.skc.standardization->mean);
    skc["sp_stdev"] = vec3(b.skc.standardization->stdev);
  } else {
    skc["sp_mean"] = nullptr;
    skc["sp_stdev"] = nullptr;
  }
  j["skc"] = skc;

  ordered_json rel = ordered_json::object();
  for (const auto& [kind, r] : b.reliability.entries) {
    rel[std::string(to_string(kind))] = {{"rel_present", r.rel_present},
                                         {"rel_absent", r.rel_absent},
                                         {"stdev_present", r.stdev_present},
                                         {"stdev_absent", r.stdev_absent}};
  }
  j["reliability"] = rel;
  j["theta"] = b.theta;
  j["darkness_tau"] = b.darkness_tau;
  return j.dump(2) + "\n";
}

ModelBundle bundle_from_json(std::string_view text) {
  ModelBundle b;
  try {
    const auto j = ordered_json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
      throw Error(Errc::parse, "unsupported bundle format_version " + std::to_string(version));
    }
    const auto& m = j.at("motion");
    b.motion.n = m.at("n").get<int>();
    b.motion.diff_threshold = m.at("diff_threshold").get<double>();
    b.motion.ta_min_fraction = m.at("ta_min_fraction").get<double>();
    b.motion.morphology_radius = m.at("morphology_radius").get<int>();

    const auto& pals = j.at("palettes");
    if (!pals.is_array() || pals.size() != 3) {
      throw Error(Errc::parse, "bundle needs exactly three palettes");
    }
    for (std::size_t i = 0; i < 3; ++i) b.palettes[i] = read_palette(pals[i]);

    const auto& s = j.at("skc");
    b.skc.loadings = read_vec3(s.at("loadings"));
    b.skc.alpha = s.at("alpha").get<double>();
    b.skc.beta = s.at("beta").get<double>();
    b.skc.beta_se = s.at("beta_se").get<double>();
    if (s.contains("sp_mean") && !s["sp_mean"].is_null()) {
      b.skc.standardization = Standardization{read_vec3(s["sp_mean"]), read_vec3(s.at("sp_stdev"))};
    }

    b.reliability.entries.clear();
    for (const auto& [key, r] : j.at("reliability").items()) {
      const auto kind = detector_from_string(key);
      if (!kind) throw Error(Errc::parse, "unknown detector '" + key + "' in reliability");
      b.reliability.entries[*kind] = {r.at("rel_present").get<double>(),
                                      r.at("rel_absent").get<double>(),
                                      r.value("stdev_present", 0.0), r.value("stdev_absent", 0.0)};
    }
    b.theta = j.at("theta").get<double>();
    b.darkness_tau = j.at("darkness_tau").get<double>();
  } catch (const ordered_json::exception& e) {
    throw Error(Errc::parse, std::string("model bundle: ") + e.what());
  }
  try {
    b.validate();
  } catch (const Error& e) {
    throw Error(Errc::parse, std::string("model bundle: ") + e.what());
  }
  return b;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write bundle " + path.string());
  out << to_json(bundle);
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open bundle " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return bundle_from_json(buffer.str());
}

}  // namespace flashguard
