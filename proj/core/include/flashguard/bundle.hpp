#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "flashguard/evidence.hpp"
#include "flashguard/imaging.hpp"
#include "flashguard/skin.hpp"
#include "flashguard/skinmodel.hpp"

namespace flashguard {

inline constexpr int kBundleFormatVersion = 1;

/// Everything classification needs, persisted as one JSON document.
struct ModelBundle {
  MotionConfig motion;
  SkinPalettes palettes;
  SkcModel skc;
  ReliabilityTable reliability;
  double theta = 0.5;
  double darkness_tau = kDefaultDarknessTau;

  void validate() const;

  /// Built-in palettes 1-2, an empty palette 3, published SKC coefficients
  /// (without standardization) and the published reliability table.
  static ModelBundle defaults();
};

/// Pretty-printed JSON with keys format_version, motion, palettes, skc,
/// reliability, theta, darkness_tau. Output is deterministic.
std::string to_json(const ModelBundle& bundle);
/// Throws Errc::parse on schema errors and validates the result.
ModelBundle bundle_from_json(std::string_view text);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace flashguard
