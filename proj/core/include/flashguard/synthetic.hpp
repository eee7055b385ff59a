#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

#include "flashguard/dataset.hpp"
#include "flashguard/evidence.hpp"

// Generated corpora with planted flashers, for tests, benchmarks and demos.
namespace flashguard::synthetic {

/// Class-conditional firing probabilities of a detector.
struct DetectorRates {
  double present_if_normal = 0.0;
  double present_if_flasher = 0.0;
};

/// Rates under which P(normal | fired) = rel_present and P(normal | silent) =
/// rel_absent when a share `normal_prior` of users is normal. Requires
/// rel_absent < normal_prior < rel_present.
DetectorRates rates_for(const Reliability& reliability, double normal_prior);

struct CorpusOptions {
  int width = 80;
  int height = 60;
  int frames = 3;
  double normal_prior = 0.6;
  ReliabilityTable conditionals = ReliabilityTable::published();
  double flasher_skin_mean = 0.65;
  double normal_skin_mean = 0.35;
  double skin_spread = 0.18;
  double face_visible_if_normal = 0.9;
  double dark_fraction = 0.0;
  bool with_detections = true;
  bool with_masks = true;
  std::uint64_t seed = 1;
};

/// One user whose moving body region is a `skin_fraction` share of skin.
UserRecord make_user(const std::string& user_id, bool flasher, double skin_fraction,
                     const CorpusOptions& options, std::mt19937_64& rng);

/// `users` users labelled flasher with probability 1 - normal_prior.
Dataset generate_corpus(std::size_t users, const CorpusOptions& options);

}  // namespace flashguard::synthetic
