#include "flashguard/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "flashguard/error.hpp"

namespace flashguard::synthetic {

DetectorRates rates_for(const Reliability& rel, double normal_prior) {
  const double r1 = rel.rel_present;
  const double r0 = rel.rel_absent;
  if (!(r0 < normal_prior && normal_prior < r1)) {
    throw Error(Errc::invalid_argument,
                "normal prior must lie strictly between rel_absent and rel_present");
  }
  const double fire = (normal_prior - r0) / (r1 - r0);
  return {r1 * fire / normal_prior, (1.0 - r1) * fire / (1.0 - normal_prior)};
}

namespace {

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Rgb jitter(Rgb c, double amount, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, amount);
  return {clamp_byte(c.r + noise(rng)), clamp_byte(c.g + noise(rng)), clamp_byte(c.b + noise(rng))};
}

// Orange/yellow, pinkish and dim skin tones.
constexpr std::array<Rgb, 6> kSkinTones{{
    {224, 172, 140}, {198, 134, 90}, {230, 160, 170},
    {215, 150, 160}, {120, 80, 60},  {140, 95, 80},
}};

// Clothing and backgrounds: blues, greens, greys.
constexpr std::array<Rgb, 5> kClothTones{{
    {40, 60, 160}, {30, 120, 60}, {90, 90, 100}, {20, 20, 90}, {60, 140, 150},
}};

constexpr std::array<Rgb, 3> kBackgroundTones{{{45, 50, 70}, {60, 70, 60}, {35, 35, 45}}};

struct Rect {
  int x, y, w, h;
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
};

}  // namespace

UserRecord make_user(const std::string& user_id, bool flasher, double skin_fraction,
                     const CorpusOptions& o, std::mt19937_64& rng) {
  if (o.width < 16 || o.height < 16 || o.frames < 2) {
    throw Error(Errc::invalid_argument, "synthetic frames must be at least 16x16, two frames");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto pick = [&](auto const& arr) { return arr[std::uniform_int_distribution<std::size_t>(0, arr.size() - 1)(rng)]; };

  UserRecord rec;
  rec.label.user_id = user_id;
  rec.label.cls = flasher ? UserClass::offensive : UserClass::normal;
  rec.label.subtype = flasher ? UserSubtype::obscene : UserSubtype::normal_content;
  rec.seq.user_id = user_id;

  const int w = o.width;
  const int h = o.height;
  const bool dark = unit(rng) < o.dark_fraction;
  const Rgb background = pick(kBackgroundTones);
  const Rgb skin = pick(kSkinTones);
  const Rgb cloth = pick(kClothTones);

  // Static background texture shared by all frames.
  std::vector<Rgb> scene(static_cast<std::size_t>(w) * h);
  for (auto& p : scene) p = jitter(background, 4.0, rng);

  const bool face_drawn = !flasher && unit(rng) < o.face_visible_if_normal;
  const Rect face{w / 2 - w / 10, h / 20, w / 5, h / 4};
  const Rect body_size{0, h / 3 + h / 10, static_cast<int>(w * 0.4), h / 2};

  // Body pixels: skin with probability skin_fraction, fixed per body pixel.
  std::vector<std::uint8_t> body_skin(static_cast<std::size_t>(body_size.w) * body_size.h);
  std::vector<Rgb> body_colour(body_skin.size());
  for (std::size_t i = 0; i < body_skin.size(); ++i) {
    body_skin[i] = unit(rng) < skin_fraction ? 1 : 0;
    body_colour[i] = jitter(body_skin[i] ? skin : cloth, 5.0, rng);
  }
  std::vector<Rgb> face_colour(static_cast<std::size_t>(face.w) * face.h);
  for (auto& p : face_colour) p = jitter(skin, 5.0, rng);

  std::uniform_int_distribution<int> shift(0, w - body_size.w);
  for (int k = 0; k < o.frames; ++k) {
    const Rect body{shift(rng), body_size.y, body_size.w, body_size.h};
    std::vector<Rgb> px = scene;
    SkinMask truth(w, h);
    if (face_drawn) {
      for (int y = face.y; y < face.y + face.h; ++y) {
        for (int x = face.x; x < face.x + face.w; ++x) {
          px[static_cast<std::size_t>(y) * w + x] =
              face_colour[static_cast<std::size_t>(y - face.y) * face.w + (x - face.x)];
          truth.set(x, y, true);
        }
      }
    }
    for (int y = body.y; y < std::min(h, body.y + body.h); ++y) {
      for (int x = body.x; x < body.x + body.w; ++x) {
        const auto i = static_cast<std::size_t>(y - body.y) * body.w + (x - body.x);
        px[static_cast<std::size_t>(y) * w + x] = body_colour[i];
        if (body_skin[i]) truth.set(x, y, true);
      }
    }
    if (dark) {
      for (auto& p : px) p = {static_cast<std::uint8_t>(p.r / 12), static_cast<std::uint8_t>(p.g / 12),
                              static_cast<std::uint8_t>(p.b / 12)};
    }
    rec.seq.frames.emplace_back(w, h, std::move(px), 10.0 * k);
    rec.seq.frame_ids.push_back(user_id + "/frame_" + std::to_string(k + 1));
    rec.masks.emplace_back(o.with_masks ? std::optional<SkinMask>(std::move(truth)) : std::nullopt);

    if (!o.with_detections) {
      rec.detections.emplace_back(std::nullopt);
      continue;
    }
    std::vector<Detection> dets;
    for (const auto& [kind, rel] : o.conditionals.entries) {
      const auto rates = rates_for(rel, o.normal_prior);
      const bool present = unit(rng) < (flasher ? rates.present_if_flasher : rates.present_if_normal);
      Detection d{kind, present, std::nullopt};
      if (present && kind == DetectorKind::face) {
        d.box = face_drawn ? FaceBox{face.x, face.y, face.w, face.h}
                           : FaceBox{std::uniform_int_distribution<int>(0, w - face.w)(rng), 0,
                                     face.w, face.h};
      }
      dets.push_back(d);
    }
    rec.detections.emplace_back(std::move(dets));
  }
  return rec;
}

Dataset generate_corpus(std::size_t users, const CorpusOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset ds;
  ds.users.reserve(users);
  char id[32];
  for (std::size_t i = 0; i < users; ++i) {
    const bool flasher = unit(rng) >= options.normal_prior;
    std::normal_distribution<double> fraction(
        flasher ? options.flasher_skin_mean : options.normal_skin_mean, options.skin_spread);
    const double s = std::clamp(fraction(rng), 0.0, 1.0);
    std::snprintf(id, sizeof id, "u%05zu", i);
    ds.users.push_back(make_user(id, flasher, s, options, rng));
  }
  return ds;
}

}  // namespace flashguard::synthetic
