#include "flashguard/dataset.hpp"


#include <cstdio>
#include <fstream>
#include <sstream>

#include "flashguard/error.hpp"
#include "flashguard/png_io.hpp"

namespace flashguard {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \r\t") == std::string_view::npos) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::parse, "not a number: '" + s + "'");
  }
}

UserClass class_from_string(const std::string& s) {
  if (s == "offensive" || s == "misbehaving") return UserClass::offensive;
  if (s == "normal") return UserClass::normal;
  throw Error(Errc::parse, "unknown user class '" + s + "'");
}

UserSubtype subtype_from_string(const std::string& s) {
  static const std::pair<const char*, UserSubtype> names[] = {
      {"obscene", UserSubtype::obscene},
      {"potential_offensive", UserSubtype::potential_offensive},
      {"advertisement", UserSubtype::advertisement},
      {"normal_content", UserSubtype::normal_content},
      {"potential_normal", UserSubtype::potential_normal},
      {"other", UserSubtype::other},
  };
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  throw Error(Errc::parse, "unknown user subtype '" + s + "'");
}

}  // namespace

void UserLabel::validate() const {
  if (user_id.empty()) throw Error(Errc::invalid_argument, "user id is empty");
  const bool offensive_subtype = subtype == UserSubtype::obscene ||
                                 subtype == UserSubtype::potential_offensive ||
                                 subtype == UserSubtype::advertisement;
  if (offensive_subtype != (cls == UserClass::offensive)) {
    throw Error(Errc::invalid_argument,
                "subtype " + to_string(subtype) + " does not match class " + to_string(cls));
  }
}

std::string to_string(UserClass c) {
  return c == UserClass::offensive ? "offensive" : "normal";
}

std::string to_string(UserSubtype s) {
  switch (s) {
    case UserSubtype::obscene: return "obscene";
    case UserSubtype::potential_offensive: return "potential_offensive";
    case UserSubtype::advertisement: return "advertisement";
    case UserSubtype::normal_content: return "normal_content";
    case UserSubtype::potential_normal: return "potential_normal";
    case UserSubtype::other: return "other";
  }
  return "other";
}

std::vector<UserLabel> parse_labels_csv(std::string_view text) {
  const auto rows = csv_rows(text);
  if (rows.empty() || rows.front().empty() || rows.front()[0] != "user_id") {
    throw Error(Errc::parse, "labels.csv must start with a user_id,class[,subtype] header");
  }
  std::vector<UserLabel> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 2 || r.size() > 3) {
      throw Error(Errc::parse, "labels.csv line " + std::to_string(i + 1) + " has " +
                                   std::to_string(r.size()) + " fields");
    }
    UserLabel label;
    label.user_id = r[0];
    label.cls = class_from_string(r[1]);
    if (r.size() == 3 && !r[2].empty()) {
      label.subtype = subtype_from_string(r[2]);
    } else {
      label.subtype = label.cls == UserClass::offensive ? UserSubtype::obscene
                                                        : UserSubtype::normal_content;
    }
    try {
      label.validate();
    } catch (const Error& e) {
      throw Error(Errc::parse, e.what());
    }
    out.push_back(std::move(label));
  }
  return out;
}

std::string labels_csv(std::span<const UserLabel> labels) {
  std::string out = "user_id,class,subtype\n";
  for (const auto& l : labels) {
    out += l.user_id + "," + to_string(l.cls) + "," + to_string(l.subtype) + "\n";
  }
  return out;
}

RecordedProvider UserRecord::provider() const {
  RecordedProvider p;
  for (std::size_t i = 0; i < detections.size() && i < seq.frames.size(); ++i) {
    if (detections[i]) p.add(seq.frame_id(i), *detections[i]);
  }
  return p;
}

Dataset load_dataset(const fs::path& root) {
  const auto labels = parse_labels_csv(read_text_file(root / "labels.csv"));
  Dataset ds;
  ds.users.reserve(labels.size());
  for (const auto& label : labels) {
    const auto dir = root / label.user_id;
    UserRecord rec;
    rec.label = label;
    rec.seq.user_id = label.user_id;
    for (int k = 1;; ++k) {
      const auto stem = "frame_" + std::to_string(k);
      const auto image = dir / (stem + ".png");
      if (!fs::exists(image)) break;
      rec.seq.frames.push_back(read_png(image));
      rec.seq.frame_ids.push_back(image.string());
      const auto det = dir / (stem + ".det.json");
      if (fs::exists(det)) {
        try {
          rec.detections.emplace_back(parse_sidecar(read_text_file(det)));
        } catch (const Error& e) {
          throw Error(e.code(), det.string() + ": " + e.what());
        }
      } else {
        rec.detections.emplace_back(std::nullopt);
      }
      const auto mask = dir / (stem + ".skin.png");
      if (fs::exists(mask)) {
        rec.masks.emplace_back(read_mask_png(mask));
      } else {
        rec.masks.emplace_back(std::nullopt);
      }
    }
    if (rec.seq.frames.empty()) {
      throw Error(Errc::io, "user " + label.user_id + " has no frame_1.png under " + dir.string());
    }
    ds.users.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const fs::path& root, const Dataset& dataset) {
  fs::create_directories(root);
  std::vector<UserLabel> labels;
  for (const auto& rec : dataset.users) {
    labels.push_back(rec.label);
    const auto dir = root / rec.label.user_id;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < rec.seq.frames.size(); ++i) {
      const auto stem = "frame_" + std::to_string(i + 1);
      write_png(dir / (stem + ".png"), rec.seq.frames[i]);
      if (i < rec.detections.size() && rec.detections[i]) {
        write_text_file(dir / (stem + ".det.json"), sidecar_json(*rec.detections[i]) + "\n");
      }
      if (i < rec.masks.size() && rec.masks[i]) {
        write_mask_png(dir / (stem + ".skin.png"), *rec.masks[i]);
      }
    }
  }
  write_text_file(root / "labels.csv", labels_csv(labels));
}

std::vector<TrainingRow> parse_training_csv(std::string_view text) {
  const auto rows = csv_rows(text);
  if (rows.empty() || rows.front().size() != 5 || rows.front()[0] != "user_id") {
    throw Error(Errc::parse, "training table must start with user_id,sp1,sp2,sp3,label");
  }
  std::vector<TrainingRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) {
      throw Error(Errc::parse, "training table line " + std::to_string(i + 1) + " needs 5 fields");
    }
    TrainingRow row;
    row.user_id = r[0];
    row.sp = {parse_double(r[1]), parse_double(r[2]), parse_double(r[3])};
    if (r[4] == "misbehaving") {
      row.misbehaving = true;
    } else if (r[4] != "normal") {
      throw Error(Errc::parse, "training label must be normal or misbehaving, got '" + r[4] + "'");
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string training_csv(std::span<const TrainingRow> rows) {
  std::string out = "user_id,sp1,sp2,sp3,label\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.user_id;
    for (double v : {r.sp.sp1, r.sp.sp2, r.sp.sp3}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += r.misbehaving ? ",misbehaving\n" : ",normal\n";
  }
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

}  // namespace flashguard
