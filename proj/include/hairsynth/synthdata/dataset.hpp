#pragma once

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hairsynth/imagecore/png_io.hpp"
#include "hairsynth/strokes/extract.hpp"
#include "hairsynth/strokes/stroke_io.hpp"
#include "hairsynth/synthdata/render.hpp"

namespace hairsynth {

enum class Split { train, test, val };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::val: return "val";
  }
  return "train";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "val") return Split::val;
  throw error(errc::invalid_argument, "unknown split " + s);
}

struct DatasetSample {
  RasterImage image;
  MaskImage mask;
  StrokeSet strokes;
  StyleParams params;
  Split split = Split::train;
};

/// Deterministic 90/5/5 assignment from the item's seed.
inline Split assign_split(std::uint64_t item_seed) {
  const auto bucket = mix_seed(item_seed, 0x5b17) % 100;
  return bucket < 90 ? Split::train : bucket < 95 ? Split::test : Split::val;
}

/// Grid draws for a dataset of `count` samples: a seeded permutation of the
/// full grid, so any count up to the grid size has distinct combinations and
/// the grid size itself enumerates every combination once. Density and
/// curliness are drawn per item.
inline std::vector<StyleParams> plan_dataset(std::size_t count, std::uint64_t seed,
                                             Domain domain = Domain::synthetic) {
  std::vector<StyleParams> out;
  out.reserve(count);
  std::vector<int> order;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    if (i % kGridSize == 0) {
      order.resize(kGridSize);
      for (int k = 0; k < kGridSize; ++k) order[k] = k;
      rng.shuffle(order);
    }
    StyleParams p = grid_params(order[i % kGridSize]);
    p.rng_seed = mix_seed(seed, i);
    Rng item(p.rng_seed);
    p.density = item.uniform(0.25, 0.6);
    p.curliness = item.uniform(0.0, 0.8);
    p.domain = domain;
    out.push_back(p);
  }
  return out;
}

/// Renders and annotates one sample. A draw with no visible fibers is
/// re-seeded deterministically; the returned params carry the seed used.
inline DatasetSample make_sample(StyleParams p, int size, const StrokeParams& sp = {}) {
  for (int attempt = 0;; ++attempt) {
    try {
      RenderedSample r = render_sample(p, size);
      DatasetSample s;
      s.strokes = extract_guide_strokes(r.image, r.mask, sp, p.rng_seed);
      s.image = std::move(r.image);
      s.mask = std::move(r.mask);
      s.params = p;
      s.split = assign_split(p.rng_seed);
      return s;
    } catch (const error& e) {
      if (e.code() != errc::empty_mask || attempt >= 16) throw;
      p.rng_seed = mix_seed(p.rng_seed, 0xbad);
      p.density = std::max(p.density, 0.25);
    }
  }
}

/// In-memory dataset, the same draws generate_dataset would write.
inline std::vector<DatasetSample> make_samples(std::size_t count, int size, std::uint64_t seed,
                                               Domain domain = Domain::synthetic, const StrokeParams& sp = {}) {
  std::vector<DatasetSample> out;
  out.reserve(count);
  for (const StyleParams& p : plan_dataset(count, seed, domain)) out.push_back(make_sample(p, size, sp));
  return out;
}

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line.

struct ManifestRow {
  std::string id;
  std::string image;
  std::string mask;
  std::string strokes;
  StyleParams params;
  Split split = Split::train;
  Domain domain = Domain::synthetic;
  int size = 0;
  std::string image_crc, mask_crc, strokes_crc;
};

inline nlohmann::json to_json(const StyleParams& p) {
  return {{"style_id", p.style_id},   {"length_level", p.length_level}, {"palette_id", p.palette_id},
          {"yaw_deg", p.yaw_deg},     {"density", p.density},           {"curliness", p.curliness},
          {"rng_seed", p.rng_seed},   {"domain", to_string(p.domain)}};
}

inline StyleParams style_params_from_json(const nlohmann::json& j) {
  StyleParams p;
  p.style_id = j.at("style_id").get<int>();
  p.length_level = j.at("length_level").get<int>();
  p.palette_id = j.at("palette_id").get<int>();
  p.yaw_deg = j.at("yaw_deg").get<int>();
  p.density = j.at("density").get<double>();
  p.curliness = j.at("curliness").get<double>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  p.domain = domain_from_string(j.value("domain", "synthetic"));
  return p;
}

inline nlohmann::json to_json(const ManifestRow& r) {
  return {{"id", r.id},
          {"image", r.image},
          {"mask", r.mask},
          {"strokes", r.strokes},
          {"params", to_json(r.params)},
          {"split", to_string(r.split)},
          {"domain", to_string(r.domain)},
          {"size", r.size},
          {"checksums", {{"image", r.image_crc}, {"mask", r.mask_crc}, {"strokes", r.strokes_crc}}}};
}

inline ManifestRow manifest_row_from_json(const nlohmann::json& j) {
  ManifestRow r;
  r.id = j.at("id").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.mask = j.at("mask").get<std::string>();
  r.strokes = j.at("strokes").get<std::string>();
  r.params = style_params_from_json(j.at("params"));
  r.split = split_from_string(j.at("split").get<std::string>());
  r.domain = domain_from_string(j.at("domain").get<std::string>());
  r.size = j.at("size").get<int>();
  const auto& c = j.at("checksums");
  r.image_crc = c.value("image", "");
  r.mask_crc = c.value("mask", "");
  r.strokes_crc = c.value("strokes", "");
  return r;
}

struct Manifest {
  std::filesystem::path root;  // relative row paths resolve against this
  std::vector<ManifestRow> rows;
  std::vector<std::string> errors;  // per-file ingestion failures

  std::filesystem::path resolve(const std::string& rel) const {
    const std::filesystem::path p(rel);
    return p.is_absolute() ? p : root / p;
  }
};

inline std::string file_crc32(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error(errc::io, "cannot read " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size()));
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  for (const auto& row : m.rows) os << to_json(row).dump() << '\n';
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw error(errc::io, "cannot read " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      m.rows.push_back(manifest_row_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::decode, path.string() + ": " + e.what());
    }
  }
  return m;
}

inline DatasetSample load_sample(const Manifest& m, const ManifestRow& row) {
  DatasetSample s;
  s.image = to_rgb(load_png(m.resolve(row.image)));
  s.mask = load_mask_png(m.resolve(row.mask));
  s.strokes = load_strokes(m.resolve(row.strokes));
  s.params = row.params;
  s.split = row.split;
  if (!s.mask.same_extent(s.image)) throw error(errc::extent_mismatch, row.id);
  return s;
}

inline std::vector<DatasetSample> load_samples(const Manifest& m, std::optional<Split> split = std::nullopt) {
  std::vector<DatasetSample> out;
  for (const auto& row : m.rows)
    if (!split || row.split == *split) out.push_back(load_sample(m, row));
  return out;
}

namespace detail {
inline std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw error(errc::io, "cannot create " + dir.string());
  return dir;
}
}  // namespace detail

/// Renders, annotates and writes `count` samples under out_dir:
/// images/, masks/, strokes/ and manifest.jsonl.
inline Manifest generate_dataset(std::size_t count, int size, std::uint64_t seed, const std::filesystem::path& out_dir,
                                 Domain domain = Domain::synthetic, const StrokeParams& sp = {}) {
  if (count < 1) throw error(errc::invalid_argument, "count must be >= 1");
  for (const char* sub : {"images", "masks", "strokes"}) detail::prepare_dir(out_dir / sub);
  Manifest m;
  m.root = out_dir;
  const auto plan = plan_dataset(count, seed, domain);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const DatasetSample s = make_sample(plan[i], size, sp);
    std::ostringstream id;
    id << std::setw(6) << std::setfill('0') << i;
    ManifestRow row;
    row.id = id.str();
    row.image = "images/" + row.id + ".png";
    row.mask = "masks/" + row.id + ".png";
    row.strokes = "strokes/" + row.id + ".json";
    save_png(s.image, out_dir / row.image);
    save_mask_png(s.mask, out_dir / row.mask);
    save_strokes(s.strokes, out_dir / row.strokes);
    row.params = s.params;
    row.split = s.split;
    row.domain = domain;
    row.size = size;
    row.image_crc = file_crc32(out_dir / row.image);
    row.mask_crc = file_crc32(out_dir / row.mask);
    row.strokes_crc = file_crc32(out_dir / row.strokes);
    m.rows.push_back(std::move(row));
  }
  write_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

/// Ingests `<name>.png` + `<name>_mask.png` pairs from `in_dir`, annotating
/// strokes into out_dir/strokes. Bad pairs are reported in `errors` and skipped.
inline Manifest ingest_real(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                            std::uint64_t seed = 0, const StrokeParams& sp = {}) {
  if (!std::filesystem::is_directory(in_dir)) throw error(errc::io, "not a directory: " + in_dir.string());
  detail::prepare_dir(out_dir / "strokes");
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
    const auto& p = entry.path();
    const std::string stem = p.stem().string();
    if (p.extension() == ".png" && !(stem.size() > 5 && stem.ends_with("_mask"))) images.push_back(p);
  }
  std::sort(images.begin(), images.end());
  Manifest m;
  m.root = out_dir;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img_path = images[i];
    const auto mask_path = img_path.parent_path() / (img_path.stem().string() + "_mask.png");
    try {
      if (!std::filesystem::exists(mask_path)) throw error(errc::io, "missing mask " + mask_path.filename().string());
      const RasterImage img = to_rgb(load_png(img_path));
      const MaskImage mask = load_mask_png(mask_path);
      if (!mask.same_extent(img)) throw error(errc::extent_mismatch, img_path.filename().string());
      const std::uint64_t item_seed = mix_seed(seed, i);
      const StrokeSet strokes = extract_guide_strokes(img, mask, sp, item_seed);
      ManifestRow row;
      row.id = img_path.stem().string();
      row.image = std::filesystem::absolute(img_path).string();
      row.mask = std::filesystem::absolute(mask_path).string();
      row.strokes = "strokes/" + row.id + ".json";
      save_strokes(strokes, out_dir / row.strokes);
      row.params.rng_seed = item_seed;
      row.params.domain = Domain::real;
      row.split = assign_split(item_seed);
      row.domain = Domain::real;
      row.size = img.width();
      row.image_crc = file_crc32(img_path);
      row.mask_crc = file_crc32(mask_path);
      row.strokes_crc = file_crc32(out_dir / row.strokes);
      m.rows.push_back(std::move(row));
    } catch (const error& e) {
      m.errors.push_back(img_path.filename().string() + ": " + e.what());
    }
  }
  write_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

}  // namespace hairsynth
