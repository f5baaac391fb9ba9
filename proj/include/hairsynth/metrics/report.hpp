#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hairsynth/metrics/metrics.hpp"
#include "hairsynth/pipeline/synthesize.hpp"
#include "json.hpp"

namespace hairsynth::metrics {

// One report row. Per-image columns average each image's value; the pooled
// MSE averages all squared errors and the pooled PSNR is taken from it.
struct MetricRow {
  std::string variant;
  double l1 = 0, perceptual = 0, mse = 0, psnr = 0, ssim = 0, fid = 0;
  double mse_pooled = 0, psnr_pooled = 0;
  std::size_t samples = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::uint64_t seed = 0;
  std::string note;
};

inline MetricRow evaluate_images(std::string variant, std::span<const RasterImage> outputs,
                                 std::span<const RasterImage> targets) {
  if (outputs.size() != targets.size()) throw error(errc::invalid_argument, "output and target counts differ");
  if (outputs.empty()) throw error(errc::invalid_argument, "evaluation split is empty");
  MetricRow r;
  r.variant = std::move(variant);
  r.samples = outputs.size();
  double sq = 0, entries = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double m = mse255(outputs[i], targets[i]);
    const double n = static_cast<double>(outputs[i].data().size());
    r.l1 += l1(outputs[i], targets[i]);
    r.perceptual += perceptual(outputs[i], targets[i]);
    r.mse += m;
    r.psnr += psnr_from_mse(m);
    r.ssim += ssim(outputs[i], targets[i]);
    sq += m * n;
    entries += n;
  }
  const double k = static_cast<double>(outputs.size());
  r.l1 /= k;
  r.perceptual /= k;
  r.mse /= k;
  r.psnr /= k;
  r.ssim /= k;
  r.mse_pooled = sq / entries;
  r.psnr_pooled = psnr_from_mse(r.mse_pooled);
  r.fid = fid_proxy(outputs, targets);
  return r;
}

// Pipeline outputs on examples, no trained-state check.
inline std::vector<RasterImage> run_outputs(const pipeline::PipelineState& st, const pipeline::Pipeline& p,
                                            std::span<const pipeline::Example> data) {
  std::vector<RasterImage> out;
  const int bs = std::max(1, st.cfg.batch);
  for (std::size_t i0 = 0; i0 < data.size(); i0 += bs) {
    std::vector<std::size_t> idx;
    for (std::size_t i = i0; i < std::min(data.size(), i0 + bs); ++i) idx.push_back(i);
    const auto r = pipeline::forward_batch(st, p, pipeline::collate(data, idx));
    for (int n = 0; n < r.image.n(); ++n) out.push_back(pipeline::to_image(r.image, n));
  }
  return out;
}

inline std::vector<RasterImage> targets_of(std::span<const pipeline::Example> data) {
  std::vector<RasterImage> out;
  for (const auto& e : data) {
    if (e.target.empty()) throw error(errc::invalid_argument, "evaluation example without target");
    out.push_back(pipeline::to_image(e.target));
  }
  return out;
}

// Synthesizes every example and scores the outputs against the targets.
inline MetricRow evaluate(const pipeline::PipelineState& st, const pipeline::Pipeline& p,
                          std::span<const pipeline::Example> data, std::string variant = "model") {
  if (!p.trained()) throw error(errc::untrained, "cannot evaluate an untrained checkpoint");
  return evaluate_images(std::move(variant), run_outputs(st, p, data), targets_of(data));
}

inline void write_csv(const MetricReport& rep, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  os << "variant,l1,perceptual,mse,psnr_db,ssim,fid_proxy,mse_pooled,psnr_pooled_db,samples,seed\n";
  os << std::setprecision(10);
  for (const auto& r : rep.rows) {
    os << '"' << r.variant << "\"," << r.l1 << ',' << r.perceptual << ',' << r.mse << ',' << r.psnr << ',' << r.ssim
       << ',' << r.fid << ',' << r.mse_pooled << ',' << r.psnr_pooled << ',' << r.samples << ',' << rep.seed << '\n';
  }
}

// Aligned table with the six headline columns (per-image averaging) and the
// pooled MSE/PSNR alongside.
inline std::string format_table(const MetricReport& rep) {
  std::size_t wname = 7;
  for (const auto& r : rep.rows) wname = std::max(wname, r.variant.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wname)) << "variant" << std::right;
  for (const char* h : {"L1", "VGG*", "MSE", "PSNR", "SSIM", "FID*", "MSE(pool)", "PSNR(pool)"})
    os << std::setw(12) << h;
  os << '\n';
  for (const auto& r : rep.rows) {
    os << std::left << std::setw(static_cast<int>(wname)) << r.variant << std::right << std::fixed;
    os << std::setw(12) << std::setprecision(4) << r.l1 << std::setw(12) << std::setprecision(4) << r.perceptual
       << std::setw(12) << std::setprecision(2) << r.mse << std::setw(12) << std::setprecision(2) << r.psnr
       << std::setw(12) << std::setprecision(4) << r.ssim << std::setw(12) << std::setprecision(4) << r.fid
       << std::setw(12) << std::setprecision(2) << r.mse_pooled << std::setw(12) << std::setprecision(2)
       << r.psnr_pooled << '\n';
  }
  os << "MSE/PSNR: mean of per-image values; (pool): from the MSE pooled over all pixels.\n";
  os << "VGG*/FID*: proxy feature network, not comparable to published absolute values.\n";
  if (!rep.note.empty()) os << rep.note << '\n';
  return os.str();
}

inline nlohmann::json to_json(const MetricRow& r) {
  return {{"variant", r.variant}, {"l1", r.l1},     {"perceptual", r.perceptual}, {"mse", r.mse},
          {"psnr_db", r.psnr},    {"ssim", r.ssim}, {"fid_proxy", r.fid},         {"mse_pooled", r.mse_pooled},
          {"psnr_pooled_db", r.psnr_pooled},        {"samples", r.samples}};
}

}  // namespace hairsynth::metrics
