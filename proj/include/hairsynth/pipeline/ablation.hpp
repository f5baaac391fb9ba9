#pragma once

#include "hairsynth/metrics/report.hpp"
#include "hairsynth/pipeline/train.hpp"

namespace hairsynth::pipeline {

enum class DataSource { synthetic, real };

// One ablation row: a config change plus the data used by each phase.
struct Variant {
  std::string name;
  std::function<void(TrainConfig&)> tweak;
  DataSource pretrain = DataSource::synthetic;
  DataSource end_to_end = DataSource::real;
};

// The rows of the ablation table, in order.
inline std::vector<Variant> ablation_variants() {
  return {
      {"Isola et al.",
       [](TrainConfig& c) {
         c.single_stage = true;
         c.use_per = false;
         c.loss.mask_gain = 1;
         c.loss.boundary_gain = 1;
       }},
      {"Single Network", [](TrainConfig& c) { c.single_stage = true; }},
      {"Ours, w/o GAN", [](TrainConfig& c) { c.use_adv = false; }},
      {"Ours, w/o VGG", [](TrainConfig& c) { c.use_per = false; }},
      {"Ours, w/o synth.", [](TrainConfig&) {}, DataSource::real, DataSource::real},
      {"Ours, only synth.", [](TrainConfig&) {}, DataSource::synthetic, DataSource::synthetic},
      {"Ours", [](TrainConfig&) {}},
  };
}

struct AblationData {
  std::vector<Example> synthetic, real, heldout;  // heldout: real-domain evaluation split
};

struct AblationResult {
  metrics::MetricReport report;      // one row per variant
  metrics::MetricRow untrained;      // sanity floor, same architecture as "Ours"
  std::map<std::string, TrainLog> logs;
};

// Trains every variant under the same budget (cfg's schedules and batch) and
// evaluates on the held-out real split.
inline AblationResult run_ablation(const TrainConfig& base, const AblationData& data, const RunOptions& opts = {},
                                   const std::vector<Variant>& variants = ablation_variants()) {
  AblationResult res;
  res.report.seed = base.seed;
  res.report.note = "budget: stage-1 " + std::to_string(base.stage1.epochs) + " epochs, end-to-end " +
                    std::to_string(base.e2e.epochs) + " epochs, " + std::to_string(data.synthetic.size()) +
                    " synthetic / " + std::to_string(data.real.size()) + " real training samples, " +
                    std::to_string(data.heldout.size()) + " held-out real samples";
  const auto targets = metrics::targets_of(data.heldout);
  {
    const PipelineState floor(base);
    res.untrained =
        metrics::evaluate_images("untrained", metrics::run_outputs(floor, floor.main, data.heldout), targets);
  }
  for (const auto& v : variants) {
    TrainConfig cfg = base;
    if (v.tweak) v.tweak(cfg);
    PipelineState st(cfg);
    auto pick = [&](DataSource s) -> std::span<const Example> {
      return s == DataSource::synthetic ? data.synthetic : data.real;
    };
    if (opts.log) opts.log("variant: " + v.name);
    TrainLog log = train_stage1(st, st.main, pick(v.pretrain), data.heldout, Phase::pretrain_synthetic, opts);
    log.append(train_end_to_end(st, st.main, pick(v.end_to_end), data.heldout, opts));
    res.report.rows.push_back(
        metrics::evaluate_images(v.name, metrics::run_outputs(st, st.main, data.heldout), targets));
    res.logs.emplace(v.name, std::move(log));
  }
  return res;
}

// Row of `rep` named `name`.
inline const metrics::MetricRow& row_named(const metrics::MetricReport& rep, const std::string& name) {
  for (const auto& r : rep.rows)
    if (r.variant == name) return r;
  throw error(errc::invalid_argument, "no report row " + name);
}

// True when `a` is better than `b` on all six headline metrics.
inline bool beats_on_every_metric(const metrics::MetricRow& a, const metrics::MetricRow& b) {
  return a.l1 < b.l1 && a.perceptual < b.perceptual && a.mse < b.mse && a.psnr > b.psnr && a.ssim > b.ssim &&
         a.fid < b.fid;
}

}  // namespace hairsynth::pipeline
