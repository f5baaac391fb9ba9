#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

#include "hairsynth/pipeline/synthesize.hpp"

namespace hairsynth::pipeline {

// One optimizer step of one phase; generator terms are unweighted.
struct LossRow {
  std::string phase;
  int epoch = 0;
  long step = 0;
  double lr = 0;
  double d1 = 0, l1_1 = 0, adv_1 = 0, per_1 = 0;
  double d2 = 0, l1_2 = 0, adv_2 = 0, per_2 = 0;
  double total = 0;
};

// Statistics of a pipeline on held-out examples.
struct HeldoutStats {
  double stage1_masked_l1 = 0;  // stage-1 output vs target inside the mask
  double full_l1 = 0;           // final output vs target, whole image
  double outside_dev = 0;       // final output vs input outside dilate(mask, k)
  double color_pass = 0;        // fraction with masked mean color within tol of the conditioning color
  double color_max_err = 0;     // worst per-channel masked mean color error
};

struct EpochRow {
  std::string phase;
  int epoch = 0;  // 0 = before the first update
  HeldoutStats stats;
};

struct TrainLog {
  std::vector<LossRow> steps;
  std::vector<EpochRow> epochs;
  double seconds = 0;

  void append(const TrainLog& o) {
    steps.insert(steps.end(), o.steps.begin(), o.steps.end());
    epochs.insert(epochs.end(), o.epochs.begin(), o.epochs.end());
    seconds += o.seconds;
  }
};

struct RunOptions {
  double color_tol = 0.15;
  std::function<void(const std::string&)> log;  // progress lines, optional
};

inline void write_loss_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  os << "phase,epoch,step,lr,d1,l1_1,adv_1,per_1,d2,l1_2,adv_2,per_2,total\n";
  os.precision(9);
  for (const auto& r : log.steps) {
    os << r.phase << ',' << r.epoch << ',' << r.step << ',' << r.lr << ',' << r.d1 << ',' << r.l1_1 << ','
       << r.adv_1 << ',' << r.per_1 << ',' << r.d2 << ',' << r.l1_2 << ',' << r.adv_2 << ',' << r.per_2 << ','
       << r.total << '\n';
  }
}

inline void write_heldout_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  os << "phase,epoch,stage1_masked_l1,full_l1,outside_dev,color_pass,color_max_err\n";
  os.precision(9);
  for (const auto& r : log.epochs) {
    os << r.phase << ',' << r.epoch << ',' << r.stats.stage1_masked_l1 << ',' << r.stats.full_l1 << ','
       << r.stats.outside_dev << ',' << r.stats.color_pass << ',' << r.stats.color_max_err << '\n';
  }
}

namespace detail {

inline void set_trainable(const nn::ParamList<float>& params, bool on) {
  for (const auto& p : params) p.var.node()->requires_grad = on;
}

inline Var<float> zero_scalar() { return Var<float>(Tensor<float>({1, 1, 1, 1})); }

inline Var<float> to01(const Var<float>& x) { return nn::affine(x, 0.5f, 0.5f); }

struct StageTerms {
  Var<float> total;
  double l1 = 0, adv = 0, per = 0;
};

// Generator objective of one stage. D must already be frozen.
inline StageTerms generator_terms(const PipelineState& st, const nn::Discriminator<float>& d, const Var<float>& cond,
                                  const Var<float>& fake, const Var<float>& real, const Batch& b, nn::L1Mode mode) {
  const Var<float> l1 = nn::weighted_l1(fake, real, b.mask, b.band, st.cfg.loss, mode);
  const Var<float> adv = st.cfg.use_adv ? nn::bce_with_logits(d.forward(nn::detach(cond), fake), 1.f) : zero_scalar();
  const Var<float> per = st.cfg.use_per ? nn::perceptual_distance(fake, real) : zero_scalar();
  const auto t = nn::total_loss(l1, adv, per, st.cfg.loss);
  return {t.total, t.l1, t.adv, t.per};
}

// One discriminator update: 0.5 * (BCE(real, 1) + BCE(fake, 0)).
inline double discriminator_step(nn::Discriminator<float>& d, nn::Adam<float>& opt, const Var<float>& cond,
                                 const Var<float>& real, const Var<float>& fake) {
  const nn::ParamList<float> params = d.params();
  set_trainable(params, true);
  const Var<float> c = nn::detach(cond);
  const Var<float> loss = nn::affine(
      nn::add(nn::bce_with_logits(d.forward(c, real), 1.f), nn::bce_with_logits(d.forward(c, nn::detach(fake)), 0.f)),
      0.5f, 0.f);
  opt.zero_grad();
  nn::backward(loss);
  opt.step();
  set_trainable(params, false);
  return loss.item();
}

inline std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  return idx;
}

inline long steps_per_epoch(std::size_t n, int batch) { return static_cast<long>((n + batch - 1) / batch); }

inline void check_data(std::span<const Example> train, const PipelineState& st) {
  if (train.empty()) throw error(errc::invalid_argument, "training set is empty");
  const int s = st.cfg.image_size;
  for (const auto& e : train) {
    if (e.target.empty()) throw error(errc::invalid_argument, "training example without target");
    if (e.cond1.h() != s || e.cond1.w() != s) throw error(errc::extent_mismatch, "example extent vs image_size");
  }
}

inline std::uint64_t phase_salt(const Pipeline& p, const PipelineState& st, Phase phase) {
  return mix_seed(st.cfg.seed, (&p == &st.init ? 0x1000 : 0) + static_cast<std::uint64_t>(phase));
}

inline void say(const RunOptions& o, const std::string& s) {
  if (o.log) o.log(s);
}

}  // namespace detail

inline HeldoutStats heldout_stats(const PipelineState& st, const Pipeline& p, std::span<const Example> data,
                                  double color_tol = 0.15) {
  HeldoutStats h;
  if (data.empty()) return h;
  double s1 = 0, full = 0, out_sum = 0, out_count = 0;
  std::size_t pass = 0;
  const int bs = std::max(1, st.cfg.batch);
  for (std::size_t i0 = 0; i0 < data.size(); i0 += bs) {
    std::vector<std::size_t> idx;
    for (std::size_t i = i0; i < std::min(data.size(), i0 + bs); ++i) idx.push_back(i);
    const Batch b = collate(data, idx);
    const ForwardResult r = forward_batch(st, p, b);
    const std::size_t plane = b.mask.shape().plane();
    for (int n = 0; n < b.size(); ++n) {
      const float* m = b.mask.sample(n);
      const float* band = b.band.sample(n);
      const float* t = b.target.sample(n);
      const float* o = r.image.sample(n);
      double ms = 0, fs = 0, mc = 0;
      double col[3] = {0, 0, 0};
      for (std::size_t i = 0; i < plane; ++i) {
        const bool in = m[i] > 0.5f;
        const bool outside = !in && band[i] <= 0.5f;
        mc += in;
        for (int c = 0; c < 3; ++c) {
          const double d = std::abs(double(o[c * plane + i]) - t[c * plane + i]);
          fs += d;
          if (outside) out_sum += d;
          if (in) col[c] += o[c * plane + i];
          if (in && !r.stage1.empty()) ms += std::abs(double(r.stage1.sample(n)[c * plane + i]) - t[c * plane + i]);
        }
        out_count += outside ? 3 : 0;
      }
      s1 += ms / (3 * mc);
      full += fs / (3.0 * plane);
      double worst = 0;
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(col[c] / mc - data[idx[n]].color[c]));
      h.color_max_err = std::max(h.color_max_err, worst);
      pass += worst <= color_tol;
    }
  }
  const double n = static_cast<double>(data.size());
  h.stage1_masked_l1 = st.single_stage() ? 0 : s1 / n;
  h.full_l1 = full / n;
  h.outside_dev = out_count > 0 ? out_sum / out_count : 0;
  h.color_pass = static_cast<double>(pass) / n;
  return h;
}

namespace detail {

// Shared epoch loop: shuffles, batches, sets the scheduled lr on every
// optimizer, runs `step` and records held-out stats after each epoch.
template <class StepFn>
void run_epochs(const PipelineState& st, const Pipeline& p, std::span<const Example> train,
                std::span<const Example> heldout, const Schedule& sch, const std::string& name, std::uint64_t seed,
                const std::vector<nn::Adam<float>*>& optims, const RunOptions& opts, TrainLog& log, StepFn&& step) {
  log.epochs.push_back({name, 0, heldout_stats(st, p, heldout, opts.color_tol)});
  Rng rng(seed);
  const long per_epoch = steps_per_epoch(train.size(), st.cfg.batch);
  const long total = per_epoch * sch.epochs;
  long s = 0;
  for (int epoch = 1; epoch <= sch.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), rng);
    for (long k = 0; k < per_epoch; ++k, ++s) {
      const auto first = order.begin() + k * st.cfg.batch;
      const auto last = order.begin() + std::min<long>(static_cast<long>(order.size()), (k + 1) * st.cfg.batch);
      const std::vector<std::size_t> idx(first, last);
      const double lr = sch.lr_at(s, total);
      for (auto* o : optims) o->set_lr(lr);
      LossRow row{name, epoch, s, lr};
      step(collate(train, idx), row);
      log.steps.push_back(row);
    }
    log.epochs.push_back({name, epoch, heldout_stats(st, p, heldout, opts.color_tol)});
    const auto& hs = log.epochs.back().stats;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s epoch %d: heldout stage1 L1 %.5f full L1 %.5f outside dev %.5f", name.c_str(),
                  epoch, hs.stage1_masked_l1, hs.full_l1, hs.outside_dev);
    say(opts, buf);
  }
}

inline nn::Adam<float>& fresh_optimizer(Pipeline& p, const std::string& key, const Schedule& sch) {
  p.optim.insert_or_assign(key, nn::Adam<float>(optimizer_params(p, key), {.lr = sch.lr, .beta1 = sch.beta1}));
  return p.optim.at(key);
}

inline void check_stage1_digest(const Pipeline& p) {
  if (nn::params_digest(p.stage1.g.params()) != p.stage1_digest) {
    throw error(errc::phase_violation, "stage-1 digest does not match the pretrained checkpoint");
  }
}

// Stage-2 generator input and output with G1 frozen.
inline void stage2_on_frozen(const Pipeline& p, const Batch& b, Var<float>& cond2) {
  Var<float> out1;
  {
    nn::NoGrad guard;
    out1 = p.stage1.g.forward(Var<float>(b.cond1));
  }
  cond2 = stage2_input(out1, b);
}

}  // namespace detail

// Individual training of the first network (or of the whole single network).
// Pretraining starts from scratch and, for two-stage states, also trains the
// second network on the frozen stage-1 output. Refining continues only the
// first network and needs the pretrained digest.
inline TrainLog train_stage1(PipelineState& st, Pipeline& p, std::span<const Example> train,
                             std::span<const Example> heldout, Phase phase = Phase::pretrain_synthetic,
                             const RunOptions& opts = {}) {
  detail::check_data(train, st);
  if (phase == Phase::pretrain_synthetic) {
    if (p.phase != Phase::untrained) {
      throw error(errc::phase_violation, std::string("pretraining needs an untrained state, have ") + to_string(p.phase));
    }
  } else if (phase == Phase::refine_real) {
    if (p.phase != Phase::pretrain_synthetic) throw error(errc::phase_violation, "refine needs a pretrained stage 1");
    detail::check_stage1_digest(p);
  } else {
    throw error(errc::invalid_argument, "train_stage1 runs pretrain or refine only");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const Schedule& sch = st.cfg.stage1;
  const bool single = st.single_stage();
  p.optim.clear();
  nn::Adam<float>& og = detail::fresh_optimizer(p, "G1", sch);
  nn::Adam<float>& od = detail::fresh_optimizer(p, "D1", sch);
  detail::set_trainable(p.stage1.d.params(), false);
  TrainLog log;
  const std::string name = to_string(phase);
  detail::run_epochs(st, p, train, heldout, sch, name, detail::phase_salt(p, st, phase), {&og, &od}, opts, log,
                     [&](const Batch& b, LossRow& row) {
                       Var<float> cond, fake, real;
                       nn::L1Mode mode;
                       if (single) {
                         cond = single_stage_input(b);
                         fake = detail::to01(p.stage1.g.forward(cond));
                         real = Var<float>(b.target);
                         mode = nn::L1Mode::stage2;
                       } else {
                         cond = Var<float>(b.cond1);
                         fake = nn::mul_const(detail::to01(p.stage1.g.forward(cond)), b.mask);
                         real = Var<float>(masked_in(b.target, b.mask));
                         mode = nn::L1Mode::stage1;
                       }
                       if (st.cfg.use_adv) row.d1 = detail::discriminator_step(p.stage1.d, od, cond, real, fake);
                       const auto g = detail::generator_terms(st, p.stage1.d, cond, fake, real, b, mode);
                       og.zero_grad();
                       nn::backward(g.total);
                       og.step();
                       row.l1_1 = g.l1;
                       row.adv_1 = g.adv;
                       row.per_1 = g.per;
                       row.total = g.total.item();
                     });
  detail::set_trainable(p.stage1.d.params(), true);
  p.stage1_digest = nn::params_digest(p.stage1.g.params());

  if (!single && phase == Phase::pretrain_synthetic) {
    nn::Adam<float>& og2 = detail::fresh_optimizer(p, "G2", sch);
    nn::Adam<float>& od2 = detail::fresh_optimizer(p, "D2", sch);
    detail::set_trainable(p.stage2.d.params(), false);
    detail::run_epochs(st, p, train, heldout, sch, "pretrain-stage2", detail::phase_salt(p, st, phase) ^ 2,
                       {&og2, &od2}, opts, log, [&](const Batch& b, LossRow& row) {
                         Var<float> cond2;
                         detail::stage2_on_frozen(p, b, cond2);
                         const Var<float> fake = detail::to01(p.stage2.g.forward(cond2));
                         const Var<float> real(b.target);
                         if (st.cfg.use_adv) row.d2 = detail::discriminator_step(p.stage2.d, od2, cond2, real, fake);
                         const auto g = detail::generator_terms(st, p.stage2.d, cond2, fake, real, b, nn::L1Mode::stage2);
                         og2.zero_grad();
                         nn::backward(g.total);
                         og2.step();
                         row.l1_2 = g.l1;
                         row.adv_2 = g.adv;
                         row.per_2 = g.per;
                         row.total = g.total.item();
                       });
    detail::set_trainable(p.stage2.d.params(), true);
  }
  p.phase = phase;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}

// Joint training of both stages with the per-stage losses summed. A
// single-stage state continues its one network under this schedule.
inline TrainLog train_end_to_end(PipelineState& st, Pipeline& p, std::span<const Example> train,
                                 std::span<const Example> heldout, const RunOptions& opts = {}) {
  detail::check_data(train, st);
  if (p.phase != Phase::pretrain_synthetic && p.phase != Phase::refine_real) {
    throw error(errc::phase_violation, std::string("end-to-end needs a pretrained stage 1, have ") + to_string(p.phase));
  }
  detail::check_stage1_digest(p);
  const auto t_start = std::chrono::steady_clock::now();
  const Schedule& sch = st.cfg.e2e;
  const bool single = st.single_stage();
  p.optim.clear();
  TrainLog log;
  const std::string name = to_string(Phase::end_to_end);
  const std::uint64_t seed = detail::phase_salt(p, st, Phase::end_to_end);
  if (single) {
    nn::Adam<float>& og = detail::fresh_optimizer(p, "G1", sch);
    nn::Adam<float>& od = detail::fresh_optimizer(p, "D1", sch);
    detail::set_trainable(p.stage1.d.params(), false);
    detail::run_epochs(st, p, train, heldout, sch, name, seed, {&og, &od}, opts, log, [&](const Batch& b, LossRow& row) {
      const Var<float> cond = single_stage_input(b);
      const Var<float> fake = detail::to01(p.stage1.g.forward(cond));
      const Var<float> real(b.target);
      if (st.cfg.use_adv) row.d1 = detail::discriminator_step(p.stage1.d, od, cond, real, fake);
      const auto g = detail::generator_terms(st, p.stage1.d, cond, fake, real, b, nn::L1Mode::stage2);
      og.zero_grad();
      nn::backward(g.total);
      og.step();
      row.l1_1 = g.l1;
      row.adv_1 = g.adv;
      row.per_1 = g.per;
      row.total = g.total.item();
    });
    detail::set_trainable(p.stage1.d.params(), true);
  } else {
    nn::Adam<float>& og = detail::fresh_optimizer(p, "G12", sch);
    nn::Adam<float>& od2 = detail::fresh_optimizer(p, "D2", sch);
    std::vector<nn::Adam<float>*> optims{&og, &od2};
    nn::Adam<float>* od1 = nullptr;
    if (st.cfg.retrain_d1) optims.push_back(od1 = &detail::fresh_optimizer(p, "D1", sch));
    detail::set_trainable(p.stage1.d.params(), false);
    detail::set_trainable(p.stage2.d.params(), false);
    detail::run_epochs(st, p, train, heldout, sch, name, seed, optims, opts, log, [&](const Batch& b, LossRow& row) {
      const Var<float> cond1(b.cond1);
      const Var<float> out1 = p.stage1.g.forward(cond1);
      const Var<float> fake1 = nn::mul_const(detail::to01(out1), b.mask);
      const Var<float> real1(masked_in(b.target, b.mask));
      const Var<float> cond2 = stage2_input(out1, b);
      const Var<float> fake2 = detail::to01(p.stage2.g.forward(cond2));
      const Var<float> real2(b.target);
      if (st.cfg.use_adv) {
        if (od1) row.d1 = detail::discriminator_step(p.stage1.d, *od1, cond1, real1, fake1);
        row.d2 = detail::discriminator_step(p.stage2.d, od2, cond2, real2, fake2);
      }
      const auto g1 = detail::generator_terms(st, p.stage1.d, cond1, fake1, real1, b, nn::L1Mode::stage1);
      const auto g2 = detail::generator_terms(st, p.stage2.d, cond2, fake2, real2, b, nn::L1Mode::stage2);
      const Var<float> loss = nn::add(g1.total, g2.total);
      og.zero_grad();
      nn::backward(loss);
      og.step();
      row.l1_1 = g1.l1;
      row.adv_1 = g1.adv;
      row.per_1 = g1.per;
      row.l1_2 = g2.l1;
      row.adv_2 = g2.adv;
      row.per_2 = g2.per;
      row.total = loss.item();
    });
    detail::set_trainable(p.stage1.d.params(), true);
    detail::set_trainable(p.stage2.d.params(), true);
  }
  p.phase = Phase::end_to_end;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return log;
}


// G1 gradient norm from the stage-2 loss alone (stage-1 loss disabled).
inline double stage1_grad_from_stage2(const PipelineState& st, const Pipeline& p, std::span<const Example> data) {
  if (st.single_stage()) throw error(errc::invalid_argument, "single-stage state has no stage 2");
  std::vector<std::size_t> idx(std::min<std::size_t>(data.size(), st.cfg.batch));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch b = collate(data, idx);
  auto g1 = p.stage1.g.params();
  nn::zero_grads(g1);
  const Var<float> out1 = p.stage1.g.forward(Var<float>(b.cond1));
  const Var<float> fake2 = detail::to01(p.stage2.g.forward(stage2_input(out1, b)));
  nn::backward(nn::weighted_l1(fake2, Var<float>(b.target), b.mask, b.band, st.cfg.loss, nn::L1Mode::stage2));
  double sq = 0;
  for (const auto& prm : g1)
    if (prm.var.has_grad())
      for (std::size_t i = 0; i < prm.var.grad().size(); ++i) sq += double(prm.var.grad()[i]) * prm.var.grad()[i];
  nn::zero_grads(g1);
  auto g2 = p.stage2.g.params();
  nn::zero_grads(g2);
  return std::sqrt(sq);
}

}  // namespace hairsynth::pipeline
