#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "hairsynth/nn/losses.hpp"
#include "json.hpp"

namespace hairsynth::pipeline {

// Learning-rate schedule: the base rate is halved `halvings` times at evenly
// spaced points of the run.
struct Schedule {
  int epochs = 5;
  double lr = 2e-4;
  double beta1 = 0.5;
  int halvings = 2;

  double lr_at(long step, long total_steps) const {
    if (total_steps <= 0) return lr;
    const long k = std::min<long>(halvings, step * (halvings + 1) / total_steps);
    return lr * std::pow(0.5, static_cast<double>(k));
  }
  double final_lr() const { return lr * std::pow(0.5, halvings); }

  void validate(const char* what) const {
    if (epochs < 0 || !(lr > 0) || !(beta1 >= 0 && beta1 < 1) || halvings < 0) {
      throw error(errc::invalid_argument, std::string("bad schedule: ") + what);
    }
  }
};

inline Schedule stage1_schedule() { return {5, 2e-4, 0.5, 2}; }
inline Schedule end_to_end_schedule() { return {5, 1e-4, 0.75, 2}; }

struct TrainConfig {
  int image_size = 64;
  int base_width = 16;
  int depth = 4;
  int batch = 4;
  Schedule stage1 = stage1_schedule();
  Schedule e2e = end_to_end_schedule();
  nn::LossConfig loss;
  bool use_adv = true;
  bool use_per = true;
  bool retrain_d1 = true;  // end-to-end keeps updating the stage-1 discriminator
  bool single_stage = false;
  nn::Init init = nn::Init::normal_002;
  std::uint64_t seed = 1;

  void validate() const {
    if (image_size < (1 << depth) || (image_size & (image_size - 1)) != 0) {
      throw error(errc::invalid_argument, "image_size must be a power of two >= 2^depth");
    }
    if (base_width < 1 || depth < 3 || batch < 1) throw error(errc::invalid_argument, "network sizes");
    stage1.validate("stage1");
    e2e.validate("e2e");
    loss.validate();
  }

  nn::GeneratorConfig generator(int in_channels) const {
    return {.in_channels = in_channels, .base_width = base_width, .depth = depth, .skip = true, .init = init};
  }
  nn::DiscriminatorConfig discriminator(int cond_channels) const {
    return {.cond_channels = cond_channels, .base_width = base_width, .depth = depth, .init = init};
  }
};

// The full-scale budget, kept for reference runs.
inline TrainConfig full_preset() {
  TrainConfig c;
  c.image_size = 512;
  c.base_width = 64;
  c.depth = 8;
  c.batch = 1;
  c.stage1.epochs = 50;
  c.e2e.epochs = 25;
  return c;
}

inline nlohmann::json to_json(const Schedule& s) {
  return {{"epochs", s.epochs}, {"lr", s.lr}, {"beta1", s.beta1}, {"halvings", s.halvings}};
}

inline Schedule schedule_from_json(const nlohmann::json& j, Schedule s) {
  s.epochs = j.value("epochs", s.epochs);
  s.lr = j.value("lr", s.lr);
  s.beta1 = j.value("beta1", s.beta1);
  s.halvings = j.value("halvings", s.halvings);
  return s;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"image_size", c.image_size},
          {"base_width", c.base_width},
          {"depth", c.depth},
          {"batch", c.batch},
          {"stage1", to_json(c.stage1)},
          {"e2e", to_json(c.e2e)},
          {"loss",
           {{"w_l1", c.loss.w_l1},
            {"w_adv", c.loss.w_adv},
            {"w_per", c.loss.w_per},
            {"mask_gain", c.loss.mask_gain},
            {"boundary_gain", c.loss.boundary_gain},
            {"morph_k", c.loss.morph_k}}},
          {"use_adv", c.use_adv},
          {"use_per", c.use_per},
          {"retrain_d1", c.retrain_d1},
          {"single_stage", c.single_stage},
          {"init", c.init == nn::Init::he ? "he" : "normal_002"},
          {"seed", c.seed}};
}

// Missing keys keep their defaults; "preset": "full" starts from the full-scale budget.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c = j.value("preset", std::string("desk")) == "full" ? full_preset() : TrainConfig{};
  c.image_size = j.value("image_size", c.image_size);
  c.base_width = j.value("base_width", c.base_width);
  c.depth = j.value("depth", c.depth);
  c.batch = j.value("batch", c.batch);
  if (j.contains("stage1")) c.stage1 = schedule_from_json(j["stage1"], c.stage1);
  if (j.contains("e2e")) c.e2e = schedule_from_json(j["e2e"], c.e2e);
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    c.loss.w_l1 = l.value("w_l1", c.loss.w_l1);
    c.loss.w_adv = l.value("w_adv", c.loss.w_adv);
    c.loss.w_per = l.value("w_per", c.loss.w_per);
    c.loss.mask_gain = l.value("mask_gain", c.loss.mask_gain);
    c.loss.boundary_gain = l.value("boundary_gain", c.loss.boundary_gain);
    c.loss.morph_k = l.value("morph_k", c.loss.morph_k);
  }
  c.use_adv = j.value("use_adv", c.use_adv);
  c.use_per = j.value("use_per", c.use_per);
  c.retrain_d1 = j.value("retrain_d1", c.retrain_d1);
  c.single_stage = j.value("single_stage", c.single_stage);
  const std::string init = j.value("init", std::string(c.init == nn::Init::he ? "he" : "normal_002"));
  if (init != "he" && init != "normal_002") throw error(errc::invalid_argument, "init must be he or normal_002");
  c.init = init == "he" ? nn::Init::he : nn::Init::normal_002;
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw error(errc::io, "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::decode, path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

inline std::uint64_t config_digest(const TrainConfig& c) {
  // Only the fields that determine parameter shapes.
  const nlohmann::json j = {{"base_width", c.base_width}, {"depth", c.depth}, {"single_stage", c.single_stage}};
  const std::string s = j.dump();
  return fnv1a64(s.data(), s.size());
}

}  // namespace hairsynth::pipeline
