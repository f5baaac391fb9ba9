#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "hairsynth/nn/adam.hpp"
#include "hairsynth/nn/checkpoint.hpp"
#include "hairsynth/pipeline/config.hpp"
#include "hairsynth/pipeline/example.hpp"

namespace hairsynth::pipeline {

// Training phases in the order they must run.
enum class Phase : std::uint8_t { untrained = 0, pretrain_synthetic = 1, refine_real = 2, end_to_end = 3 };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::untrained: return "untrained";
    case Phase::pretrain_synthetic: return "pretrain-synthetic";
    case Phase::refine_real: return "refine-real";
    case Phase::end_to_end: return "end-to-end";
  }
  return "unknown";
}

struct NetPair {
  nn::Generator<float> g;
  nn::Discriminator<float> d;
};

// One generator/discriminator set: the stroke-conditioned pipeline or the
// stroke-free initializer. Single-stage variants leave stage2 unused.
struct Pipeline {
  NetPair stage1, stage2;
  Phase phase = Phase::untrained;
  std::uint64_t stage1_digest = 0;  // G1 parameters when pretraining finished
  std::map<std::string, nn::Adam<float>> optim;

  bool trained() const { return phase != Phase::untrained; }
};

struct PipelineState {
  TrainConfig cfg;
  Pipeline main, init;

  PipelineState() : PipelineState(TrainConfig{}) {}
  explicit PipelineState(const TrainConfig& c) : cfg(c) {
    cfg.validate();
    build(main, 0);
    build(init, 100);
  }

  bool single_stage() const { return cfg.single_stage; }

  std::map<std::string, nn::ParamList<float>> sections() const {
    std::map<std::string, nn::ParamList<float>> s;
    s["G1"] = main.stage1.g.params();
    s["D1"] = main.stage1.d.params();
    s["init_G1"] = init.stage1.g.params();
    s["init_D1"] = init.stage1.d.params();
    if (!single_stage()) {
      s["G2"] = main.stage2.g.params();
      s["D2"] = main.stage2.d.params();
      s["init_G2"] = init.stage2.g.params();
      s["init_D2"] = init.stage2.d.params();
    }
    return s;
  }

  std::uint64_t digest() const {
    std::uint64_t h = config_digest(cfg);
    for (const auto& [name, params] : sections()) h = nn::params_digest(params, fnv1a64(name.data(), name.size(), h));
    return h;
  }

 private:
  void build(Pipeline& p, std::uint64_t salt) {
    const std::uint64_t s = cfg.seed;
    if (cfg.single_stage) {
      p.stage1.g = nn::Generator<float>(cfg.generator(kSingleChannels), mix_seed(s, salt + 1));
      p.stage1.d = nn::Discriminator<float>(cfg.discriminator(kSingleChannels), mix_seed(s, salt + 2));
      return;
    }
    p.stage1.g = nn::Generator<float>(cfg.generator(kStage1Channels), mix_seed(s, salt + 1));
    p.stage1.d = nn::Discriminator<float>(cfg.discriminator(kStage1Channels), mix_seed(s, salt + 2));
    p.stage2.g = nn::Generator<float>(cfg.generator(kStage2Channels), mix_seed(s, salt + 3));
    p.stage2.d = nn::Discriminator<float>(cfg.discriminator(kStage2Channels), mix_seed(s, salt + 4));
  }
};

// Checkpoint layout (little-endian):
//   "HSCK" u32 version, u64 config digest, string config json,
//   per pipeline (main, init): u8 phase, u64 stage-1 digest,
//   u32 section count, per section: name + parameter blobs,
//   u32 optimizer count, per optimizer: key + Adam state.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& os, const PipelineState& st) {
  binio::write_magic(os, "HSCK");
  binio::write<std::uint32_t>(os, kCheckpointVersion);
  binio::write<std::uint64_t>(os, config_digest(st.cfg));
  binio::write_string(os, to_json(st.cfg).dump());
  for (const Pipeline* p : {&st.main, &st.init}) {
    binio::write<std::uint8_t>(os, static_cast<std::uint8_t>(p->phase));
    binio::write<std::uint64_t>(os, p->stage1_digest);
  }
  const auto secs = st.sections();
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(secs.size()));
  for (const auto& [name, params] : secs) {
    binio::write_string(os, name);
    nn::write_params(os, params);
  }
  std::uint32_t n_opt = 0;
  for (const Pipeline* p : {&st.main, &st.init}) n_opt += static_cast<std::uint32_t>(p->optim.size());
  binio::write<std::uint32_t>(os, n_opt);
  for (const auto& [prefix, p] : {std::pair{"main", &st.main}, std::pair{"init", &st.init}}) {
    for (const auto& [key, opt] : p->optim) {
      binio::write_string(os, std::string(prefix) + "/" + key);
      opt.write_state(os);
    }
  }
  if (!os) throw error(errc::io, "checkpoint write failed");
}

namespace detail {

inline nn::ParamList<float> optimizer_params(const Pipeline& p, const std::string& key) {
  auto cat = [](nn::ParamList<float> a, const nn::ParamList<float>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  if (key == "G1") return p.stage1.g.params();
  if (key == "D1") return p.stage1.d.params();
  if (key == "G2") return p.stage2.g.params();
  if (key == "D2") return p.stage2.d.params();
  if (key == "G12") return cat(p.stage1.g.params(), p.stage2.g.params());
  throw error(errc::decode, "unknown optimizer key " + key);
}

}  // namespace detail

inline PipelineState read_checkpoint(std::istream& is) {
  binio::expect_magic(is, "HSCK");
  const auto version = binio::read<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw error(errc::decode, "unsupported checkpoint version " + std::to_string(version));
  const auto digest = binio::read<std::uint64_t>(is);
  TrainConfig cfg;
  try {
    cfg = train_config_from_json(nlohmann::json::parse(binio::read_string(is)));
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::decode, std::string("checkpoint config: ") + e.what());
  }
  if (config_digest(cfg) != digest) throw error(errc::decode, "checkpoint config digest mismatch");
  PipelineState st(cfg);
  for (Pipeline* p : {&st.main, &st.init}) {
    const auto ph = binio::read<std::uint8_t>(is);
    if (ph > static_cast<std::uint8_t>(Phase::end_to_end)) throw error(errc::decode, "bad phase");
    p->phase = static_cast<Phase>(ph);
    p->stage1_digest = binio::read<std::uint64_t>(is);
  }
  auto secs = st.sections();
  const auto count = binio::read<std::uint32_t>(is);
  if (count != secs.size()) throw error(errc::decode, "checkpoint section count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = binio::read_string(is);
    auto it = secs.find(name);
    if (it == secs.end()) throw error(errc::decode, "unknown checkpoint section " + name);
    nn::read_params(is, it->second);
  }
  const auto n_opt = binio::read<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    const std::string full = binio::read_string(is);
    const auto slash = full.find('/');
    if (slash == std::string::npos) throw error(errc::decode, "bad optimizer key " + full);
    Pipeline& p = full.substr(0, slash) == "init" ? st.init : st.main;
    const std::string key = full.substr(slash + 1);
    nn::Adam<float> opt(detail::optimizer_params(p, key), nn::AdamConfig{});
    opt.read_state(is);
    p.optim.insert_or_assign(key, std::move(opt));
  }
  return st;
}

inline void save_checkpoint(const PipelineState& st, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  write_checkpoint(os, st);
}

inline PipelineState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error(errc::io, "cannot read " + path.string());
  return read_checkpoint(is);
}

}  // namespace hairsynth::pipeline
