#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <iostream>

#include "hairsynth/flowfield/field_io.hpp"
#include "hairsynth/pipeline/ablation.hpp"
#include "hairsynth/serve/http.hpp"
#include "hairsynth/synthdata/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hairsynth;
using namespace hairsynth::pipeline;

namespace {

// Options every subcommand takes.
struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "RNG seed (overrides the config)");
  auto* out = app->add_option("--out", c.out, "output directory");
  if (out_required) out->required();
}

json read_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw error(errc::io, "cannot read " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw error(errc::decode, path + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return c.out;
}

StrokeParams stroke_params(const json& cfg) {
  StrokeParams p;
  if (!cfg.contains("strokes")) return p;
  const auto& j = cfg["strokes"];
  p.density = j.value("density", p.density);
  p.width = j.value("width", p.width);
  p.alpha = j.value("alpha", p.alpha);
  p.min_length = j.value("min_length", p.min_length);
  p.max_length = j.value("max_length", p.max_length);
  p.step = j.value("step", p.step);
  return p;
}

FieldParams field_params(const json& cfg) {
  FieldParams p;
  if (!cfg.contains("fields")) return p;
  const auto& j = cfg["fields"];
  p.sigma_grad = j.value("sigma_grad", p.sigma_grad);
  p.sigma_smooth = j.value("sigma_smooth", p.sigma_smooth);
  p.tau_coherence = j.value("tau_coherence", p.tau_coherence);
  p.lic_step = j.value("lic_step", p.lic_step);
  p.color_lic_half_length = j.value("color_lic_half_length", p.color_lic_half_length);
  return p;
}

TrainConfig train_config(const Common& c) {
  TrainConfig cfg = train_config_from_json(read_json(c.config));
  if (c.seed_set) cfg.seed = c.seed;
  return cfg;
}

RunOptions run_options() {
  RunOptions o;
  o.log = [](const std::string& s) { std::cerr << s << '\n'; };
  return o;
}

std::string hex(std::uint64_t v) { return serve::hex64(v); }

// Examples from a manifest directory; `split` empty means every row.
std::vector<Example> load_examples(const fs::path& dir, std::optional<Split> split, const TrainConfig& cfg,
                                   Conditioning kind) {
  const Manifest m = read_manifest(dir / "manifest.jsonl");
  const auto samples = load_samples(m, split);
  return make_examples(samples, cfg.image_size, kind, cfg.loss.morph_k);
}

// Held-out examples: an explicit manifest, else the val split, else test.
std::vector<Example> heldout_examples(const fs::path& data, const std::string& heldout, const TrainConfig& cfg,
                                      Conditioning kind) {
  if (!heldout.empty()) return load_examples(heldout, std::nullopt, cfg, kind);
  auto ex = load_examples(data, Split::val, cfg, kind);
  if (ex.empty()) ex = load_examples(data, Split::test, cfg, kind);
  if (ex.empty()) throw error(errc::invalid_argument, "no held-out samples; pass --heldout");
  return ex;
}

void write_ledger(const fs::path& dir, const std::string& command, const TrainConfig& cfg, const TrainLog& log,
                  const PipelineState& st, const json& extra = json::object()) {
  write_json(to_json(cfg), dir / "config.json");
  write_loss_csv(log, dir / "loss.csv");
  write_heldout_csv(log, dir / "heldout.csv");
  save_checkpoint(st, dir / "checkpoint.bin");
  json summary = {{"command", command},
                  {"seed", cfg.seed},
                  {"seconds", log.seconds},
                  {"steps", log.steps.size()},
                  {"main_phase", to_string(st.main.phase)},
                  {"init_phase", to_string(st.init.phase)},
                  {"checkpoint_digest", hex(st.digest())}};
  if (!log.epochs.empty()) {
    const auto& s = log.epochs.back().stats;
    summary["final"] = {{"stage1_masked_l1", s.stage1_masked_l1},
                        {"full_l1", s.full_l1},
                        {"outside_dev", s.outside_dev},
                        {"color_pass", s.color_pass}};
  }
  summary.update(extra);
  write_json(summary, dir / "summary.json");
  std::cout << summary.dump(2) << '\n';
}

// A checkpoint whose config matches `cfg`, or a fresh state when none is given.
PipelineState load_or_fresh(const std::string& checkpoint, const TrainConfig& cfg, bool config_given) {
  if (checkpoint.empty()) return PipelineState(cfg);
  PipelineState st = load_checkpoint(checkpoint);
  if (config_given && config_digest(st.cfg) != config_digest(cfg)) {
    throw error(errc::shape_mismatch, "checkpoint architecture differs from --config");
  }
  // Schedules, losses and seed come from the command line run.
  const TrainConfig shape = st.cfg;
  st.cfg = cfg;
  st.cfg.image_size = shape.image_size;
  st.cfg.base_width = shape.base_width;
  st.cfg.depth = shape.depth;
  st.cfg.single_stage = shape.single_stage;
  st.cfg.init = shape.init;
  return st;
}

int run_dataset_gen(const Common& c, std::size_t count, int size, const std::string& domain) {
  const json cfg = read_json(c.config);
  const json ds = cfg.value("dataset", json::object());
  const std::size_t n = count ? count : ds.value("count", std::size_t{200});
  const int sz = size ? size : ds.value("size", 64);
  const Domain d = domain_from_string(domain.empty() ? ds.value("domain", std::string("synthetic")) : domain);
  const std::uint64_t seed = c.seed_set ? c.seed : ds.value("seed", std::uint64_t{1});
  const Manifest m = generate_dataset(n, sz, seed, out_dir(c), d, stroke_params(cfg));
  std::size_t splits[3] = {};
  for (const auto& r : m.rows) ++splits[static_cast<int>(r.split)];
  std::cout << json({{"samples", m.rows.size()},
                     {"size", sz},
                     {"seed", seed},
                     {"domain", to_string(d)},
                     {"train", splits[0]},
                     {"test", splits[1]},
                     {"val", splits[2]}})
                   .dump(2)
            << '\n';
  return 0;
}

int run_dataset_ingest(const Common& c, const std::string& in) {
  const json cfg = read_json(c.config);
  const Manifest m = ingest_real(in, out_dir(c), c.seed, stroke_params(cfg));
  for (const auto& e : m.errors) std::cerr << "skipped: " << e << '\n';
  std::cout << json({{"ingested", m.rows.size()}, {"errors", m.errors.size()}}).dump(2) << '\n';
  return m.rows.empty() ? 1 : 0;
}

int run_annotate(const Common& c, const std::string& image, const std::string& mask) {
  const json cfg = read_json(c.config);
  const fs::path dir = out_dir(c);
  const RasterImage img = to_rgb(load_png(image));
  const MaskImage m = load_mask_png(mask);
  const FieldParams fp = field_params(cfg);
  const OrientationField field = orientation_field(img, fp);
  const RasterImage colors = color_field(img, field, fp);
  const StrokeSet strokes = strokes_from_fields(field, colors, m, stroke_params(cfg), c.seed);
  save_strokes(strokes, dir / "strokes.json");
  save_field(field, dir / "field.bin");
  save_png(field_false_color(field), dir / "field.png");
  save_png(colors, dir / "colors.png");
  save_png(rasterize_strokes(strokes, m), dir / "strokes.png");
  std::cout << json({{"strokes", strokes.size()}, {"mask_pixels", m.count()}}).dump(2) << '\n';
  return 0;
}

struct TrainArgs {
  std::string data, heldout, checkpoint;
  bool refine = false;
};

int run_train_stage1(const Common& c, const TrainArgs& a) {
  const TrainConfig cfg = train_config(c);
  PipelineState st = load_or_fresh(a.checkpoint, cfg, !c.config.empty());
  const auto train = load_examples(a.data, Split::train, st.cfg, Conditioning::strokes);
  const auto held = heldout_examples(a.data, a.heldout, st.cfg, Conditioning::strokes);
  const Phase phase = a.refine ? Phase::refine_real : Phase::pretrain_synthetic;
  const TrainLog log = train_stage1(st, st.main, train, held, phase, run_options());
  write_ledger(out_dir(c), a.refine ? "train stage1 --refine" : "train stage1", st.cfg, log, st);
  return 0;
}

int run_train_e2e(const Common& c, const TrainArgs& a) {
  if (a.checkpoint.empty()) throw error(errc::phase_violation, "train e2e needs --checkpoint from train stage1");
  const TrainConfig cfg = train_config(c);
  PipelineState st = load_or_fresh(a.checkpoint, cfg, !c.config.empty());
  const auto train = load_examples(a.data, Split::train, st.cfg, Conditioning::strokes);
  const auto held = heldout_examples(a.data, a.heldout, st.cfg, Conditioning::strokes);
  const double probe = st.single_stage() ? 0.0 : stage1_grad_from_stage2(st, st.main, train);
  const TrainLog log = train_end_to_end(st, st.main, train, held, run_options());
  write_ledger(out_dir(c), "train e2e", st.cfg, log, st, {{"stage1_grad_from_stage2", probe}});
  return 0;
}

// The stroke-free initializer: pretrain on --data, then end-to-end on --real
// when given.
int run_train_init(const Common& c, const TrainArgs& a, const std::string& real) {
  const TrainConfig cfg = train_config(c);
  PipelineState st = load_or_fresh(a.checkpoint, cfg, !c.config.empty());
  const auto train = load_examples(a.data, Split::train, st.cfg, Conditioning::mean_color);
  const auto held = heldout_examples(a.data, a.heldout, st.cfg, Conditioning::mean_color);
  TrainLog log = train_stage1(st, st.init, train, held, Phase::pretrain_synthetic, run_options());
  if (!real.empty()) {
    const auto rtrain = load_examples(real, Split::train, st.cfg, Conditioning::mean_color);
    const auto rheld = heldout_examples(real, "", st.cfg, Conditioning::mean_color);
    log.append(train_end_to_end(st, st.init, rtrain, rheld, run_options()));
  }
  write_ledger(out_dir(c), "train init", st.cfg, log, st);
  return 0;
}

int run_eval(const Common& c, const std::string& checkpoint, const std::string& data, const std::string& split) {
  PipelineState st = load_checkpoint(checkpoint);
  std::optional<Split> sp;
  if (split != "all") sp = split_from_string(split);
  const auto ex = load_examples(data, sp, st.cfg, Conditioning::strokes);
  if (ex.empty()) throw error(errc::invalid_argument, "no samples in split " + split);
  metrics::MetricReport rep;
  rep.seed = st.cfg.seed;
  rep.note = std::to_string(ex.size()) + " samples, split " + split + ", checkpoint " + hex(st.digest());
  rep.rows.push_back(metrics::evaluate(st, st.main, ex, "model"));
  const fs::path dir = out_dir(c);
  metrics::write_csv(rep, dir / "metrics.csv");
  write_json(metrics::to_json(rep.rows.front()), dir / "metrics.json");
  const std::string table = metrics::format_table(rep);
  std::ofstream(dir / "metrics.txt") << table;
  std::cout << table;
  return 0;
}

int run_ablate(const Common& c, const std::string& syn, const std::string& real, const std::string& heldout) {
  const TrainConfig cfg = train_config(c);
  AblationData data;
  data.synthetic = load_examples(syn, Split::train, cfg, Conditioning::strokes);
  data.real = load_examples(real, Split::train, cfg, Conditioning::strokes);
  data.heldout = heldout_examples(real, heldout, cfg, Conditioning::strokes);
  const AblationResult res = run_ablation(cfg, data, run_options());
  const fs::path dir = out_dir(c);
  write_json(to_json(cfg), dir / "config.json");
  metrics::write_csv(res.report, dir / "ablation.csv");
  json rows = json::array();
  for (const auto& r : res.report.rows) rows.push_back(metrics::to_json(r));
  write_json({{"seed", cfg.seed}, {"note", res.report.note}, {"rows", rows}, {"untrained", metrics::to_json(res.untrained)}},
             dir / "ablation.json");
  for (const auto& [name, log] : res.logs) {
    std::string file = name;
    for (char& ch : file)
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    write_loss_csv(log, dir / ("loss_" + file + ".csv"));
  }
  const std::string table = metrics::format_table(res.report);
  std::ofstream(dir / "ablation.txt") << table;
  std::cout << table;
  const bool floor = beats_on_every_metric(row_named(res.report, "Ours"), res.untrained);
  std::cout << "Ours beats the untrained floor on every metric: " << (floor ? "yes" : "no") << '\n';
  return 0;
}

struct SynthArgs {
  std::string checkpoint, image, mask, strokes;
  std::vector<float> init_color;
  bool init = false;
};

int run_synth(const Common& c, const SynthArgs& a) {
  const json cfg = read_json(c.config);
  const PipelineState st = load_checkpoint(a.checkpoint);
  const RasterImage img = to_rgb(load_png(a.image));
  const MaskImage mask = load_mask_png(a.mask);
  const fs::path dir = out_dir(c);
  StageTiming timing;
  RasterImage out;
  json info;
  if (a.init) {
    std::array<float, 3> color = mean_color(img, mask);
    if (!a.init_color.empty()) {
      if (a.init_color.size() != 3) throw error(errc::invalid_argument, "--color takes three values in [0,1]");
      color = {a.init_color[0], a.init_color[1], a.init_color[2]};
    }
    out = synthesize_init(st, img, mask, color, &timing);
    // The initializer's strokes, ready for editing.
    const FieldParams fp = field_params(cfg);
    const OrientationField field = orientation_field(out, fp);
    const StrokeSet strokes = strokes_from_fields(field, color_field(out, field, fp), mask, stroke_params(cfg), c.seed);
    save_strokes(strokes, dir / "init_strokes.json");
    info["init_color"] = color;
    info["strokes"] = strokes.size();
  } else {
    const StrokeSet strokes = a.strokes.empty() ? extract_guide_strokes(img, mask, stroke_params(cfg), c.seed, field_params(cfg))
                                                : load_strokes(a.strokes);
    out = synthesize(st, img, mask, strokes, &timing);
    info["strokes"] = strokes.size();
  }
  save_png(out, dir / "result.png");
  info["timing_ms"] = {{"stage1", timing.stage1_ms}, {"stage2", timing.stage2_ms}, {"total", timing.total_ms()}};
  info["checkpoint_digest"] = hex(st.digest());
  write_json(info, dir / "synth.json");
  std::cout << info.dump(2) << '\n';
  return 0;
}

httplib::Server* g_server = nullptr;

int run_serve(const Common& c, const std::string& checkpoint, const std::string& host, int port) {
  const json cfg = read_json(c.config);
  serve::ServiceOptions opts;
  opts.strokes = stroke_params(cfg);
  opts.fields = field_params(cfg);
  opts.seed = c.seed;
  serve::SessionManager mgr(opts);
  if (!checkpoint.empty()) mgr.set_checkpoint(std::make_shared<const PipelineState>(load_checkpoint(checkpoint)));
  httplib::Server srv;
  serve::install_routes(srv, mgr);
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw error(errc::io, "cannot bind " + host + ":" + std::to_string(port));
  const json info = {{"host", host},
                     {"port", bound},
                     {"checkpoint", checkpoint},
                     {"checkpoint_digest", hex(mgr.checkpoint_digest())}};
  if (!c.out.empty()) write_json(info, out_dir(c) / "serve.json");
  std::cout << info.dump() << std::endl;
  g_server = &srv;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  srv.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hairsynth: stroke-guided hair synthesis"};
  app.require_subcommand(1);

  Common common;
  std::size_t count = 0;
  int size = 0;
  std::string domain, in_dir, image, mask, data, split = "test", real, heldout, host = "127.0.0.1";
  int port = 8080;
  TrainArgs targs;
  SynthArgs sargs;

  auto* dataset = app.add_subcommand("dataset", "generate or ingest datasets");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "render a procedural dataset");
  add_common(gen, common);
  gen->add_option("--count", count, "number of samples");
  gen->add_option("--size", size, "image side in pixels");
  gen->add_option("--domain", domain, "synthetic | shifted");
  auto* ingest = dataset->add_subcommand("ingest", "ingest <name>.png + <name>_mask.png pairs");
  add_common(ingest, common);
  ingest->add_option("--in", in_dir, "input directory")->required()->check(CLI::ExistingDirectory);

  auto* annotate = app.add_subcommand("annotate", "extract fields and guide strokes from an image");
  add_common(annotate, common);
  annotate->add_option("--image", image)->required()->check(CLI::ExistingFile);
  annotate->add_option("--mask", mask)->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "training phases");
  train->require_subcommand(1);
  auto* stage1 = train->add_subcommand("stage1", "pretrain (or --refine) the stroke-conditioned pipeline");
  auto* e2e = train->add_subcommand("e2e", "train both stages end to end");
  auto* init = train->add_subcommand("init", "train the stroke-free initializer");
  for (auto* sub : {stage1, e2e, init}) {
    add_common(sub, common);
    sub->add_option("--data", targs.data, "dataset directory (manifest.jsonl)")->required();
    sub->add_option("--heldout", targs.heldout, "held-out dataset directory");
    sub->add_option("--checkpoint", targs.checkpoint, "checkpoint to continue from")->check(CLI::ExistingFile);
  }
  stage1->add_flag("--refine", targs.refine, "refine stage 1 on real data after pretraining");
  init->add_option("--real", real, "dataset for the end-to-end phase");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  add_common(eval, common);
  eval->add_option("--checkpoint", targs.checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data)->required();
  eval->add_option("--split", split, "train | test | val | all");

  auto* ablate = app.add_subcommand("ablate", "train and score every ablation variant");
  add_common(ablate, common);
  ablate->add_option("--synthetic", data, "synthetic dataset directory")->required();
  ablate->add_option("--real", real, "real (or shifted-domain) dataset directory")->required();
  ablate->add_option("--heldout", heldout, "held-out dataset directory");

  auto* synth = app.add_subcommand("synth", "synthesize hair for one image");
  add_common(synth, common);
  synth->add_option("--checkpoint", sargs.checkpoint)->required()->check(CLI::ExistingFile);
  synth->add_option("--image", sargs.image)->required()->check(CLI::ExistingFile);
  synth->add_option("--mask", sargs.mask)->required()->check(CLI::ExistingFile);
  synth->add_option("--strokes", sargs.strokes, "stroke file; extracted from the image when absent")
      ->check(CLI::ExistingFile);
  synth->add_flag("--init", sargs.init, "use the stroke-free initializer");
  synth->add_option("--color", sargs.init_color, "initializer color, three values in [0,1]")->expected(3);

  auto* srv = app.add_subcommand("serve", "run the session service");
  add_common(srv, common, false);
  srv->add_option("--checkpoint", targs.checkpoint)->check(CLI::ExistingFile);
  srv->add_option("--host", host);
  srv->add_option("--port", port, "0 picks a free port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_dataset_gen(common, count, size, domain);
    if (ingest->parsed()) return run_dataset_ingest(common, in_dir);
    if (annotate->parsed()) return run_annotate(common, image, mask);
    if (stage1->parsed()) return run_train_stage1(common, targs);
    if (e2e->parsed()) return run_train_e2e(common, targs);
    if (init->parsed()) return run_train_init(common, targs, real);
    if (eval->parsed()) return run_eval(common, targs.checkpoint, data, split);
    if (ablate->parsed()) return run_ablate(common, data, real, heldout);
    if (synth->parsed()) return run_synth(common, sargs);
    if (srv->parsed()) return run_serve(common, targs.checkpoint, host, port);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
