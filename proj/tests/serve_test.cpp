#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "hairsynth/pipeline/train.hpp"
#include "hairsynth/serve/http.hpp"
#include "hairsynth/synthdata/dataset.hpp"

namespace {

using namespace hairsynth;
using nlohmann::json;

pipeline::TrainConfig tiny_config() {
  pipeline::TrainConfig c;
  c.image_size = 16;
  c.base_width = 4;
  c.depth = 3;
  c.batch = 2;
  c.stage1.epochs = 1;
  c.e2e.epochs = 1;
  c.loss.morph_k = 2;
  c.seed = 5;
  return c;
}

std::shared_ptr<const pipeline::PipelineState> tiny_checkpoint() {
  static const auto st = [] {
    auto s = std::make_shared<pipeline::PipelineState>(tiny_config());
    const auto samples = make_samples(6, 32, 21, Domain::synthetic);
    const auto ex = pipeline::make_examples(samples, 16, pipeline::Conditioning::strokes, 2);
    const auto ex_init = pipeline::make_examples(samples, 16, pipeline::Conditioning::mean_color, 2);
    pipeline::train_stage1(*s, s->main, ex, ex);
    pipeline::train_end_to_end(*s, s->main, ex, ex);
    pipeline::train_stage1(*s, s->init, ex_init, ex_init);
    return std::shared_ptr<const pipeline::PipelineState>(std::move(s));
  }();
  return st;
}

// A large central disk, so the initial session carries a few strokes.
MaskImage disk_mask(int size) {
  MaskImage m(size, size);
  const double c = (size - 1) / 2.0, r = size * 0.35;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) m.set(x, y, (x - c) * (x - c) + (y - c) * (y - c) <= r * r);
  return m;
}

class Server : public ::testing::Test {
 protected:
  void SetUp() override {
    mgr.set_checkpoint(tiny_checkpoint());
    serve::install_routes(srv, mgr);
    port = srv.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { srv.listen_after_bind(); });
    srv.wait_until_ready();
  }
  void TearDown() override {
    srv.stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }

  json post(const std::string& path, const json& body, int expect = 200) {
    auto res = client().Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

  json get(const std::string& path, int expect = 200) {
    auto res = client().Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }

  std::string create(int size = 64, bool with_mask = true) {
    json body = {{"image", serve::png_base64(make_sample(grid_params(3), size).image)}};
    if (with_mask) body["mask"] = serve::png_base64(mask_to_image(disk_mask(size)));
    const json r = post("/sessions", body, 201);
    return r.at("id").get<std::string>();
  }

  json state(const std::string& id) { return get("/sessions/" + id); }

  serve::SessionManager mgr;
  httplib::Server srv;
  std::thread thread;
  int port = 0;
};

TEST(Codec, Base64RoundTrip) {
  const std::vector<unsigned char> bytes{0, 1, 2, 250, 255, 17, 99};
  const auto text = serve::base64_encode(bytes);
  EXPECT_EQ(text, "AAEC+v8RYw==");
  EXPECT_EQ(serve::base64_decode(text), bytes);
  EXPECT_THROW(serve::base64_decode("not base64!"), error);
}

TEST(Codec, PngRoundTripIsExactOnEightBitValues) {
  RasterImage img(5, 3, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>(i % 256) / 255.f;
  const RasterImage back = serve::image_from_base64(serve::png_base64(img));
  EXPECT_TRUE(std::ranges::equal(back.data(), img.data()));
}

TEST_F(Server, HealthReportsCheckpoint) {
  const json h = get("/healthz");
  EXPECT_EQ(h["status"], "ok");
  EXPECT_TRUE(h["checkpoint"].get<bool>());
  EXPECT_EQ(h["phase"], "end-to-end");
  EXPECT_EQ(h["checkpoint_digest"].get<std::string>().size(), 16u);
}

TEST_F(Server, SessionsGetDistinctIdsAndStartAtRevisionZero) {
  const std::string a = create(), b = create();
  EXPECT_NE(a, b);
  EXPECT_EQ(state(a)["revision"], 0);
  EXPECT_GT(state(a)["strokes"]["strokes"].size(), 0u);
  EXPECT_EQ(get("/healthz")["sessions"], 2);
}

TEST_F(Server, UnknownSessionIs404) {
  EXPECT_EQ(get("/sessions/nope/preview", 404)["error"], "unknown_session");
  EXPECT_EQ(post("/sessions/nope/edits", {{"op", "undo"}}, 404)["error"], "unknown_session");
}

TEST_F(Server, MalformedRequestsAre400) {
  auto res = client().Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  post("/sessions", {{"image", "@@@@"}}, 400);
  const std::string id = create();
  post("/sessions/" + id + "/edits", {{"op", "teleport"}}, 400);
  post("/sessions/" + id + "/edits", {{"op", "mask-brush"}, {"points", {{1000, 1000}}}, {"radius", 3}}, 400);
  post("/sessions/" + id + "/edits", {{"op", "mask-brush"}, {"points", {{5, 5}}}, {"radius", -1}}, 400);
  post("/sessions/" + id + "/edits", {{"op", "stroke-add"}, {"points", {{4, 4}}}, {"color", {1, 0, 0}}}, 400);
  EXPECT_EQ(state(id)["revision"], 0);
}

TEST_F(Server, StrokeDeleteAndUndoRestoreStateExactly) {
  const std::string id = create();
  const json before = state(id);
  const std::size_t n = before["strokes"]["strokes"].size();
  const json r = post("/sessions/" + id + "/edits", {{"op", "stroke-delete"}});
  EXPECT_EQ(r["revision"], 1);
  EXPECT_EQ(r["strokes"], n - 1);
  const json u = post("/sessions/" + id + "/edits", {{"op", "undo"}});
  EXPECT_EQ(u["revision"], 2);
  const json after = state(id);
  EXPECT_EQ(after["strokes"], before["strokes"]);
  EXPECT_EQ(after["mask"], before["mask"]);
  // The full state compares equal, not only what the API exposes.
  const auto [st, rev] = mgr.get(id)->snapshot();
  (void)rev;
  EXPECT_EQ(st.strokes.size(), n);
  EXPECT_TRUE(st.mask == disk_mask(64));
}

TEST_F(Server, UndoReachesBackThirtyTwoEdits) {
  const std::string id = create(64, false);
  const auto [initial, r0] = mgr.get(id)->snapshot();
  (void)r0;
  for (int i = 0; i < 40; ++i) {
    const double x = 2 + (i % 28), y = 2 + (i / 28) * 10;
    post("/sessions/" + id + "/edits", {{"op", "mask-brush"}, {"points", {{x, y}}}, {"radius", 2}});
  }
  EXPECT_GE(state(id)["undo_depth"].get<int>(), 32);
  for (int i = 0; i < 40; ++i) post("/sessions/" + id + "/edits", {{"op", "undo"}});
  const auto [final_state, r1] = mgr.get(id)->snapshot();
  EXPECT_EQ(r1, 80u);
  EXPECT_TRUE(final_state == initial);
  post("/sessions/" + id + "/edits", {{"op", "undo"}}, 400);
}

TEST_F(Server, BrushesRepopulateDeterministically) {
  const std::string a = create(), b = create();
  const json fb = {{"op", "field-brush"}, {"center", {32, 32}}, {"radius", 10}, {"angle", 0.7}};
  const json cb = {{"op", "color-brush"}, {"center", {26, 30}}, {"radius", 8}, {"color", {0.9, 0.2, 0.1}}};
  for (const auto& id : {a, b}) {
    post("/sessions/" + id + "/edits", fb);
    post("/sessions/" + id + "/edits", cb);
  }
  // Same edits on the same image: only the session id differs.
  const auto sa = mgr.get(a)->snapshot().first, sb = mgr.get(b)->snapshot().first;
  EXPECT_TRUE(sa.field == sb.field);
  EXPECT_TRUE(sa.colors == sb.colors);
  EXPECT_GT(sa.strokes.size(), 0u);
}

TEST_F(Server, PreviewIsCachedPerRevision) {
  const std::string id = create();
  const json p1 = get("/sessions/" + id + "/preview");
  EXPECT_FALSE(p1["cached"].get<bool>());
  EXPECT_GT(p1["timing_ms"]["total"].get<double>(), 0.0);
  EXPECT_GT(p1["timing_ms"]["stage1"].get<double>(), 0.0);
  EXPECT_GT(p1["timing_ms"]["stage2"].get<double>(), 0.0);
  const json p2 = get("/sessions/" + id + "/preview");
  EXPECT_TRUE(p2["cached"].get<bool>());
  EXPECT_EQ(p2["image"], p1["image"]);
  post("/sessions/" + id + "/edits", {{"op", "stroke-delete"}, {"index", 0}});
  const json p3 = get("/sessions/" + id + "/preview");
  EXPECT_FALSE(p3["cached"].get<bool>());
  EXPECT_EQ(p3["revision"], 1);
  const RasterImage img = serve::image_from_base64(p3["image"].get<std::string>());
  EXPECT_EQ(img.width(), 64);
  EXPECT_EQ(img.height(), 64);
}

TEST_F(Server, PreviewWithEmptyMaskIs422) {
  const std::string id = create(64, false);
  EXPECT_EQ(get("/sessions/" + id + "/preview", 422)["error"], "empty_mask");
}

TEST_F(Server, PreviewWithoutCheckpointIs409) {
  const std::string id = create();
  mgr.set_checkpoint(nullptr);
  EXPECT_EQ(get("/sessions/" + id + "/preview", 409)["error"], "untrained");
  EXPECT_FALSE(get("/healthz")["checkpoint"].get<bool>());
}

TEST_F(Server, InitFillRebuildsStrokesFromTheInitializer) {
  const std::string id = create();
  const json r = post("/sessions/" + id + "/edits", {{"op", "init-fill"}, {"color", {0.4, 0.25, 0.1}}});
  EXPECT_EQ(r["revision"], 1);
  EXPECT_GT(r["strokes"].get<int>(), 0);
  const std::string empty = create(64, false);
  post("/sessions/" + empty + "/edits", {{"op", "init-fill"}}, 422);
}

TEST_F(Server, PreviewAt128IsInteractive) {
  const std::string id = create(128);
  const auto t0 = std::chrono::steady_clock::now();
  const json p = get("/sessions/" + id + "/preview");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(p["width"], 128);
  EXPECT_LE(secs, 2.0);
}

TEST_F(Server, ConcurrentEditsGetStrictlyIncreasingRevisions) {
  const std::string id = create();
  constexpr int kThreads = 4, kEach = 10;
  std::vector<std::vector<long>> seen(kThreads);
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      auto c = client();
      for (int i = 0; i < kEach; ++i) {
        const json body = {{"op", "mask-brush"}, {"points", {{4 + 6 * t, 4 + 2 * i}}}, {"radius", 1.5}};
        auto res = c.Post("/sessions/" + id + "/edits", body.dump(), "application/json");
        if (res && res->status == 200) seen[t].push_back(json::parse(res->body)["revision"].get<long>());
      }
    });
  }
  for (auto& th : pool) th.join();
  std::vector<long> all;
  for (const auto& v : seen) {
    ASSERT_EQ(v.size(), static_cast<std::size_t>(kEach));
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i - 1], v[i]);
    all.insert(all.end(), v.begin(), v.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], static_cast<long>(i + 1));
  EXPECT_EQ(state(id)["revision"], kThreads * kEach);
}

}  // namespace
