#pragma once

#include <atomic>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "hairsynth/pipeline/synthesize.hpp"
#include "hairsynth/strokes/extract.hpp"
#include "json.hpp"

namespace hairsynth::serve {

inline constexpr std::size_t kUndoDepth = 64;

// Everything an edit can change. Undo swaps whole snapshots.
struct SessionState {
  RasterImage image;
  MaskImage mask;
  OrientationField field;
  RasterImage colors;
  StrokeSet strokes;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct Preview {
  RasterImage image;
  pipeline::StageTiming timing;
  std::uint64_t revision = 0;
  bool cached = false;
};

struct EditResult {
  std::uint64_t revision = 0;
  std::size_t strokes = 0;
  std::size_t mask_pixels = 0;
};

struct ServiceOptions {
  StrokeParams strokes;
  FieldParams fields;
  std::uint64_t seed = 1;
};

class Session {
 public:
  Session(std::string id, SessionState s) : id_(std::move(id)), state_(std::move(s)) {}

  const std::string& id() const { return id_; }

  std::pair<SessionState, std::uint64_t> snapshot() const {
    std::lock_guard lock(mu_);
    return {state_, revision_};
  }

  // Applies `f(state, next_revision)` to a copy of the state under the
  // session lock. The revision bumps only when `f` returns normally.
  template <class F>
  EditResult mutate(F&& f) {
    std::lock_guard lock(mu_);
    SessionState next = state_;
    f(next, revision_ + 1);
    undo_.push_back(std::move(state_));
    if (undo_.size() > kUndoDepth) undo_.pop_front();
    state_ = std::move(next);
    return bump();
  }

  // Restores the previous snapshot as a new revision.
  EditResult undo() {
    std::lock_guard lock(mu_);
    if (undo_.empty()) throw error(errc::invalid_argument, "nothing to undo");
    state_ = std::move(undo_.back());
    undo_.pop_back();
    return bump();
  }

  std::size_t undo_depth() const {
    std::lock_guard lock(mu_);
    return undo_.size();
  }

  std::optional<Preview> cached(std::uint64_t revision, std::uint64_t digest) const {
    std::lock_guard lock(mu_);
    if (preview_ && preview_->revision == revision && preview_digest_ == digest) return preview_;
    return std::nullopt;
  }

  void store(const Preview& p, std::uint64_t digest) {
    std::lock_guard lock(mu_);
    if (p.revision == revision_) {
      preview_ = p;
      preview_digest_ = digest;
    }
  }

 private:
  EditResult bump() {
    ++revision_;
    preview_.reset();
    return {revision_, state_.strokes.size(), state_.mask.count()};
  }

  std::string id_;
  mutable std::mutex mu_;
  SessionState state_;
  std::uint64_t revision_ = 0;
  std::deque<SessionState> undo_;
  std::optional<Preview> preview_;
  std::uint64_t preview_digest_ = 0;
};

namespace detail {

inline Vec2 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw error(errc::invalid_argument, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void require_inside(Vec2 p, int w, int h) {
  if (!(p.x >= 0 && p.y >= 0 && p.x <= w - 1 && p.y <= h - 1)) {
    throw error(errc::invalid_argument, "point outside the image");
  }
}

inline std::array<float, 4> rgba_from_json(const nlohmann::json& j) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 4)) throw error(errc::invalid_argument, "color must be RGB or RGBA");
  std::array<float, 4> c{0, 0, 0, 1};
  for (std::size_t i = 0; i < j.size(); ++i) {
    c[i] = j[i].get<float>();
    if (!(c[i] >= 0 && c[i] <= 1)) throw error(errc::invalid_argument, "color components must be in [0,1]");
  }
  return c;
}

inline double positive(const nlohmann::json& j, const char* key, double fallback) {
  const double v = j.value(key, fallback);
  if (!(v > 0)) throw error(errc::invalid_argument, std::string(key) + " must be positive");
  return v;
}

// Disk stamps along a polyline, one per pixel of travel.
inline void paint_disks(MaskImage& m, const std::vector<Vec2>& path, double r, bool value) {
  auto stamp = [&](Vec2 c) {
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
    const int x1 = std::min(m.width() - 1, static_cast<int>(std::ceil(c.x + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
    const int y1 = std::min(m.height() - 1, static_cast<int>(std::ceil(c.y + r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (std::hypot(x - c.x, y - c.y) <= r) m.set(x, y, value);
  };
  for (std::size_t i = 0; i < path.size(); ++i) {
    stamp(path[i]);
    if (i + 1 == path.size()) break;
    const Vec2 a = path[i], b = path[i + 1];
    const int n = static_cast<int>(std::ceil((b - a).norm()));
    for (int k = 1; k < n; ++k) stamp(a + (b - a) * (static_cast<double>(k) / n));
  }
}

}  // namespace detail

class SessionManager {
 public:
  explicit SessionManager(ServiceOptions opts = {}) : opts_(opts) {}

  void set_checkpoint(std::shared_ptr<const pipeline::PipelineState> st) {
    std::unique_lock lock(ckpt_mu_);
    ckpt_ = std::move(st);
    digest_ = ckpt_ ? ckpt_->digest() : 0;
  }

  std::shared_ptr<const pipeline::PipelineState> checkpoint() const {
    std::shared_lock lock(ckpt_mu_);
    return ckpt_;
  }

  std::uint64_t checkpoint_digest() const {
    std::shared_lock lock(ckpt_mu_);
    return digest_;
  }

  // Fields are initialized from the image; the mask starts empty unless given.
  std::string create(const RasterImage& image, std::optional<MaskImage> mask = std::nullopt) {
    if (image.empty()) throw error(errc::invalid_argument, "empty image");
    SessionState s;
    s.image = to_rgb(image);
    s.mask = mask ? *mask : MaskImage(image.width(), image.height());
    if (!s.mask.same_extent(s.image)) throw error(errc::extent_mismatch, "mask extent differs from image");
    s.field = orientation_field(s.image, opts_.fields);
    s.colors = color_field(s.image, s.field, opts_.fields);
    s.strokes = StrokeSet{image.width(), image.height(), {}};
    if (!s.mask.none()) s.strokes = strokes_from_fields(s.field, s.colors, s.mask, opts_.strokes, opts_.seed);
    const std::string id = "s" + std::to_string(++next_id_);
    std::unique_lock lock(map_mu_);
    sessions_.emplace(id, std::make_shared<Session>(id, std::move(s)));
    return id;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::shared_lock lock(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw error(errc::unknown_session, "unknown session " + id);
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(map_mu_);
    return sessions_.size();
  }

  EditResult edit(const std::string& id, const nlohmann::json& op) {
    const auto session = get(id);
    if (!op.is_object() || !op.contains("op")) throw error(errc::invalid_argument, "edit needs an \"op\" field");
    try {
      const std::string kind = op["op"].get<std::string>();
      if (kind == "undo") return session->undo();
      return apply(*session, kind, op);
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::invalid_argument, std::string("bad payload: ") + e.what());
    }
  }

  Preview preview(const std::string& id) const {
    const auto session = get(id);
    const auto ckpt = checkpoint();
    if (!ckpt) throw error(errc::untrained, "no checkpoint loaded");
    const std::uint64_t digest = checkpoint_digest();
    auto [state, revision] = session->snapshot();
    if (auto hit = session->cached(revision, digest)) {
      hit->cached = true;
      return *hit;
    }
    Preview p;
    p.revision = revision;
    p.image = pipeline::synthesize(*ckpt, state.image, state.mask, state.strokes, &p.timing);
    session->store(p, digest);
    return p;
  }

 private:
  EditResult apply(Session& s, const std::string& kind, const nlohmann::json& op) {
    // Repopulation seeds depend only on the session and its revision.
    auto seed_for = [&](std::uint64_t rev) { return mix_seed(opts_.seed ^ fnv1a64(s.id().data(), s.id().size()), rev); };
    if (kind == "mask-brush") {
      const double r = detail::positive(op, "radius", 4.0);
      const bool erase = op.value("erase", false);
      std::vector<Vec2> path;
      for (const auto& p : op.at("points")) path.push_back(detail::point_from_json(p));
      if (path.empty()) throw error(errc::invalid_argument, "mask-brush needs points");
      return s.mutate([&](SessionState& st, std::uint64_t) {
        for (Vec2 p : path) detail::require_inside(p, st.image.width(), st.image.height());
        detail::paint_disks(st.mask, path, r, !erase);
      });
    }
    if (kind == "stroke-add") {
      GuideStroke g;
      for (const auto& p : op.at("points")) g.points.push_back(detail::point_from_json(p));
      g.color = detail::rgba_from_json(op.at("color"));
      g.width = static_cast<float>(detail::positive(op, "width", 2.0));
      return s.mutate([&](SessionState& st, std::uint64_t) {
        validate_stroke(g, st.image.width(), st.image.height());
        st.strokes.strokes.push_back(g);
      });
    }
    if (kind == "stroke-delete") {
      return s.mutate([&](SessionState& st, std::uint64_t) {
        if (st.strokes.empty()) throw error(errc::invalid_argument, "no strokes to delete");
        const long idx = op.value("index", static_cast<long>(st.strokes.size()) - 1);
        if (idx < 0 || idx >= static_cast<long>(st.strokes.size())) throw error(errc::invalid_argument, "stroke index");
        st.strokes.strokes.erase(st.strokes.strokes.begin() + idx);
      });
    }
    if (kind == "field-brush" || kind == "color-brush") {
      FieldBrush b;
      b.center = detail::point_from_json(op.at("center"));
      b.radius = detail::positive(op, "radius", 8.0);
      b.intensity = op.value("intensity", 1.0);
      b.falloff = op.value("falloff", std::string("smooth")) == "flat" ? Falloff::flat : Falloff::smooth;
      if (kind == "field-brush") b.angle = op.at("angle").get<double>();
      else b.color = detail::rgba_from_json(op.at("color"));
      b.validate();
      return s.mutate([&](SessionState& st, std::uint64_t rev) {
        detail::require_inside(b.center, st.image.width(), st.image.height());
        if (kind == "field-brush") st.field = brush_field(std::move(st.field), b);
        else st.colors = brush_color(std::move(st.colors), b);
        st.strokes = repopulate_strokes(st.strokes, st.field, st.colors, st.mask, b.center, b.radius, opts_.strokes, seed_for(rev));
      });
    }
    if (kind == "init-fill") {
      const auto ckpt = checkpoint();
      if (!ckpt) throw error(errc::untrained, "no checkpoint loaded");
      return s.mutate([&](SessionState& st, std::uint64_t rev) {
        if (st.mask.none()) throw error(errc::empty_mask, "init-fill needs a mask");
        std::array<float, 3> color{};
        if (op.contains("color")) {
          const auto c = detail::rgba_from_json(op["color"]);
          color = {c[0], c[1], c[2]};
        } else {
          color = pipeline::mean_color(st.image, st.mask);
        }
        const RasterImage init = pipeline::synthesize_init(*ckpt, st.image, st.mask, color);
        st.field = orientation_field(init, opts_.fields);
        st.colors = color_field(init, st.field, opts_.fields);
        st.strokes = strokes_from_fields(st.field, st.colors, st.mask, opts_.strokes, seed_for(rev));
      });
    }
    throw error(errc::invalid_argument, "unknown edit op " + kind);
  }

  ServiceOptions opts_;
  mutable std::shared_mutex map_mu_, ckpt_mu_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::shared_ptr<const pipeline::PipelineState> ckpt_;
  std::uint64_t digest_ = 0;
  std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace hairsynth::serve
