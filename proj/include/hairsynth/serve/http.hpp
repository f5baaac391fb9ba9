#pragma once

#include <cstdio>

#include "hairsynth/serve/codec.hpp"
#include "hairsynth/serve/session.hpp"
#include "hairsynth/strokes/stroke_io.hpp"
#include "httplib.h"

namespace hairsynth::serve {

inline int http_status(errc code) {
  switch (code) {
    case errc::unknown_session: return 404;
    case errc::untrained: return 409;
    case errc::empty_mask: return 422;
    case errc::invalid_argument:
    case errc::extent_mismatch:
    case errc::decode:
    case errc::degenerate_stroke:
    case errc::degenerate_kernel: return 400;
    default: return 500;
  }
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

inline void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const error& e) {
    reply(res, http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    reply(res, 400, {{"error", "invalid_argument"}, {"message", e.what()}});
  }
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::decode, std::string("request body is not JSON: ") + e.what());
  }
}

inline nlohmann::json edit_json(const std::string& id, const EditResult& r) {
  return {{"id", id}, {"revision", r.revision}, {"strokes", r.strokes}, {"mask_pixels", r.mask_pixels}};
}

}  // namespace detail

// Registers the service routes on `srv`; `mgr` must outlive the server.
inline void install_routes(httplib::Server& srv, SessionManager& mgr) {
  srv.Get("/healthz", [&](const httplib::Request&, httplib::Response& res) {
    const auto ck = mgr.checkpoint();
    nlohmann::json j = {{"status", "ok"}, {"sessions", mgr.size()}, {"checkpoint", ck != nullptr}};
    if (ck) {
      j["checkpoint_digest"] = hex64(mgr.checkpoint_digest());
      j["phase"] = pipeline::to_string(ck->main.phase);
      j["init_phase"] = pipeline::to_string(ck->init.phase);
    }
    detail::reply(res, 200, j);
  });

  srv.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const auto body = detail::parse_body(req);
      const RasterImage image = image_from_base64(body.at("image").get<std::string>());
      std::optional<MaskImage> mask;
      if (body.contains("mask")) mask = image_to_mask(image_from_base64(body["mask"].get<std::string>()));
      const std::string id = mgr.create(image, mask);
      const auto [st, rev] = mgr.get(id)->snapshot();
      detail::reply(res, 201,
                    {{"id", id},
                     {"revision", rev},
                     {"width", st.image.width()},
                     {"height", st.image.height()},
                     {"strokes", st.strokes.size()},
                     {"mask_pixels", st.mask.count()}});
    });
  });

  srv.Post(R"(/sessions/([^/]+)/edits)", [&](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto body = detail::parse_body(req);
      detail::reply(res, 200, detail::edit_json(id, mgr.edit(id, body)));
    });
  });

  srv.Get(R"(/sessions/([^/]+)/preview)", [&](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const std::string id = req.matches[1];
      const Preview p = mgr.preview(id);
      detail::reply(res, 200,
                    {{"id", id},
                     {"revision", p.revision},
                     {"cached", p.cached},
                     {"checkpoint_digest", hex64(mgr.checkpoint_digest())},
                     {"timing_ms",
                      {{"stage1", p.timing.stage1_ms}, {"stage2", p.timing.stage2_ms}, {"total", p.timing.total_ms()}}},
                     {"width", p.image.width()},
                     {"height", p.image.height()},
                     {"image", png_base64(p.image)}});
    });
  });

  srv.Get(R"(/sessions/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto session = mgr.get(id);
      const auto [st, rev] = session->snapshot();
      detail::reply(res, 200,
                    {{"id", id},
                     {"revision", rev},
                     {"undo_depth", session->undo_depth()},
                     {"width", st.image.width()},
                     {"height", st.image.height()},
                     {"mask", png_base64(mask_to_image(st.mask))},
                     {"strokes", to_json(st.strokes)}});
    });
  });
}

}  // namespace hairsynth::serve
