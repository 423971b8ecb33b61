// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP session service. SessionService holds the sessions and implements every endpoint
// as a plain function returning a Reply; mount() wires those onto an httplib::Server.
//
// Environment:
//   INCSPLAT_BIND            host:port to listen on (default 127.0.0.1:8080)
//   INCSPLAT_MAX_SESSIONS    live session cap (default 64)
//   INCSPLAT_MAX_IMAGE_SIZE  max pixels per uploaded image (default 4194304)

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>


#include "incsplat/codecs.hpp"
#include "incsplat/config.hpp"
#include "incsplat/errors.hpp"
#include "incsplat/pipeline.hpp"
#include "incsplat/ply.hpp"
#include "incsplat/session_io.hpp"

// Keep below the Eigen users: <resolv.h> defines _res.
#include <httplib.h>
#include <json.hpp>

namespace incsplat {

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline Bytes base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (const char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw ParseError("base64: length is not a multiple of 4", clean.size());
  Bytes out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw ParseError("base64: invalid character", 0);
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

struct ServiceLimits {
  std::size_t max_sessions = 64;
  std::size_t max_image_pixels = 2048 * 2048;

  static ServiceLimits from_env() {
    ServiceLimits l;
    if (const char* v = std::getenv("INCSPLAT_MAX_SESSIONS")) l.max_sessions = std::stoul(v);
    if (const char* v = std::getenv("INCSPLAT_MAX_IMAGE_SIZE")) l.max_image_pixels = std::stoul(v);
    return l;
  }
  // Encoded payload ceiling derived from the pixel cap: RGB PNG worst case plus float depth.
  std::size_t max_body_bytes() const { return max_image_pixels * 24 + (1u << 20); }
};

inline std::pair<std::string, int> bind_address_from_env() {
  std::string bind = "127.0.0.1:8080";
  if (const char* v = std::getenv("INCSPLAT_BIND")) bind = v;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("INCSPLAT_BIND must be host:port");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  static Reply json(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }
  static Reply error(int status, const std::string& message, const std::string& key = {}, const std::string& value = {}) {
    nlohmann::json j = {{"error", message}};
    if (!key.empty()) j[key] = value;
    return json(status, j);
  }
};

inline constexpr const char* kMultipartBoundary = "incsplat-frame-boundary";

class SessionService {
 public:
  explicit SessionService(ServiceLimits limits = {}) : limits_(limits) {}

  const ServiceLimits& limits() const noexcept { return limits_; }

  // Runs inside a step after the in-flight flag is taken; tests use it to hold a step open.
  void set_step_hook(std::function<void()> hook) { step_hook_ = std::move(hook); }

  Reply create_session(const std::string& body) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      return Reply::error(400, "body is not valid JSON", "field", "body");
    }
    if (!req.is_object()) return Reply::error(400, "body must be a JSON object", "field", "body");
    for (const char* field : {"image", "depth", "pose", "intrinsics"}) {
      if (!req.contains(field)) return Reply::error(400, std::string("missing field: ") + field, "field", field);
    }
    Intrinsics intr;
    Pose pose;
    PipelineConfig config;
    ImageRGB image;
    DepthMap depth;
    try {
      intr = intrinsics_from_json(req["intrinsics"]);
    } catch (const std::exception& e) {
      return Reply::error(400, e.what(), "field", "intrinsics");
    }
    if (static_cast<std::size_t>(intr.width) * intr.height > limits_.max_image_pixels) {
      return Reply::error(413, "image exceeds the size limit", "field", "intrinsics");
    }
    try {
      pose = pose_from_json(req["pose"]);
    } catch (const std::exception& e) {
      return Reply::error(400, e.what(), "field", "pose");
    }
    try {
      config = apply_overrides(PipelineConfig{}, req.value("config", nlohmann::json::object()));
    } catch (const std::exception& e) {
      return Reply::error(400, e.what(), "field", "config");
    }
    if (auto r = decode_field(req, "image", [&](const Bytes& b) { image = decode_png(b); })) return *r;
    if (auto r = decode_field(req, "depth", [&](const Bytes& b) { depth = decode_depth_pfm(b); })) return *r;
    for (const auto& [name, w, h] : {std::tuple{"image", image.width(), image.height()}, std::tuple{"depth", depth.width(), depth.height()}}) {
      if (static_cast<std::size_t>(w) * h > limits_.max_image_pixels) return Reply::error(413, std::string(name) + " exceeds the size limit", "field", name);
      if (w != intr.width || h != intr.height) return Reply::error(400, std::string(name) + " size differs from intrinsics", "field", name);
    }

    std::unique_lock registry(registry_mutex_);
    if (sessions_.size() >= limits_.max_sessions) return Reply::error(429, "session limit reached");
    registry.unlock();
    auto session = std::make_shared<Session>();
    try {
      session->state = init_session(image, depth, pose, intr, config);
    } catch (const SizeError& e) {
      return Reply::error(400, e.what(), "field", "image");
    } catch (const IncompleteDepthError& e) {
      return Reply::error(400, e.what(), "field", "depth");
    } catch (const std::exception& e) {
      return Reply::error(422, e.what(), "stage", "init");
    }
    session->created_at = std::chrono::system_clock::now();
    registry.lock();
    if (sessions_.size() >= limits_.max_sessions) return Reply::error(429, "session limit reached");
    const std::string id = next_id();
    sessions_.emplace(id, session);
    registry.unlock();
    return Reply::json(201, {{"id", id}, {"config", nlohmann::json(session->state.config)}});
  }

  Reply step(const std::string& id, const std::string& body) {
    auto session = find(id);
    if (!session) return Reply::error(404, "unknown session", "id", id);
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      return Reply::error(400, "body is not valid JSON", "field", "body");
    }
    if (!req.is_object() || !req.contains("pose")) return Reply::error(400, "missing field: pose", "field", "pose");
    Pose pose;
    try {
      pose = pose_from_json(req["pose"]);
    } catch (const std::exception& e) {
      return Reply::error(400, e.what(), "field", "pose");
    }
    std::string prompt;
    if (req.contains("prompt")) {
      if (!req["prompt"].is_string()) return Reply::error(400, "prompt must be a string", "field", "prompt");
      prompt = req["prompt"].get<std::string>();
    }

    if (session->in_flight.exchange(true)) return Reply::error(409, "a step is already in flight for this session");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag.store(false); }
    } release{session->in_flight};
    std::unique_lock lock(session->mutex);
    if (step_hook_) step_hook_();
    StepResult result;
    try {
      result = incsplat::step(session->state, pose, prompt);
    } catch (const StageError& e) {
      return Reply::error(422, e.what(), "stage", e.stage());
    } catch (const std::exception& e) {
      return Reply::error(422, e.what(), "stage", "step");
    }
    const std::int64_t k = session->state.step_count - 1;
    session->frames[k] = encode_png(result.render.color);
    const StepTiming& t = result.timing;
    return Reply::json(200, {{"step", k},
                             {"frame_url", "/session/" + id + "/frames/" + std::to_string(k) + ".png"},
                             {"timing", timing_json(t)},
                             {"geometry_s", t.geometry_ms() / 1000.0},
                             {"appearance_s", t.appearance_ms() / 1000.0},
                             {"added", result.added},
                             {"gaussian_count", session->state.global.size()}});
  }

  Reply frame(const std::string& id, std::int64_t k) {
    auto session = find(id);
    if (!session) return Reply::error(404, "unknown session", "id", id);
    std::shared_lock lock(session->mutex);
    const auto it = session->frames.find(k);
    if (it == session->frames.end()) return Reply::error(404, "unknown frame");
    return {200, "image/png", std::string(it->second.begin(), it->second.end())};
  }

  Reply render(const std::string& id, const std::string& pose_text) {
    auto session = find(id);
    if (!session) return Reply::error(404, "unknown session", "id", id);
    Pose pose;
    try {
      pose = pose_from_json(parse_pose_list(pose_text));
    } catch (const std::exception& e) {
      return Reply::error(400, e.what(), "field", "pose");
    }
    std::shared_lock lock(session->mutex);
    const RenderOutput r = render_session(session->state, pose);
    lock.unlock();
    const Bytes png = encode_png(r.color);
    const Bytes pfm = encode_depth_pfm(r.depth);
    std::string body;
    const auto part = [&](const char* type, const char* name, const Bytes& bytes) {
      body += std::string("--") + kMultipartBoundary + "\r\nContent-Type: " + type +
              "\r\nContent-Disposition: attachment; filename=\"" + name + "\"\r\n\r\n";
      body.append(bytes.begin(), bytes.end());
      body += "\r\n";
    };
    part("image/png", "frame.png", png);
    part("application/x-portable-floatmap", "depth.pfm", pfm);
    body += std::string("--") + kMultipartBoundary + "--\r\n";
    return {200, std::string("multipart/mixed; boundary=") + kMultipartBoundary, std::move(body)};
  }

  Reply export_ply(const std::string& id) {
    auto session = find(id);
    if (!session) return Reply::error(404, "unknown session", "id", id);
    std::shared_lock lock(session->mutex);
    const Bytes bytes = encode_ply(session->state.global);
    return {200, "application/octet-stream", std::string(bytes.begin(), bytes.end())};
  }

  Reply metadata(const std::string& id) {
    auto session = find(id);
    if (!session) return Reply::error(404, "unknown session", "id", id);
    std::shared_lock lock(session->mutex);
    nlohmann::json j = session_metadata(session->state);
    j["id"] = id;
    j["config"] = session->state.config;
    j["created_at"] = std::chrono::duration_cast<std::chrono::seconds>(session->created_at.time_since_epoch()).count();
    return Reply::json(200, j);
  }

  std::size_t session_count() const {
    std::lock_guard lock(registry_mutex_);
    return sessions_.size();
  }

  static nlohmann::json timing_json(const StepTiming& t) {
    return {{"render_ms", t.render_ms}, {"inpaint_ms", t.inpaint_ms}, {"depth_ms", t.depth_ms},
            {"stepsplat_ms", t.stepsplat_ms}, {"fuse_ms", t.fuse_ms}, {"total_ms", t.total_ms}};
  }

  static nlohmann::json parse_pose_list(const std::string& text) {
    nlohmann::json arr = nlohmann::json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw ConfigError("pose entry is not a number: " + item);
      arr.push_back(v);
    }
    return arr;
  }

  void mount(httplib::Server& server) {
    const auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.set_payload_max_length(limits_.max_body_bytes());
    server.Post("/session", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, create_session(req.body));
    });
    server.Post(R"(/session/([^/]+)/step)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, step(req.matches[1], req.body));
    });
    server.Get(R"(/session/([^/]+)/frames/(\d+)\.png)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, frame(req.matches[1], std::stoll(req.matches[2])));
    });
    server.Get(R"(/session/([^/]+)/render)", [this, send](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("pose")) return send(res, Reply::error(400, "missing field: pose", "field", "pose"));
      send(res, render(req.matches[1], req.get_param_value("pose")));
    });
    server.Get(R"(/session/([^/]+)/export\.ply)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, export_ply(req.matches[1]));
    });
    server.Get(R"(/session/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, metadata(req.matches[1]));
    });
  }

 private:
  struct Session {
    SessionState state;
    std::shared_mutex mutex;
    std::atomic<bool> in_flight{false};
    std::map<std::int64_t, Bytes> frames;
    std::chrono::system_clock::time_point created_at;
  };

  std::shared_ptr<Session> find(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string next_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::uint64_t v = rng_() ^ (++counter_ << 40);
    std::string id(16, '0');
    for (auto& c : id) c = kHex[v & 15], v >>= 4;
    while (sessions_.count(id)) id = next_id();
    return id;
  }

  template <typename Fn>
  std::optional<Reply> decode_field(const nlohmann::json& req, const char* field, Fn&& fn) {
    if (!req[field].is_string()) return Reply::error(400, std::string(field) + " must be a base64 string", "field", field);
    if (req[field].get_ref<const std::string&>().size() > limits_.max_body_bytes()) {
      return Reply::error(413, std::string(field) + " exceeds the size limit", "field", field);
    }
    try {
      fn(base64_decode(req[field].get<std::string>()));
    } catch (const std::exception& e) {
      return Reply::error(400, std::string(field) + ": " + e.what(), "field", field);
    }
    return std::nullopt;
  }

  ServiceLimits limits_;
  std::function<void()> step_hook_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
  std::uint64_t counter_ = 0;
};

inline int serve(SessionService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace incsplat
