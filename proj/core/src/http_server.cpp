#include <condition_variable>
#include <stop_token>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "qwerty/service.hpp"

namespace qwerty {

using json = nlohmann::ordered_json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kBadRequest:
    case ErrorCode::kEmptyEval: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kPayloadTooLarge: return 413;
    case ErrorCode::kUnsupportedFormat: return 415;
    case ErrorCode::kEmptyDocument:
    case ErrorCode::kMalformedDocx:
    case ErrorCode::kEmptyAnalysis:
    case ErrorCode::kDivisionDomain: return 422;
    case ErrorCode::kTooManyUploads: return 429;
    case ErrorCode::kAnalyzerUnavailable:
    case ErrorCode::kVerdictParseError: return 503;
    case ErrorCode::kConfigError:
    case ErrorCode::kLexiconParseError:
    case ErrorCode::kStorageError: return 500;
  }
  return 500;
}

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = http_status_for(code);
  res.set_content(json{{"code", error_code_name(code)}, {"message", message}}.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::kBadRequest, "request body must be a JSON object");
  }
  return body;
}

std::string string_field(const json& body, const char* name, bool required) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) {
    if (required) throw Error(ErrorCode::kBadRequest, std::string("missing field '") + name + "'");
    return {};
  }
  if (!it->is_string()) throw Error(ErrorCode::kBadRequest, std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

std::size_t scene_index(const httplib::Request& req) {
  const std::string& text = req.path_params.at("index");
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw Error(ErrorCode::kBadRequest, "scene index must be a non-negative integer");
  return static_cast<std::size_t>(value);
}

std::optional<AnalyzerKind> analyzer_param(const httplib::Request& req) {
  if (!req.has_param("analyzer")) return std::nullopt;
  const auto kind = parse_analyzer_kind(req.get_param_value("analyzer"));
  if (!kind) throw Error(ErrorCode::kBadRequest, "unknown analyzer '" + req.get_param_value("analyzer") + "'");
  return kind;
}

RawDocument upload_document(const httplib::Request& req) {
  RawDocument doc;
  if (req.is_multipart_form_data()) {
    if (!req.has_file("file")) throw Error(ErrorCode::kBadRequest, "multipart upload needs a 'file' field");
    const auto part = req.get_file_value("file");
    doc.bytes.assign(part.content.begin(), part.content.end());
    doc.filename = part.filename;
  } else {
    doc.bytes.assign(req.body.begin(), req.body.end());
    doc.filename = req.get_param_value("filename");
  }
  if (req.has_param("format")) {
    const auto hint = parse_format_hint(req.get_param_value("format"));
    if (!hint) throw Error(ErrorCode::kBadRequest, "unknown format '" + req.get_param_value("format") + "'");
    doc.format_hint = *hint;
  }
  return doc;
}

std::string scene_update_json(const SceneUpdate& update) {
  json out;
  out["verdict"] = json::parse(verdict_to_json(update.verdict));
  out["report"] = json::parse(report_to_json(update.report));
  return out.dump(2);
}

// Runs a handler body and turns library errors into {code, message} bodies.
template <typename F>
httplib::Server::Handler guarded(F&& body) {
  return [body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
    try {
      body(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::kBadRequest, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kStorageError, e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  HttpServerOptions options;
  httplib::Server server;
  std::thread listener;
  std::jthread expiry;
  std::mutex expiry_mutex;
  std::condition_variable_any expiry_cv;

  Impl(Service& s, HttpServerOptions o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    server.set_payload_max_length(service.config().max_upload_bytes + (1u << 20));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 413) {
        send_error(res, ErrorCode::kPayloadTooLarge, "request body too large");
      } else if (res.status == 404) {
        send_error(res, ErrorCode::kNotFound, "no such endpoint");
      } else {
        res.set_content(json{{"code", "HttpError"}, {"message", "HTTP " + std::to_string(res.status)}}.dump(),
                        kJson);
      }
    });

    server.Post("/chat", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const ChatResult result = service.chat(string_field(body, "text", true));
      res.set_content(verdict_to_json(result.verdict, 2), kJson);
    }));

    server.Post("/upload", guarded([this](const httplib::Request& req, httplib::Response& res) {
      RawDocument doc = upload_document(req);
      const auto kind = analyzer_param(req);
      if (req.get_param_value("async") == "true" || req.get_param_value("async") == "1") {
        const std::string file_id = service.upload_async(std::move(doc), kind);
        res.status = 202;
        res.set_content(json{{"file_id", file_id}}.dump(), kJson);
        return;
      }
      const Report report = service.upload(doc, kind);
      res.set_content(*service.store().report_json(report.file_id), kJson);
    }));

    server.Get("/report/:file_id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(service.report_json(req.path_params.at("file_id")), kJson);
    }));

    server.Get("/report/:file_id/audit", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json out = json::array();
      for (const AuditEntry& e : service.audit_trail(req.path_params.at("file_id"))) {
        out.push_back({{"id", e.id},
                       {"scene_index", e.scene_index},
                       {"at_ms", std::chrono::duration_cast<std::chrono::milliseconds>(e.at.time_since_epoch()).count()},
                       {"action", e.action},
                       {"before", json::parse(e.before)},
                       {"after", json::parse(e.after)},
                       {"note", e.note}});
      }
      res.set_content(out.dump(2), kJson);
    }));

    server.Get("/progress/:file_id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string& file_id = req.path_params.at("file_id");
      const ProgressSnapshot p = service.progress(file_id);
      json out{{"file_id", file_id}, {"completed", p.completed}, {"total", p.total}, {"done", p.done}};
      if (p.error) out["error"] = {{"code", error_code_name(*p.error)}, {"message", p.message}};
      res.set_content(out.dump(), kJson);
    }));

    server.Post("/report/:file_id/scene/:index/reanalyze",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const SceneUpdate update = service.reanalyze_scene(
                      req.path_params.at("file_id"), scene_index(req), string_field(body, "text", true));
                  res.set_content(scene_update_json(update), kJson);
                }));

    server.Post("/report/:file_id/scene/:index/override",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const std::string& file_id = req.path_params.at("file_id");
                  const std::size_t index = scene_index(req);
                  const std::string note = string_field(body, "note", false);
                  if (body.value("clear", false)) {
                    res.set_content(scene_update_json(service.clear_override(file_id, index, note)), kJson);
                    return;
                  }
                  const std::string rating_text = string_field(body, "rating", true);
                  const auto rating = parse_rating(rating_text);
                  if (!rating) throw Error(ErrorCode::kBadRequest, "unknown rating '" + rating_text + "'");
                  res.set_content(scene_update_json(service.override_verdict(file_id, index, *rating, note)),
                                  kJson);
                }));

    server.Post("/report/:file_id/save", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string& file_id = req.path_params.at("file_id");
      service.save(file_id);
      res.set_content(json{{"file_id", file_id}, {"saved", true}}.dump(), kJson);
    }));
  }

  void start_expiry() {
    if (options.expiry_interval.count() <= 0) return;
    expiry = std::jthread([this](std::stop_token stop) {
      std::unique_lock lock(expiry_mutex);
      while (!expiry_cv.wait_for(lock, stop, options.expiry_interval, [] { return false; })) {
        if (stop.stop_requested()) break;
        service.expire_sessions(service.now());
      }
    });
  }
};

HttpServer::HttpServer(Service& service, HttpServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  const auto& o = impl_->options;
  port_ = o.port == 0 ? impl_->server.bind_to_any_port(o.host) : o.port;
  if (o.port != 0 && !impl_->server.bind_to_port(o.host, o.port)) port_ = -1;
  if (port_ <= 0) {
    throw Error(ErrorCode::kConfigError, "cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->start_expiry();
  return port_;
}

void HttpServer::run() {
  const auto& o = impl_->options;
  if (!impl_->server.bind_to_port(o.host, o.port)) {
    throw Error(ErrorCode::kConfigError, "cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  port_ = o.port;
  impl_->start_expiry();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  if (impl_->expiry.joinable()) {
    impl_->expiry.request_stop();
    impl_->expiry.join();
  }
}

}  // namespace qwerty
