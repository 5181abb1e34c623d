#include "prefalign/gateway/service.hpp"

#include <cctype>
#include <charconv>
#include <future>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prefalign/image.hpp"
#include "prefalign/pipeline.hpp"

namespace prefalign::gateway {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = path.find('/', start);
    const auto piece = path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!piece.empty()) parts.emplace_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

Response json_response(int status, std::string body) {
  Response r;
  r.status = status;
  r.body = std::move(body);
  return r;
}

Response session_response(int status, const pipeline::SessionState& state) {
  Response r = json_response(status, pipeline::serialize_session(state));
  r.headers["ETag"] = "\"" + std::to_string(state.revision) + "\"";
  return r;
}

std::optional<std::uint64_t> parse_revision(std::string text) {
  if (text.empty()) return std::nullopt;
  if (text.starts_with("W/")) text = text.substr(2);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::kCorruptPayload, "If-Match must carry a session revision");
  }
  return v;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::string Request::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? std::string() : it->second;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidImage:
    case ErrorCode::kCorruptPayload:
    case ErrorCode::kSchemaVersionMismatch:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kOversizeImage:
      return 413;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kMissingEntity:
    case ErrorCode::kParseError:
    case ErrorCode::kDegenerateRegion:
    case ErrorCode::kLambdaOutOfRange:
    case ErrorCode::kUnknownEntity:
    case ErrorCode::kDuplicateEntity:
    case ErrorCode::kInvalidRegion:
      return 422;
    case ErrorCode::kTransport:
    case ErrorCode::kUnknownFixture:
      return 502;
    case ErrorCode::kBackendFailure:
      return 503;
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kIo:
      return 500;
  }
  return 500;
}

Response error_response(const Error& error) {
  json body = {{"code", code_name(error.code())}, {"message", error.what()}};
  if (!error.raw_text().empty()) body["raw"] = error.raw_text();
  return json_response(http_status(error.code()), body.dump());
}

GatewayService::GatewayService(Config config, ServiceDeps deps)
    : config_(std::move(config)), deps_(deps) {}

void GatewayService::add_cors(Response& response) const {
  response.headers["Access-Control-Allow-Origin"] = config_.service.cors_origin;
  response.headers["Access-Control-Allow-Methods"] = "GET, POST, PATCH, OPTIONS";
  response.headers["Access-Control-Allow-Headers"] = "Content-Type, If-Match";
  response.headers["Access-Control-Expose-Headers"] = "Location, ETag";
}

Response GatewayService::handle(const Request& request) {
  Response response;
  try {
    const auto parts = split_path(request.path);
    const std::string& m = request.method;
    if (m == "OPTIONS") {
      response.status = 204;
      response.content_type.clear();
    } else if (parts.size() == 1 && parts[0] == "healthz" && m == "GET") {
      response = healthz();
    } else if (parts.size() == 1 && parts[0] == "sessions" && m == "POST") {
      response = create_session(request);
    } else if (parts.size() == 2 && parts[0] == "sessions" && m == "GET") {
      response = get_session(parts[1]);
    } else if (parts.size() == 2 && parts[0] == "sessions" && m == "PATCH") {
      response = edit_session(parts[1], request);
    } else if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "rounds" && m == "POST") {
      response = run_round(parts[1]);
    } else if (parts.size() == 2 && parts[0] == "images" && m == "GET") {
      response = get_image(parts[1]);
    } else {
      response = error_response(Error(ErrorCode::kNotFound, "no route for " + m + " " + request.path));
    }
  } catch (const Error& e) {
    response = error_response(e);
  } catch (const std::exception& e) {
    spdlog::error("unhandled failure on {} {}: {}", request.method, request.path, e.what());
    response = json_response(500, json{{"code", "internal"}, {"message", "internal error"}}.dump());
  }
  add_cors(response);
  return response;
}

Response GatewayService::create_session(const Request& request) {
  auto ref = request.form.find("reference");
  auto prompt = request.form.find("base_prompt");
  if (ref == request.form.end() || ref->second.content.empty()) {
    fail(ErrorCode::kCorruptPayload, "multipart field 'reference' is required");
  }
  if (prompt == request.form.end()) {
    fail(ErrorCode::kCorruptPayload, "multipart field 'base_prompt' is required");
  }
  pipeline::SessionOptions options;
  options.retries = config_.mllm.retries;
  options.max_image_bytes = config_.mllm.max_image_bytes;
  options.config = config_.generation;
  const auto image = as_bytes(ref->second.content);
  pipeline::SessionState state =
      pipeline::create_session(image, prompt->second.content, deps_.chat, options);
  deps_.images.put(image);
  state = deps_.sessions.create(std::move(state));
  Response r = session_response(201, state);
  r.headers["Location"] = "/sessions/" + state.session_id;
  return r;
}

Response GatewayService::get_session(const std::string& id) {
  return session_response(200, deps_.sessions.get(id));
}

Response GatewayService::edit_session(const std::string& id, const Request& request) {
  const pipeline::SessionState current = deps_.sessions.get(id);
  if (auto wanted = parse_revision(request.header("If-Match")); wanted && *wanted != current.revision) {
    fail(ErrorCode::kConflict, "session " + id + " is at revision " +
                                   std::to_string(current.revision));
  }
  const auto edits = pipeline::parse_edits(request.body);
  pipeline::SessionState next =
      pipeline::apply_edits(current, edits, &deps_.chat, config_.mllm.retries);
  return session_response(200, deps_.sessions.commit(id, current.revision, std::move(next)));
}

Response GatewayService::run_round(const std::string& id) {
  const pipeline::SessionState current = deps_.sessions.get(id);
  std::shared_ptr<backend::DiffusionBackend> handle =
      backend::make_backend(config_.backend.name, {config_.backend.toy});

  // The worker owns copies of everything it reads except the encoder, which
  // lives as long as the service.
  auto task = std::make_shared<std::packaged_task<pipeline::RoundResult()>>(
      [state = current, handle, &encoder = deps_.encoder] {
        return pipeline::run_round(state, {encoder, *handle});
      });
  auto future = task->get_future();
  std::thread([task] { (*task)(); }).detach();
  if (future.wait_for(config_.service.round_timeout) != std::future_status::ready) {
    fail(ErrorCode::kBackendFailure, "round exceeded the " +
                                         std::to_string(config_.service.round_timeout.count()) +
                                         " s timeout");
  }
  pipeline::RoundResult result = future.get();

  deps_.images.put(result.png);
  const pipeline::SessionState saved =
      deps_.sessions.commit(id, current.revision, std::move(result.state));
  const auto& record = saved.rounds.back();
  json body = {{"round_index", record.round_index},
               {"image_ref", record.image_ref},
               {"image_url", "/images/" + record.image_ref},
               {"revision", saved.revision}};
  Response r = json_response(201, body.dump());
  r.headers["Location"] = "/images/" + record.image_ref;
  return r;
}

Response GatewayService::get_image(const std::string& ref) {
  auto bytes = deps_.images.get(ref);
  if (!bytes) fail(ErrorCode::kNotFound, "no image " + ref);
  Response r;
  r.content_type = bytes->size() >= 2 && (*bytes)[0] == 0xFF && (*bytes)[1] == 0xD8
                       ? "image/jpeg"
                       : "image/png";
  r.body.assign(bytes->begin(), bytes->end());
  r.headers["Cache-Control"] = "public, max-age=31536000, immutable";
  return r;
}

Response GatewayService::healthz() {
  std::string backend_status = "ok";
  try {
    backend::make_backend(config_.backend.name, {config_.backend.toy})->capabilities();
  } catch (const Error&) {
    backend_status = "unavailable";
  }
  const bool mllm_up = deps_.chat.reachable();
  json body = {{"status", "ok"},
               {"backend", backend_status},
               {"backend_name", config_.backend.name},
               {"mllm", mllm_up ? "reachable" : "unreachable"}};
  return json_response(200, body.dump());
}

struct HttpServer::Impl {
  GatewayService& service;
  httplib::Server server;

  explicit Impl(GatewayService& s) : service(s) {
    auto dispatch = [this](const httplib::Request& in, httplib::Response& out) {
      Request req;
      req.method = in.method;
      req.path = in.path;
      req.body = in.body;
      for (const auto& [k, v] : in.headers) req.headers[lower(k)] = v;
      for (const auto& [name, file] : in.files) {
        req.form[name] = {file.content, file.filename, file.content_type};
      }
      for (const auto& [name, value] : in.params) {
        if (!req.form.contains(name)) req.form[name] = {value, {}, {}};
      }
      const Response res = service.handle(req);
      out.status = res.status;
      for (const auto& [k, v] : res.headers) out.set_header(k, v);
      if (!res.content_type.empty()) out.set_content(res.body, res.content_type);
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Patch(".*", dispatch);
    server.Options(".*", dispatch);
  }
};

HttpServer::HttpServer(GatewayService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace prefalign::gateway
