#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "prefalign/backend.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/error.hpp"
#include "prefalign/gateway/config.hpp"
#include "prefalign/gateway/store.hpp"
#include "prefalign/mllm/chat.hpp"

namespace prefalign::gateway {

struct FormPart {
  std::string content;
  std::string filename;
  std::string content_type;
};

// Transport-neutral request/response so routes are testable without sockets.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
  std::map<std::string, FormPart> form;        // multipart fields

  std::string header(std::string_view name) const;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

int http_status(ErrorCode code);
// {code, message, raw?}
Response error_response(const Error& error);

struct ServiceDeps {
  mllm::ChatClient& chat;
  const encode::TextEncoder& encoder;
  SessionStore& sessions;
  ImageStore& images;
};

// Routes:
//   POST   /sessions                multipart reference + base_prompt -> 201
//   GET    /sessions/{id}
//   PATCH  /sessions/{id}           JSON edit list, optional If-Match revision
//   POST   /sessions/{id}/rounds    -> 201 {round_index, image_ref, image_url, revision}
//   GET    /images/{ref}
//   GET    /healthz
class GatewayService {
 public:
  GatewayService(Config config, ServiceDeps deps);

  Response handle(const Request& request);

 private:
  Response create_session(const Request& request);
  Response get_session(const std::string& id);
  Response edit_session(const std::string& id, const Request& request);
  Response run_round(const std::string& id);
  Response get_image(const std::string& ref);
  Response healthz();
  void add_cors(Response& response) const;

  Config config_;
  ServiceDeps deps_;
};

// Binds `service` onto a blocking HTTP listener at host:port. Returns when
// the listener stops.
class HttpServer {
 public:
  explicit HttpServer(GatewayService& service);
  ~HttpServer();

  // Binds and serves; returns false if the socket cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it (or -1), without serving.
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prefalign::gateway
