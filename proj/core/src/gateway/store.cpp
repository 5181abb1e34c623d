#include "prefalign/gateway/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "prefalign/digest.hpp"
#include "prefalign/error.hpp"

namespace prefalign::gateway {
namespace {

void write_atomically(const std::filesystem::path& path, std::span<const char> data) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8;
}

}  // namespace

ImageStore::ImageStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

bool ImageStore::valid_ref(const std::string& ref) {
  return ref.size() == 64 && std::all_of(ref.begin(), ref.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::filesystem::path ImageStore::path_for(const std::string& ref,
                                           std::span<const std::uint8_t> bytes) const {
  return dir_ / (ref + (is_jpeg(bytes) ? ".jpg" : ".png"));
}

std::string ImageStore::put(std::span<const std::uint8_t> bytes) {
  std::string ref = sha256_hex(bytes);
  std::unique_lock lock(mu_);
  if (blobs_.contains(ref)) return ref;
  if (!dir_.empty()) {
    write_atomically(path_for(ref, bytes),
                     {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
  }
  blobs_.emplace(ref, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  return ref;
}

std::optional<std::vector<std::uint8_t>> ImageStore::get(const std::string& ref) const {
  if (!valid_ref(ref)) return std::nullopt;
  {
    std::shared_lock lock(mu_);
    if (auto it = blobs_.find(ref); it != blobs_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  for (const char* ext : {".png", ".jpg"}) {
    const auto path = dir_ / (ref + ext);
    if (!std::filesystem::exists(path)) continue;
    const std::string data = read_file(path);
    std::vector<std::uint8_t> bytes(data.begin(), data.end());
    if (sha256_hex(bytes) != ref) {
      spdlog::warn("image {} does not match its digest; ignoring", path.string());
      return std::nullopt;
    }
    return bytes;
  }
  return std::nullopt;
}

bool ImageStore::contains(const std::string& ref) const { return get(ref).has_value(); }

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    try {
      auto state = pipeline::deserialize_session(read_file(entry.path()));
      sessions_.emplace(state.session_id, std::move(state));
    } catch (const Error& e) {
      spdlog::warn("skipping session file {}: {}", entry.path().string(), e.what());
    }
  }
}

void SessionStore::persist(const pipeline::SessionState& state) const {
  if (dir_.empty()) return;
  const std::string text = pipeline::serialize_session(state);
  write_atomically(dir_ / (state.session_id + ".json"), {text.data(), text.size()});
}

pipeline::SessionState SessionStore::create(pipeline::SessionState state) {
  std::unique_lock lock(mu_);
  if (sessions_.contains(state.session_id)) {
    fail(ErrorCode::kConflict, "session " + state.session_id + " already exists");
  }
  state.revision = 1;
  persist(state);
  sessions_.emplace(state.session_id, state);
  return state;
}

pipeline::SessionState SessionStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session " + id);
  return it->second;
}

pipeline::SessionState SessionStore::commit(const std::string& id, std::uint64_t expected_revision,
                                            pipeline::SessionState next) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kNotFound, "no session " + id);
  if (it->second.revision != expected_revision) {
    fail(ErrorCode::kConflict, "session " + id + " is at revision " +
                                   std::to_string(it->second.revision) + ", not " +
                                   std::to_string(expected_revision));
  }
  next.session_id = id;
  next.revision = expected_revision + 1;
  persist(next);
  it->second = next;
  return next;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

}  // namespace prefalign::gateway
