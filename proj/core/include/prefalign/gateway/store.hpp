#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "prefalign/pipeline.hpp"

namespace prefalign::gateway {

// Content-addressed blobs: the ref is the sha256 of the bytes. With a
// directory, blobs are also written as <dir>/<ref>.png (or .jpg) and read
// back on demand.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path dir = {});

  std::string put(std::span<const std::uint8_t> bytes);
  std::optional<std::vector<std::uint8_t>> get(const std::string& ref) const;
  bool contains(const std::string& ref) const;

  static bool valid_ref(const std::string& ref);

 private:
  std::filesystem::path path_for(const std::string& ref, std::span<const std::uint8_t> bytes) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<std::uint8_t>> blobs_;
};

// Session snapshots with optimistic versioning. Each commit bumps the
// revision by one; a commit against a stale revision throws kConflict.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir = {});

  // Throws kConflict if the id is taken. Returns the stored snapshot.
  pipeline::SessionState create(pipeline::SessionState state);
  // Throws kNotFound.
  pipeline::SessionState get(const std::string& id) const;
  // Replaces the snapshot when its revision still equals expected_revision.
  pipeline::SessionState commit(const std::string& id, std::uint64_t expected_revision,
                                pipeline::SessionState next);
  std::size_t size() const;

 private:
  void persist(const pipeline::SessionState& state) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, pipeline::SessionState> sessions_;
};

}  // namespace prefalign::gateway
