#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "prefalign/digest.hpp"
#include "prefalign/mllm/fixtures.hpp"
#include "prefalign/pipeline.hpp"
#include "prefalign/rng.hpp"
#include "prefalign/tensor.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return PREFALIGN_FIXTURE_DIR; }
inline std::filesystem::path data_dir() { return PREFALIGN_TEST_DATA_DIR; }

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string s = buf.str();
  return {s.begin(), s.end()};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<std::uint8_t> reference_png() { return read_bytes(data_dir() / "reference.png"); }
inline std::vector<std::uint8_t> starry_png() { return read_bytes(data_dir() / "starry.png"); }

inline prefalign::mllm::ReplayChatClient mock_mllm() {
  return prefalign::mllm::ReplayChatClient(prefalign::mllm::FixtureStore::load_directory(fixture_dir()));
}

inline oracle::Grid to_grid(const prefalign::Matrix& m) {
  oracle::Grid g(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) g.at(i, j) = m(i, j);
  }
  return g;
}

inline prefalign::Matrix to_matrix(const oracle::Grid& g) {
  prefalign::Matrix m(g.rows, g.cols);
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) m(i, j) = g.at(i, j);
  }
  return m;
}

inline double max_abs_diff(const prefalign::Matrix& m, const oracle::Grid& g) {
  if (m.rows() != g.rows || m.cols() != g.cols) return 1e300;
  double worst = 0.0;
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) worst = std::max(worst, std::abs(m(i, j) - g.at(i, j)));
  }
  return worst;
}

// sha256 over the little-endian bytes of every entry, row-major.
inline std::string checksum(const prefalign::Matrix& m) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  return prefalign::sha256_hex(bytes);
}

inline prefalign::Matrix random_matrix(prefalign::SeededRng& rng, int rows, int cols) {
  prefalign::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  }
  return m;
}

inline prefalign::LatentFeatureMap random_latent(prefalign::SeededRng& rng, int h, int w, int c) {
  prefalign::LatentFeatureMap z(h, w, c);
  z.cells = random_matrix(rng, h * w, c);
  return z;
}

inline prefalign::TokenEmbeddingSequence random_sequence(prefalign::SeededRng& rng, int L, int d) {
  return {random_matrix(rng, L, d), {}};
}

// Boat session built from the transcript corpus with a fixed id.
inline prefalign::pipeline::SessionState boat_session(const std::string& id = "boat") {
  auto chat = mock_mllm();
  prefalign::pipeline::SessionOptions opts;
  opts.session_id = id;
  return prefalign::pipeline::create_session(reference_png(), "a boat on a lake", chat, opts);
}

}  // namespace testing
