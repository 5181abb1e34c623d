#pragma once

// Straight-line reference implementations. Nothing here calls into the
// library; inputs and outputs are plain row-major std::vector<double>.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// ---- hashing and random draws ----

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h = h ^ c;
    h = h * 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix_next(std::uint64_t& s) {
  s = s + 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) / 9007199254740992.0;  // 2^53
}

// mt19937_64 uniforms turned into normals two at a time (cos first, then sin).
class Normals {
 public:
  explicit Normals(std::uint64_t seed) : mt_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return held_;
    }
    double a = to_unit(mt_());
    while (a <= 0.0) a = to_unit(mt_());
    double b = to_unit(mt_());
    double r = std::sqrt(-2.0 * std::log(a));
    double angle = 2.0 * 3.141592653589793 * b;
    held_ = r * std::sin(angle);
    have_ = true;
    return r * std::cos(angle);
  }

 private:
  std::mt19937_64 mt_;
  double held_ = 0.0;
  bool have_ = false;
};

// ---- mock text encoder ----

inline std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char ch = static_cast<unsigned char>(text[i]);
    bool alnum = (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
    if (alnum) {
      cur += static_cast<char>(std::tolower(ch));
    } else {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      if (!(ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f')) {
        out.push_back(std::string(1, static_cast<char>(ch)));
      }
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> token_row(const std::string& token, int pos, std::uint64_t seed, int d) {
  std::uint64_t s = fnv1a(token) ^ (seed * 0x9E3779B97F4A7C15ull) ^
                    (static_cast<std::uint64_t>(pos + 1) * 0xD1B54A32D192ED03ull);
  std::vector<double> row(d);
  for (int j = 0; j < d; ++j) row[j] = 2.0 * to_unit(splitmix_next(s)) - 1.0;
  return row;
}

inline Grid encode(const std::string& text, std::uint64_t seed = 0, int L = 16, int d = 32) {
  std::vector<std::string> w = words_of(text);
  if (static_cast<int>(w.size()) > L - 2) w.resize(L - 2);
  std::vector<std::string> slots = {"<bos>"};
  for (auto& x : w) slots.push_back(x);
  slots.push_back("<eos>");
  while (static_cast<int>(slots.size()) < L) slots.push_back("<pad>");
  Grid g(L, d);
  for (int p = 0; p < L; ++p) {
    auto row = token_row(slots[p], p, seed, d);
    for (int j = 0; j < d; ++j) g.at(p, j) = row[j];
  }
  return g;
}

// ---- rejection / injection ----

inline Grid reject(const Grid& pref, const Grid& prompt, double eps = 1e-8) {
  Grid out = pref;
  for (int i = 0; i < prompt.rows; ++i) {
    double uu = 0.0;
    double vu = 0.0;
    for (int j = 0; j < prompt.cols; ++j) {
      uu += prompt.at(i, j) * prompt.at(i, j);
      vu += pref.at(i, j) * prompt.at(i, j);
    }
    if (std::sqrt(uu) < eps) continue;
    for (int j = 0; j < prompt.cols; ++j) out.at(i, j) = pref.at(i, j) - (vu / uu) * prompt.at(i, j);
  }
  return out;
}

inline Grid inject(const Grid& prompt, const Grid& pref, double alpha) {
  Grid r = reject(pref, prompt);
  Grid out = prompt;
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] = prompt.v[k] + alpha * r.v[k];
  return out;
}

// ---- attention ----

inline Grid matmul(const Grid& a, const Grid& b) {
  Grid out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

// z: N x c, P: L x d, Wq: c x k, Wk: d x k, Wv: d x c.
inline Grid attention(const Grid& z, const Grid& P, const Grid& Wq, const Grid& Wk, const Grid& Wv) {
  const int N = z.rows;
  const int L = P.rows;
  const int k = Wq.cols;
  Grid q = matmul(z, Wq);
  Grid key = matmul(P, Wk);
  Grid val = matmul(P, Wv);
  Grid out(N, Wv.cols);
  for (int n = 0; n < N; ++n) {
    std::vector<double> score(L);
    double top = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < L; ++l) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += q.at(n, t) * key.at(l, t);
      score[l] = s / std::sqrt(static_cast<double>(k));
      top = std::max(top, score[l]);
    }
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
      score[l] = std::exp(score[l] - top);
      total += score[l];
    }
    for (int c = 0; c < Wv.cols; ++c) {
      double s = 0.0;
      for (int l = 0; l < L; ++l) s += (score[l] / total) * val.at(l, c);
      out.at(n, c) = s;
    }
  }
  return out;
}

// ---- layout ----

using Box = std::array<double, 4>;  // left, top, right, bottom

inline std::vector<int> cells_in(const Box& b, int h, int w) {
  std::vector<int> set(static_cast<std::size_t>(h) * w, 0);
  bool any = false;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double x = (c + 0.5) / w;
      double y = (r + 0.5) / h;
      if (x >= b[0] && x < b[2] && y >= b[1] && y < b[3]) {
        set[static_cast<std::size_t>(r) * w + c] = 1;
        any = true;
      }
    }
  }
  if (!any) {
    double cx = (b[0] + b[2]) / 2.0;
    double cy = (b[1] + b[3]) / 2.0;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int idx = 0; idx < h * w; ++idx) {
      double x = (idx % w + 0.5) / w - cx;
      double y = (idx / w + 0.5) / h - cy;
      if (x * x + y * y < best_d) {
        best_d = x * x + y * y;
        best = idx;
      }
    }
    set[static_cast<std::size_t>(best)] = 1;
  }
  return set;
}

inline double area(const Box& b) { return (b[2] - b[0]) * (b[3] - b[1]); }

// Entity indices in compositing order.
inline std::vector<int> plan_order(const std::vector<Box>& boxes) {
  std::vector<int> idx(boxes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  // insertion sort: larger area first, equal areas keep index order
  for (std::size_t i = 1; i < idx.size(); ++i) {
    int cur = idx[i];
    std::size_t j = i;
    while (j > 0 && area(boxes[idx[j - 1]]) < area(boxes[cur])) {
      idx[j] = idx[j - 1];
      --j;
    }
    idx[j] = cur;
  }
  return idx;
}

// ---- compositing ----

inline Grid composite(const Grid& background, const std::vector<Grid>& layers,
                      const std::vector<std::vector<int>>& masks) {
  Grid out = background;
  for (int n = 0; n < background.rows; ++n) {
    for (std::size_t e = layers.size(); e-- > 0;) {
      if (masks[e][n]) {
        for (int c = 0; c < background.cols; ++c) out.at(n, c) = layers[e].at(n, c);
        break;
      }
    }
  }
  return out;
}

inline Grid blend(const Grid& a, const Grid& b, double lambda) {
  Grid out(a.rows, a.cols);
  for (std::size_t k = 0; k < a.v.size(); ++k) out.v[k] = lambda * a.v[k] + (1.0 - lambda) * b.v[k];
  return out;
}

// ---- toy denoiser ----

struct ToyWeights {
  Grid w_in, b_in, wq, wk, wv, w_out;
};

inline Grid draw(Normals& g, int r, int c, int fan_in) {
  Grid m(r, c);
  double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : m.v) x = scale * g.next();
  return m;
}

inline ToyWeights toy_weights(std::uint64_t seed, int c = 4, int m = 8, int d = 32, int k = 16) {
  Normals g(seed);
  ToyWeights w;
  w.w_in = draw(g, c, m, c);
  w.b_in = draw(g, 1, m, c);
  w.wq = draw(g, m, k, m);
  w.wk = draw(g, d, k, d);
  w.wv = draw(g, d, m, d);
  w.w_out = draw(g, m, c, m);
  return w;
}

inline std::vector<double> step_bias(std::uint64_t seed, int t, int c = 4, double scale = 0.1) {
  Normals g(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(t + 1)));
  std::vector<double> b(c);
  for (auto& x : b) x = scale * g.next();
  return b;
}

struct Prompts {
  Grid complex;
  std::vector<Grid> entities;  // entity index order
  Grid background;
  Grid unconditional;
};

struct PlanItem {
  int entity;
  Box box;
};

inline Grid modulated(const Grid& hid, int h, int w, const Prompts& p,
                      const std::vector<PlanItem>& plan, const ToyWeights& tw, double lambda) {
  Grid com = attention(hid, p.complex, tw.wq, tw.wk, tw.wv);
  Grid bg = attention(hid, p.background, tw.wq, tw.wk, tw.wv);
  std::vector<Grid> layers;
  std::vector<std::vector<int>> masks;
  for (const auto& item : plan) {
    layers.push_back(attention(hid, p.entities[item.entity], tw.wq, tw.wk, tw.wv));
    masks.push_back(cells_in(item.box, h, w));
  }
  return blend(com, composite(bg, layers, masks), lambda);
}

inline Grid project_in(const Grid& x, const ToyWeights& tw) {
  Grid hid = matmul(x, tw.w_in);
  for (int n = 0; n < hid.rows; ++n) {
    for (int j = 0; j < hid.cols; ++j) hid.at(n, j) += tw.b_in.at(0, j);
  }
  return hid;
}

inline Grid project_out(const Grid& hid, const Grid& att, const std::vector<double>& bias,
                        const ToyWeights& tw) {
  Grid sum = hid;
  for (std::size_t k = 0; k < sum.v.size(); ++k) sum.v[k] += att.v[k];
  Grid eps = matmul(sum, tw.w_out);
  for (int n = 0; n < eps.rows; ++n) {
    for (int c = 0; c < eps.cols; ++c) eps.at(n, c) += bias[c];
  }
  return eps;
}

inline Grid conditional_eps(const Grid& x, int h, int w, int t, std::uint64_t wseed,
                            const Prompts& p, const std::vector<PlanItem>& plan,
                            const ToyWeights& tw, double lambda) {
  Grid hid = project_in(x, tw);
  return project_out(hid, modulated(hid, h, w, p, plan, tw, lambda), step_bias(wseed, t, x.cols), tw);
}

inline Grid guided_eps(const Grid& x, int h, int w, int t, std::uint64_t wseed, const Prompts& p,
                       const std::vector<PlanItem>& plan, const ToyWeights& tw, double lambda,
                       double omega) {
  Grid hid = project_in(x, tw);
  Grid cond = project_out(hid, modulated(hid, h, w, p, plan, tw, lambda), step_bias(wseed, t, x.cols), tw);
  Grid unc = project_out(hid, attention(hid, p.unconditional, tw.wq, tw.wk, tw.wv),
                         step_bias(wseed, t, x.cols), tw);
  Grid out(x.rows, x.cols);
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] = unc.v[k] + omega * (cond.v[k] - unc.v[k]);
  return out;
}

inline Grid sample(std::uint64_t seed, int h, int w, int c, int steps, double step_size,
                   std::uint64_t wseed, const Prompts& p, const std::vector<PlanItem>& plan,
                   double lambda, double omega) {
  ToyWeights tw = toy_weights(wseed, c);
  Normals g(seed);
  Grid x(h * w, c);
  for (auto& v : x.v) v = g.next();
  for (int t = steps - 1; t >= 0; --t) {
    Grid eps = guided_eps(x, h, w, t, wseed, p, plan, tw, lambda, omega);
    for (std::size_t k = 0; k < x.v.size(); ++k) x.v[k] = x.v[k] - step_size * eps.v[k];
  }
  return x;
}

inline std::vector<std::uint8_t> decode(const Grid& z, int h, int w) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * 8 * w * 8 * 3);
  for (int y = 0; y < h * 8; ++y) {
    for (int x = 0; x < w * 8; ++x) {
      for (int k = 0; k < 3; ++k) {
        double v = 128.0 + 64.0 * z.at((y / 8) * w + x / 8, k % z.cols);
        v = std::min(255.0, std::max(0.0, v));
        px[(static_cast<std::size_t>(y) * w * 8 + x) * 3 + k] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return px;
}

}  // namespace oracle
