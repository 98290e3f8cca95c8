#include "nvqhl/world.hpp"

#include <string>

namespace nvqhl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, Stream s, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(s));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

Rng stream_rng(std::uint64_t master, Stream s, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return Rng(mix_seed(master, s, a, b, c));
}

FieldMap::FieldMap(int h, int w, double fill)
    : height(h), width(w), values(Eigen::MatrixXd::Constant(h, w, fill)) {
  if (h < 1 || w < 1) throw ArgumentError("field map dimensions must be positive");
}

void WindowIndex::validate(int height, int width) const {
  if (sites.empty()) throw ArgumentError("window has no sites");
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto [y, x] = sites[k];
    if (y < 0 || y >= height || x < 0 || x >= width)
      throw ArgumentError("window site (" + std::to_string(y) + ", " + std::to_string(x) + ") out of bounds");
    if (k == 0) continue;
    const auto [py, px] = sites[k - 1];
    const bool ok = direction == Direction::H ? (y == py && x == px + 1) : (x == px && y == py + 1);
    if (!ok) throw ArgumentError("window sites are not contiguous along the scan direction");
  }
}

FieldMap generate_maze_field(int height, int width, double b_base, double b_amp, std::uint64_t seed) {
  if (height < 8 || width < 8) throw ArgumentError("maze field needs H, W >= 8");
  const int ch = (height + 3) / 4;
  const int cw = (width + 3) / 4;
  std::vector<char> visited(ch * cw, 0), east(ch * cw, 0), south(ch * cw, 0);
  Rng rng = stream_rng(seed, Stream::TruthGen);

  std::vector<int> stack{0};
  visited[0] = 1;
  while (!stack.empty()) {
    const int cell = stack.back();
    const int cy = cell / cw, cx = cell % cw;
    int options[4];
    int n = 0;
    if (cy > 0 && !visited[cell - cw]) options[n++] = cell - cw;
    if (cy + 1 < ch && !visited[cell + cw]) options[n++] = cell + cw;
    if (cx > 0 && !visited[cell - 1]) options[n++] = cell - 1;
    if (cx + 1 < cw && !visited[cell + 1]) options[n++] = cell + 1;
    if (n == 0) {
      stack.pop_back();
      continue;
    }
    const int next = options[std::uniform_int_distribution<int>(0, n - 1)(rng)];
    if (next == cell + 1) east[cell] = 1;
    else if (next == cell - 1) east[next] = 1;
    else if (next == cell + cw) south[cell] = 1;
    else south[next] = 1;
    visited[next] = 1;
    stack.push_back(next);
  }

  FieldMap out(height, width, b_base);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int cell = (y / 4) * cw + x / 4;
      const int ly = y % 4, lx = x % 4;
      const bool corridor = (ly < 2 && lx < 2) || (ly < 2 && east[cell]) || (lx < 2 && ly >= 2 && south[cell]);
      if (corridor) out(y, x) = b_base + b_amp;
    }
  return out;
}

FieldMap evolve_truth(const FieldMap& b, double sigma_true, Rng& rng) {
  if (sigma_true < 0.0) throw ArgumentError("sigma_true must be non-negative");
  FieldMap out = b;
  if (sigma_true == 0.0) return out;
  std::normal_distribution<double> gauss(0.0, sigma_true);
  for (int y = 0; y < b.height; ++y)
    for (int x = 0; x < b.width; ++x) out(y, x) += gauss(rng);
  return out;
}

TruthSequence generate_truth(int height, int width, int frames, double b_base, double b_amp,
                             double sigma_true, double j_true_hz, std::uint64_t seed) {
  if (frames < 1) throw ArgumentError("truth needs at least one frame");
  TruthSequence truth;
  truth.j_true_hz = j_true_hz;
  truth.seed = seed;
  truth.sigma_true = sigma_true;
  truth.b_base = b_base;
  truth.b_amp = b_amp;
  truth.frames.push_back(generate_maze_field(height, width, b_base, b_amp, seed));
  Rng drift = stream_rng(seed, Stream::TruthDrift);
  for (int t = 1; t < frames; ++t) {
    FieldMap next = evolve_truth(truth.frames.back(), sigma_true, drift);
    FieldMap inc(height, width);
    inc.values = next.values - truth.frames.back().values;
    truth.increments.push_back(std::move(inc));
    truth.frames.push_back(std::move(next));
  }
  return truth;
}

LocalFieldVector extract_window(const FieldMap& b, const WindowIndex& w) {
  w.validate(b.height, b.width);
  LocalFieldVector v(w.size());
  for (int k = 0; k < w.size(); ++k) v(k) = b(w.sites[k].first, w.sites[k].second);
  return v;
}

int measure(const TruthSequence& truth, int frame, const WindowIndex& w, const Control& u,
            InitialState init, const WindowModel& model, Rng& rng) {
  if (frame < 0 || frame >= static_cast<int>(truth.frames.size())) throw ArgumentError("frame out of range");
  const LocalFieldVector b = extract_window(truth.frames[frame], w);
  const double p = success_probability(model, b, truth.j_true_hz, u, init);
  std::binomial_distribution<int> binom(u.n_shots, p);
  return binom(rng);
}

}  // namespace nvqhl
