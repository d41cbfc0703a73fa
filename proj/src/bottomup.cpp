#include "egogaze/bottomup.hpp"

#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "egogaze/parallel.hpp"

namespace egogaze::bottomup {

namespace {

struct Neighbor {
  int dx;
  int dy;
  double w;
};

// 8-neighborhood of the classical Horn-Schunck local average.
constexpr std::array<Neighbor, 8> kStencil = {{{-1, 0, 1.0 / 6},
                                               {1, 0, 1.0 / 6},
                                               {0, -1, 1.0 / 6},
                                               {0, 1, 1.0 / 6},
                                               {-1, -1, 1.0 / 12},
                                               {1, -1, 1.0 / 12},
                                               {-1, 1, 1.0 / 12},
                                               {1, 1, 1.0 / 12}}};

// Each unordered neighbor pair once: right, down, down-right, down-left.
constexpr std::array<Neighbor, 4> kHalfStencil = {
    {{1, 0, 1.0 / 6}, {0, 1, 1.0 / 6}, {1, 1, 1.0 / 12}, {-1, 1, 1.0 / 12}}};

struct Derivatives {
  std::vector<double> ex, ey, et;
};

Derivatives derivatives(const Image& a, const Image& b) {
  const int w = a.width();
  const int h = a.height();
  Derivatives d;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  d.ex.resize(n);
  d.ey.resize(n);
  d.et.resize(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto pa = [&](int dx, int dy) { return a.clamped(x + dx, y + dy); };
      auto pb = [&](int dx, int dy) { return b.clamped(x + dx, y + dy); };
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      d.ex[i] = 0.25 * (pa(1, 0) - pa(0, 0) + pa(1, 1) - pa(0, 1) + pb(1, 0) - pb(0, 0) + pb(1, 1) - pb(0, 1));
      d.ey[i] = 0.25 * (pa(0, 1) - pa(0, 0) + pa(1, 1) - pa(1, 0) + pb(0, 1) - pb(0, 0) + pb(1, 1) - pb(1, 0));
      d.et[i] = 0.25 * (pb(0, 0) - pa(0, 0) + pb(1, 0) - pa(1, 0) + pb(0, 1) - pa(0, 1) + pb(1, 1) - pa(1, 1));
    }
  }
  return d;
}

double hs_energy(const FlowField& f, const Derivatives& d, double alpha) {
  double data = 0.0;
  double smooth = 0.0;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
      const double r = d.ex[i] * f.u[i] + d.ey[i] * f.v[i] + d.et[i];
      data += r * r;
      for (const auto& nb : kHalfStencil) {
        const int nx = x + nb.dx;
        const int ny = y + nb.dy;
        if (nx < 0 || nx >= f.width || ny >= f.height) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * f.width + nx;
        const double du = f.u[i] - f.u[j];
        const double dv = f.v[i] - f.v[j];
        smooth += nb.w * (du * du + dv * dv);
      }
    }
  }
  return data + alpha * alpha * smooth;
}

}  // namespace

FlowField horn_schunck(const Image& frame_a, const Image& frame_b, const HornSchunckParams& params,
                       HornSchunckDiagnostics* diagnostics) {
  if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height()) {
    throw DimensionError("horn_schunck needs equally sized frames");
  }
  if (!(params.alpha > 0.0) || params.iters < 0) throw Error("invalid Horn-Schunck parameters");
  const Image a = frame_a.gray();
  const Image b = frame_b.gray();
  const int w = a.width();
  const int h = a.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const Derivatives d = derivatives(a, b);

  FlowField f{w, h, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> ubar(n), vbar(n), degree(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (const auto& nb : kStencil) {
        const int nx = x + nb.dx;
        const int ny = y + nb.dy;
        if (nx >= 0 && nx < w && ny >= 0 && ny < h) s += nb.w;
      }
      degree[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  const double a2 = params.alpha * params.alpha;
  HornSchunckDiagnostics diag;
  if (diagnostics) diag.energy.push_back(hs_energy(f, d, params.alpha));

  for (int it = 0; it < params.iters; ++it) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double su = 0.0;
        double sv = 0.0;
        for (const auto& nb : kStencil) {
          const int nx = x + nb.dx;
          const int ny = y + nb.dy;
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          su += nb.w * f.u[j];
          sv += nb.w * f.v[j];
        }
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        ubar[i] = su / degree[i];
        vbar[i] = sv / degree[i];
      }
    }
    double update = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (d.ex[i] * ubar[i] + d.ey[i] * vbar[i] + d.et[i]) /
                       (a2 * degree[i] + d.ex[i] * d.ex[i] + d.ey[i] * d.ey[i]);
      const double nu = ubar[i] - d.ex[i] * t;
      const double nv = vbar[i] - d.ey[i] * t;
      update += std::hypot(nu - f.u[i], nv - f.v[i]);
      f.u[i] = nu;
      f.v[i] = nv;
    }
    diag.iterations = it + 1;
    diag.last_mean_update = update / static_cast<double>(n);
    if (diagnostics && diag.iterations % 10 == 0) diag.energy.push_back(hs_energy(f, d, params.alpha));
    if (diag.last_mean_update < params.tol) break;
  }
  if (diagnostics) *diagnostics = std::move(diag);
  return f;
}

GridMap flow_magnitude_map(const FlowField& flow, int k) {
  Image mag(flow.width, flow.height, 1);
  for (std::size_t i = 0; i < flow.u.size(); ++i) mag.data()[i] = std::hypot(flow.u[i], flow.v[i]);
  return block_average(mag, k).normalize_max();
}

namespace {

Image gaussian_blur(const Image& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[static_cast<std::size_t>(i + r)];
  }
  for (double& t : taps) t /= total;
  Image tmp(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += taps[static_cast<std::size_t>(i + r)] * img.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += taps[static_cast<std::size_t>(i + r)] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft2d {
 public:
  explicit Fft2d(int n) : n_(n) {
    buf_ = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan forward_;
  fftw_plan backward_;
};

constexpr int kSrResolution = 64;
constexpr double kSrBlurSigma = 2.5;

}  // namespace

GridMap spectral_residual(const Image& frame, int k) {
  if (frame.width() < 32 || frame.height() < 32) {
    throw DimensionError("spectral_residual needs frames of at least 32x32");
  }
  const int n = kSrResolution;
  const Image small = resize(frame.gray(), n, n);
  double mean = 0.0;
  for (double v : small.data()) mean += v;
  mean /= static_cast<double>(small.data().size());
  double var = 0.0;
  for (double v : small.data()) var += (v - mean) * (v - mean);
  if (var <= 1e-20 * std::max(1.0, mean * mean) * static_cast<double>(small.data().size())) {
    return GridMap(k, 1.0);
  }

  Fft2d fft(n);
  auto* c = fft.data();
  const std::size_t total = static_cast<std::size_t>(n) * n;
  for (std::size_t i = 0; i < total; ++i) c[i] = small.data()[i];
  fft.forward();

  std::vector<double> log_amp(total), phase(total);
  double max_amp = 0.0;
  for (std::size_t i = 0; i < total; ++i) max_amp = std::max(max_amp, std::abs(c[i]));
  // Floor relative to the peak so that a global brightness scale is a pure
  // additive shift of the log spectrum.
  const double floor_amp = 1e-12 * max_amp;
  for (std::size_t i = 0; i < total; ++i) {
    log_amp[i] = std::log(std::abs(c[i]) + floor_amp);
    phase[i] = std::arg(c[i]);
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double box = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          box += log_amp[static_cast<std::size_t>(((y + dy + n) % n) * n + (x + dx + n) % n)];
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * n + x;
      c[i] = std::polar(std::exp(log_amp[i] - box / 9.0), phase[i]);
    }
  }
  fft.backward();
  Image sal(n, n, 1);
  for (std::size_t i = 0; i < total; ++i) sal.data()[i] = std::norm(c[i]);
  return block_average(gaussian_blur(sal, kSrBlurSigma), k).normalize_max();
}

namespace {

constexpr int kPyramidLevels = 6;  // base plus five reductions
constexpr std::array<std::pair<int, int>, 3> kCenterSurround = {{{2, 4}, {2, 5}, {3, 5}}};

Image reduce(const Image& img) {
  static constexpr double taps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = std::max(1, img.width() / 2);
  const int h = std::max(1, img.height() / 2);
  Image tmp(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += taps[i + 2] * img.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += taps[i + 2] * tmp.clamped(2 * x, 2 * y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

// N(M) = M * (max - mean)^2
void peak_normalize(Image& m) {
  double mx = 0.0;
  double mean = 0.0;
  for (double v : m.data()) {
    mx = std::max(mx, v);
    mean += v;
  }
  mean /= static_cast<double>(m.data().size());
  const double s = (mx - mean) * (mx - mean);
  for (double& v : m.data()) v *= s;
}

void add_center_surround(const Image& channel, Image& acc) {
  std::vector<Image> pyr;
  pyr.reserve(kPyramidLevels);
  pyr.push_back(channel);
  for (int l = 1; l < kPyramidLevels; ++l) pyr.push_back(reduce(pyr.back()));
  for (const auto& [c, s] : kCenterSurround) {
    const Image& center = pyr[static_cast<std::size_t>(c)];
    const Image surround =
        resize_bilinear(pyr[static_cast<std::size_t>(s)], center.width(), center.height());
    Image diff(center.width(), center.height(), 1);
    for (std::size_t i = 0; i < diff.data().size(); ++i) {
      diff.data()[i] = std::abs(center.data()[i] - surround.data()[i]);
    }
    peak_normalize(diff);
    const Image up = resize_bilinear(diff, acc.width(), acc.height());
    for (std::size_t i = 0; i < acc.data().size(); ++i) acc.data()[i] += up.data()[i];
  }
}

}  // namespace

GridMap itti_lite(const Image& frame, int k) {
  if (frame.width() < 64 || frame.height() < 64) {
    throw DimensionError("itti_lite needs frames of at least 64x64");
  }
  Image acc(frame.width(), frame.height(), 1);
  add_center_surround(frame.gray(), acc);
  if (frame.channels() == 3) {
    Image rg(frame.width(), frame.height(), 1);
    Image by(frame.width(), frame.height(), 1);
    for (int y = 0; y < frame.height(); ++y) {
      for (int x = 0; x < frame.width(); ++x) {
        const double r = frame.at(x, y, 0);
        const double g = frame.at(x, y, 1);
        const double b = frame.at(x, y, 2);
        rg.at(x, y) = r - g;
        by.at(x, y) = b - 0.5 * (r + g);
      }
    }
    add_center_surround(rg, acc);
    add_center_surround(by, acc);
  }
  return block_average(acc, k).normalize_max();
}

Eigen::MatrixXd gbvs_transition(const GridMap& activation, double sigma) {
  const int k = activation.k();
  const Eigen::Index n = static_cast<Eigen::Index>(activation.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int ar = static_cast<int>(a) / k;
    const int ac = static_cast<int>(a) % k;
    for (Eigen::Index b = 0; b < n; ++b) {
      const int br = static_cast<int>(b) / k;
      const int bc = static_cast<int>(b) % k;
      const double d2 = (ar - br) * (ar - br) + (ac - bc) * (ac - bc);
      p(a, b) = std::abs(activation[static_cast<std::size_t>(a)] - activation[static_cast<std::size_t>(b)]) *
                std::exp(-d2 / (2.0 * sigma * sigma));
    }
    const double s = p.row(a).sum();
    if (s > 0.0) p.row(a) /= s;
  }
  return p;
}

GbvsResult gbvs_stationary(const GridMap& activation, const GbvsOptions& options) {
  const int k = activation.k();
  const Eigen::MatrixXd p = gbvs_transition(activation, options.sigma_frac * k);
  const Eigen::Index n = p.rows();
  GbvsResult result;
  if ((p.rowwise().sum().array() == 0.0).any()) {
    // Some cell has no outgoing edge, which only happens for a flat map.
    result.distribution = GridMap(k, 1.0 / static_cast<double>(n));
    result.degenerate = true;
    return result;
  }
  Eigen::RowVectorXd pi(n);
  if (options.start) {
    if (static_cast<Eigen::Index>(options.start->size()) != n) {
      throw DimensionError("gbvs start vector has wrong length");
    }
    for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::abs((*options.start)[static_cast<std::size_t>(i)]);
    if (pi.sum() <= 0.0) throw Error("gbvs start vector must have positive mass");
    pi /= pi.sum();
  } else {
    pi.setConstant(1.0 / static_cast<double>(n));
  }
  // The lazy chain (I + P) / 2 shares P's stationary distribution and is
  // aperiodic, so bipartite activation graphs still converge.
  Eigen::RowVectorXd next;
  for (int it = 0; it < options.max_iters; ++it) {
    next = pi * p;
    result.residual = (next - pi).lpNorm<1>();
    result.iterations = it;
    if (result.residual < options.tol) break;
    pi = 0.5 * (pi + next);
    pi /= pi.sum();
    result.iterations = it + 1;
  }
  if (result.residual >= options.tol) {
    throw ConvergenceError("gbvs power iteration did not converge", result.residual);
  }
  result.distribution = GridMap(k, std::vector<double>(pi.data(), pi.data() + n));
  return result;
}

GbvsResult gbvs_lite(const Image& frame, int k, const GbvsOptions& options) {
  if (frame.width() < 64 || frame.height() < 64) {
    throw DimensionError("gbvs_lite needs frames of at least 64x64");
  }
  return gbvs_stationary(block_average(frame.gray(), k), options);
}

int cue_offset(std::string_view name, int k) {
  for (std::size_t i = 0; i < kCueOrder.size(); ++i) {
    if (kCueOrder[i] == name) return static_cast<int>(i) * k * k;
  }
  throw Error("unknown cue '" + std::string(name) + "'");
}

const GridMap& CueStack::map(std::size_t frame, std::string_view cue) const {
  return frames.at(frame)[static_cast<std::size_t>(cue_offset(cue, k) / (k * k))];
}

std::vector<GridMap> CueStack::stream(std::string_view cue) const {
  std::vector<GridMap> out;
  out.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) out.push_back(map(t, cue));
  return out;
}

FeatureMatrix CueStack::features() const {
  FeatureMatrix out;
  out.provenance = Provenance::cue_stack;
  const Eigen::Index kk = static_cast<Eigen::Index>(k) * k;
  out.data.resize(static_cast<Eigen::Index>(frames.size()), kk * static_cast<Eigen::Index>(kCueOrder.size()));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t c = 0; c < kCueOrder.size(); ++c) {
      out.data.block(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c) * kk, 1, kk) =
          linearize(frames[t][c]);
    }
  }
  return out;
}

CueStack build_cue_stack(const std::vector<Image>& frames, int k, const CueStackOptions& options) {
  if (frames.size() < 2) throw Error("cue stack needs at least two frames");
  CueStack stack;
  stack.k = k;
  stack.frames.resize(frames.size());
  const int res = options.flow_resolution;
  parallel_for(frames.size(), options.jobs, [&](std::size_t t) {
    auto& out = stack.frames[t];
    const char* cue = "itti";
    try {
      out[0] = itti_lite(frames[t], k);
      cue = "gbvs";
      out[1] = gbvs_lite(frames[t], k).distribution.normalize_max();
      cue = "sr";
      out[2] = spectral_residual(frames[t], k);
      cue = "of";
      if (t == 0) {
        out[3] = GridMap(k);
      } else {
        const Image a = resize(frames[t - 1].gray(), res, res);
        const Image b = resize(frames[t].gray(), res, res);
        out[3] = flow_magnitude_map(horn_schunck(a, b, options.flow), k);
      }
    } catch (const Error& e) {
      throw Error(std::string("cue '") + cue + "' failed on frame " + std::to_string(t) + ": " + e.what());
    }
  });
  return stack;
}

}  // namespace egogaze::bottomup
