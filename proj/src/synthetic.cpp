#include "egogaze/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egogaze/seed.hpp"

namespace egogaze::synthetic {

GazePath gaze_path(const TaskSpec& task, int frames, std::mt19937_64& rng, double lo) {
  if (frames < 1) throw Error("gaze path needs at least one frame");
  std::normal_distribution<double> n01(0.0, 1.0);
  const double innovation = task.spread * std::sqrt(1.0 - task.rho * task.rho);
  GazePath p;
  double dx = task.spread * n01(rng);
  double dy = task.spread * n01(rng);
  for (int t = 0; t < frames; ++t) {
    if (t > 0) {
      dx = task.rho * dx + innovation * n01(rng);
      dy = task.rho * dy + innovation * n01(rng);
    }
    p.x.push_back(std::clamp(task.center_x + dx, lo, 1.0 - lo));
    p.y.push_back(std::clamp(task.center_y + dy, lo, 1.0 - lo));
  }
  return p;
}

FixationTrace trace_from_path(const GazePath& path, const std::string& sequence_id, const std::string& subject_id,
                              double noise, std::mt19937_64& rng, double invalid_frac) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  FixationTrace tr;
  tr.sequence_id = sequence_id;
  tr.subject_id = subject_id;
  for (std::size_t t = 0; t < path.size(); ++t) {
    FixationRecord r;
    r.frame = static_cast<int>(t);
    r.x = std::clamp(path.x[t] + noise * n01(rng), 0.0, 1.0);
    r.y = std::clamp(path.y[t] + noise * n01(rng), 0.0, 1.0);
    r.valid = u01(rng) >= invalid_frac;
    tr.records.push_back(r);
  }
  return tr;
}

FeatureMatrix encode_features(const GazePath& path, const Eigen::MatrixXd& projection, double noise,
                              std::mt19937_64& rng) {
  constexpr int dim = kRbfSide * kRbfSide;
  if (projection.rows() != dim || projection.cols() != dim) throw DimensionError("projection must be square rbf-sized");
  const double bw = 1.0 / kRbfSide;
  std::normal_distribution<double> n01(0.0, 1.0);
  FeatureMatrix f;
  f.data.resize(static_cast<Eigen::Index>(path.size()), dim + 1);
  for (std::size_t t = 0; t < path.size(); ++t) {
    Eigen::VectorXd rbf(dim);
    for (int i = 0; i < kRbfSide; ++i) {
      for (int j = 0; j < kRbfSide; ++j) {
        const double cx = (j + 0.5) / kRbfSide;
        const double cy = (i + 0.5) / kRbfSide;
        const double d2 = (path.x[t] - cx) * (path.x[t] - cx) + (path.y[t] - cy) * (path.y[t] - cy);
        rbf(i * kRbfSide + j) = std::exp(-d2 / (2.0 * bw * bw));
      }
    }
    Eigen::VectorXd e = projection * rbf;
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) += noise * n01(rng);
    const auto r = static_cast<Eigen::Index>(t);
    f.data(r, 0) = 1.0;
    f.data.row(r).tail(dim) = e.transpose();
  }
  return f;
}

Eigen::MatrixXd random_projection(std::uint64_t seed) {
  constexpr int dim = kRbfSide * kRbfSide;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  Eigen::MatrixXd p(dim, dim);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n01(rng);
  return p;
}

std::vector<GridMap> noisy_oracle_maps(const GazePath& path, double error_cells, int k, const GaussianKernel& kernel,
                                       std::mt19937_64& rng, double lo) {
  std::normal_distribution<double> n01(0.0, error_cells / k);
  std::vector<GridMap> maps;
  maps.reserve(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const double x = std::clamp(path.x[t] + n01(rng), lo, 1.0 - lo);
    const double y = std::clamp(path.y[t] + n01(rng), lo, 1.0 - lo);
    maps.push_back(smooth_map(rasterize_fixation(x, y, k), kernel));
  }
  return maps;
}

std::vector<TaskSpec> distinct_tasks() {
  return {
      {"task_a", 0.3, 0.35, 0.08, 0.9, 4.0},
      {"task_b", 0.3, 0.35, 0.08, 0.9, 0.3},
      {"task_c", 0.7, 0.35, 0.08, 0.9, 0.3},
      {"task_d", 0.7, 0.35, 0.08, 0.9, 4.0},
      {"task_e", 0.5, 0.70, 0.08, 0.9, 1.5},
  };
}

std::vector<TaskSpec> equal_predictability_tasks() {
  return {
      {"task_a", 0.3, 0.3, 0.06, 0.9, 1.5},
      {"task_b", 0.7, 0.3, 0.06, 0.9, 1.5},
      {"task_c", 0.5, 0.5, 0.06, 0.9, 1.5},
      {"task_d", 0.3, 0.7, 0.06, 0.9, 1.5},
      {"task_e", 0.7, 0.7, 0.06, 0.9, 1.5},
  };
}

std::vector<experiments::Sequence> task_suite(const std::vector<TaskSpec>& tasks, int frames, int subjects,
                                              double subject_noise, std::uint64_t seed) {
  std::vector<experiments::Sequence> out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::mt19937_64 rng(mix_seed(seed, {i, 1}));
    const GazePath path = gaze_path(tasks[i], frames, rng);
    experiments::Sequence s;
    s.id = tasks[i].id;
    s.features = encode_features(path, random_projection(mix_seed(seed, {i, 2})), 0.05, rng);
    for (int j = 0; j < subjects; ++j) {
      s.traces.push_back(trace_from_path(path, s.id, "subject_" + std::to_string(j), subject_noise, rng));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<experiments::ActivitySequence> activity_suite(const std::vector<TaskSpec>& tasks, int frames, int k,
                                                          std::uint64_t seed) {
  constexpr double interior = 0.125;
  const GaussianKernel kernel;
  std::vector<experiments::ActivitySequence> out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::mt19937_64 rng(mix_seed(seed, {i, 3}));
    const GazePath path = gaze_path(tasks[i], frames, rng, interior);
    experiments::ActivitySequence s;
    s.id = tasks[i].id;
    s.trace = trace_from_path(path, s.id, "subject_0", 0.0, rng);
    s.maps = noisy_oracle_maps(path, tasks[i].prediction_error, k, kernel, rng, interior);
    out.push_back(std::move(s));
  }
  return out;
}

LearnableTask learnable_task(int frames, int k, std::uint64_t mapping_seed, std::uint64_t sequence_seed, int classes,
                             int segment, double scale) {
  if (classes < 2 || classes > k * k || segment < 1 || frames < 1) throw Error("invalid learnable task parameters");
  std::vector<int> pool(static_cast<std::size_t>(k) * k);
  std::iota(pool.begin(), pool.end(), 0);
  std::mt19937_64 map_rng(mapping_seed);
  std::shuffle(pool.begin(), pool.end(), map_rng);

  std::mt19937_64 rng(sequence_seed);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  LearnableTask task;
  task.features.data = Eigen::MatrixXd::Zero(frames, classes);
  task.trace.sequence_id = "learnable";
  task.trace.subject_id = "oracle";
  int c = 0;
  for (int t = 0; t < frames; ++t) {
    if (t % segment == 0) c = pick(rng);
    const int cell = pool[static_cast<std::size_t>(c)];
    task.features.data(t, c) = scale;
    task.cells.push_back(cell);
    task.trace.records.push_back({t, ((cell % k) + 0.5) / k, ((cell / k) + 0.5) / k, true});
  }
  return task;
}

Image render_frame(double x, double y, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Image img(size, size, 1);
  const double cx = x * size;
  const double cy = y * size;
  const double r = size / 16.0;
  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      const double bg = 40.0 + 20.0 * std::sin(px * 0.3) * std::cos(py * 0.25) + 20.0 * u01(rng);
      const double d2 = (px + 0.5 - cx) * (px + 0.5 - cx) + (py + 0.5 - cy) * (py + 0.5 - cy);
      img.at(px, py) = std::min(255.0, bg + 190.0 * std::exp(-d2 / (2.0 * r * r)));
    }
  }
  return img;
}

}  // namespace egogaze::synthetic
