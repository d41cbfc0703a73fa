#include "egogaze/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "egogaze/baselines.hpp"
#include "egogaze/metrics.hpp"
#include "egogaze/parallel.hpp"
#include "egogaze/regression.hpp"
#include "egogaze/seed.hpp"

namespace egogaze::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void mean_std(const std::vector<double>& v, double* mean, double* stddev) {
  *mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - *mean) * (x - *mean);
  *stddev = std::sqrt(ss / static_cast<double>(v.size()));
}

AblationPoint summarize(int budget, const std::vector<Score>& scores) {
  AblationPoint p;
  p.budget = budget;
  p.runs = static_cast<int>(scores.size());
  std::vector<double> nss, auc;
  for (const auto& s : scores) {
    nss.push_back(s.nss);
    auc.push_back(s.auc);
  }
  mean_std(nss, &p.nss_mean, &p.nss_std);
  mean_std(auc, &p.auc_mean, &p.auc_std);
  return p;
}

}  // namespace

Score mean_score(const std::vector<GridMap>& maps, const std::vector<FixationTrace>& traces) {
  if (traces.empty()) throw Error("no traces to score");
  Score s;
  for (const auto& t : traces) {
    const auto r = metrics::score_sequence(maps, t);
    s.nss += r.nss_mean;
    s.auc += r.auc_mean;
  }
  s.nss /= static_cast<double>(traces.size());
  s.auc /= static_cast<double>(traces.size());
  return s;
}

TrainFn regression_trainer(int k, const GaussianKernel& kernel, double ridge, double cutoff) {
  return [=](const FeatureMatrix& features, const std::vector<FixationTrace>& traces) -> Predictor {
    if (traces.empty()) throw Error("regression trainer needs at least one trace");
    std::vector<TargetMatrix> targets;
    Eigen::Index total = 0;
    for (const auto& t : traces) {
      targets.push_back(build_targets(t, k, kernel));
      if (targets.back().rows() != features.rows()) {
        throw DimensionError("trace '" + t.subject_id + "' does not cover every feature row");
      }
      total += static_cast<Eigen::Index>(t.valid_count());
    }
    Eigen::MatrixXd m(total, features.cols());
    Eigen::MatrixXd x(total, static_cast<Eigen::Index>(k) * k);
    Eigen::Index r = 0;
    for (const auto& tm : targets) {
      for (Eigen::Index t = 0; t < tm.rows(); ++t) {
        if (!tm.valid[static_cast<std::size_t>(t)]) continue;
        m.row(r) = features.data.row(t);
        x.row(r) = tm.data.row(t);
        ++r;
      }
    }
    auto model = std::make_shared<regression::LinearGazeModel>(regression::fit(m, x, k, ridge, cutoff));
    return [model](const FeatureMatrix& f) { return regression::predict(*model, f); };
  };
}

TrainFn afm_trainer(int k, const GaussianKernel& kernel) {
  return [=](const FeatureMatrix&, const std::vector<FixationTrace>& traces) -> Predictor {
    auto model = std::make_shared<baselines::AfmModel>(baselines::fit_afm(traces, k, kernel));
    return [model](const FeatureMatrix& f) { return model->predict(static_cast<std::size_t>(f.rows())); };
  };
}

double ConfusionMatrix::diagonal_mean_auc() const {
  double s = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < auc.rows(); ++i) {
    if (std::isnan(auc(i, i))) continue;
    s += auc(i, i);
    ++n;
  }
  return n ? s / n : kNaN;
}

double ConfusionMatrix::off_diagonal_mean_auc() const {
  double s = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < auc.rows(); ++i) {
    for (Eigen::Index j = 0; j < auc.cols(); ++j) {
      if (i == j || std::isnan(auc(i, j))) continue;
      s += auc(i, j);
      ++n;
    }
  }
  return n ? s / n : kNaN;
}

ConfusionMatrix transfer_matrix(const std::vector<Sequence>& sequences, const TrainFn& train, const EvalFn& eval,
                                int jobs) {
  if (sequences.size() < 2) throw Error("transfer matrix needs at least two sequences");
  const auto n = static_cast<Eigen::Index>(sequences.size());
  ConfusionMatrix cm;
  for (const auto& s : sequences) {
    cm.train_ids.push_back(s.id);
    cm.test_ids.push_back(s.id);
  }
  cm.nss = Eigen::MatrixXd::Constant(n, n, kNaN);
  cm.auc = Eigen::MatrixXd::Constant(n, n, kNaN);
  cm.missing.assign(sequences.size(), std::vector<bool>(sequences.size(), true));
  std::vector<std::string> row_error(sequences.size());

  parallel_for(sequences.size(), jobs, [&](std::size_t i) {
    Predictor predict;
    try {
      predict = train(sequences[i].features, sequences[i].traces);
    } catch (const std::exception& e) {
      row_error[i] = "train on '" + sequences[i].id + "': " + e.what();
      return;
    }
    for (std::size_t j = 0; j < sequences.size(); ++j) {
      try {
        const Score s = eval(predict(sequences[j].features), sequences[j].traces);
        cm.nss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.nss;
        cm.auc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.auc;
        cm.missing[i][j] = false;
      } catch (const std::exception& e) {
        if (row_error[i].empty()) row_error[i] = "evaluate '" + sequences[i].id + "' on '" + sequences[j].id + "': " + e.what();
      }
    }
  });
  for (auto& e : row_error) {
    if (!e.empty()) cm.errors.push_back(std::move(e));
  }
  return cm;
}

std::vector<std::vector<int>> combinations(int n, int i) {
  std::vector<std::vector<int>> out;
  if (i < 0 || i > n) return out;
  std::vector<int> c(static_cast<std::size_t>(i));
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.push_back(c);
    int p = i - 1;
    while (p >= 0 && c[static_cast<std::size_t>(p)] == n - i + p) --p;
    if (p < 0) break;
    ++c[static_cast<std::size_t>(p)];
    for (int q = p + 1; q < i; ++q) c[static_cast<std::size_t>(q)] = c[static_cast<std::size_t>(q - 1)] + 1;
  }
  return out;
}

std::vector<AblationPoint> subject_ablation(const Sequence& sequence, const TrainFn& train, const EvalFn& eval,
                                            int jobs) {
  const int subjects = static_cast<int>(sequence.traces.size());
  if (subjects < 2) throw Error("subject ablation needs at least two subjects");
  std::vector<AblationPoint> curve;
  for (int i = 1; i < subjects; ++i) {
    const auto combos = combinations(subjects, i);
    std::vector<Score> scores(combos.size());
    parallel_for(combos.size(), jobs, [&](std::size_t c) {
      std::vector<FixationTrace> fit_traces, test_traces;
      std::vector<bool> chosen(static_cast<std::size_t>(subjects), false);
      for (int s : combos[c]) chosen[static_cast<std::size_t>(s)] = true;
      for (int s = 0; s < subjects; ++s) {
        (chosen[static_cast<std::size_t>(s)] ? fit_traces : test_traces).push_back(sequence.traces[static_cast<std::size_t>(s)]);
      }
      scores[c] = eval(train(sequence.features, fit_traces)(sequence.features), test_traces);
    });
    curve.push_back(summarize(i, scores));
  }
  return curve;
}

std::vector<AblationPoint> frame_ablation(const Sequence& train_sequence, const Sequence& test, const TrainFn& train,
                                          int step, int runs, std::uint64_t seed, const EvalFn& eval, int jobs) {
  const int n = static_cast<int>(train_sequence.features.rows());
  if (step < 1 || runs < 1) throw Error("frame ablation needs step >= 1 and runs >= 1");
  if (n < step) throw Error("sequence has " + std::to_string(n) + " frames, fewer than the step " + std::to_string(step));
  std::vector<int> budgets;
  for (int b = step; b < n; b += step) budgets.push_back(b);
  budgets.push_back(n);

  struct Job {
    std::size_t budget_index;
    int run;
  };
  std::vector<Job> job_list;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (int r = 0; r < runs; ++r) job_list.push_back({b, r});
  }
  std::vector<Score> scores(job_list.size());
  parallel_for(job_list.size(), jobs, [&](std::size_t j) {
    const int budget = budgets[job_list[j].budget_index];
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> rows;
    if (budget == n) {
      rows = all;
    } else {
      std::mt19937_64 rng(mix_seed(seed, {static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(job_list[j].run)}));
      std::sample(all.begin(), all.end(), std::back_inserter(rows), budget, rng);
    }
    const FeatureMatrix f = train_sequence.features.select_rows(rows);
    std::vector<FixationTrace> traces;
    for (const auto& t : train_sequence.traces) traces.push_back(select_records(t, rows));
    scores[j] = eval(train(f, traces)(test.features), test.traces);
  });
  std::vector<AblationPoint> curve;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    std::vector<Score> s(scores.begin() + static_cast<std::ptrdiff_t>(b * runs),
                         scores.begin() + static_cast<std::ptrdiff_t>((b + 1) * runs));
    curve.push_back(summarize(budgets[b], s));
  }
  return curve;
}

const char* to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::avg_map: return "avg_map";
    case WindowKind::nss_vector: return "nss_vector";
    case WindowKind::augmented: return "augmented";
  }
  return "avg_map";
}

Eigen::MatrixXd WindowSet::features(WindowKind kind) const {
  switch (kind) {
    case WindowKind::avg_map: return avg_map;
    case WindowKind::nss_vector: return nss_vector;
    case WindowKind::augmented: {
      Eigen::MatrixXd out(avg_map.rows(), avg_map.cols() + nss_vector.cols());
      out << avg_map, nss_vector;
      return out;
    }
  }
  return avg_map;
}

WindowSet window_features(const std::vector<GridMap>& maps, const FixationTrace& trace, int w, int count,
                          std::uint64_t seed, int label, int begin, int end) {
  if (maps.size() != trace.size()) throw DimensionError("one map per trace record required");
  if (maps.empty()) throw Error("window features need at least one frame");
  if (end < 0) end = static_cast<int>(maps.size());
  if (w < 1 || count < 1) throw Error("window size and count must be positive");
  if (begin < 0 || end > static_cast<int>(maps.size()) || end - begin < w) {
    throw Error("frame range [" + std::to_string(begin) + ", " + std::to_string(end) + ") is shorter than window " +
                std::to_string(w));
  }
  const int k = maps.front().k();
  std::vector<double> frame_nss(maps.size(), 0.0);
  for (int t = begin; t < end; ++t) {
    const auto& r = trace.records[static_cast<std::size_t>(t)];
    if (r.valid) frame_nss[static_cast<std::size_t>(t)] = metrics::nss(maps[static_cast<std::size_t>(t)], fixation_cell(r.x, r.y, k));
  }
  WindowSet ws;
  ws.window = w;
  ws.label = label;
  ws.avg_map.resize(count, static_cast<Eigen::Index>(k) * k);
  ws.nss_vector.resize(count, w);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(begin, end - w);
  for (int i = 0; i < count; ++i) {
    const int s = pick(rng);
    ws.starts.push_back(s);
    Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(k) * k);
    for (int t = s; t < s + w; ++t) {
      avg += linearize(maps[static_cast<std::size_t>(t)]);
      ws.nss_vector(i, t - s) = frame_nss[static_cast<std::size_t>(t)];
    }
    ws.avg_map.row(i) = avg / static_cast<double>(w);
  }
  return ws;
}

ActivityCurves activity_curves(const std::vector<ActivitySequence>& sequences, const ActivityConfig& config,
                               int jobs) {
  if (sequences.size() < 2) throw Error("activity decoding needs at least two sequences");
  if (config.window_sizes.empty()) throw Error("no window sizes given");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) throw Error("train fraction must be in (0,1)");
  ActivityCurves out;
  out.window_sizes = config.window_sizes;
  out.classes = static_cast<int>(sequences.size());
  out.chance = 1.0 / out.classes;
  for (auto& a : out.accuracy) a.assign(config.window_sizes.size(), 0.0);

  parallel_for(config.window_sizes.size(), jobs, [&](std::size_t wi) {
    const int w = config.window_sizes[wi];
    std::vector<WindowSet> train_sets, test_sets;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      const int n = static_cast<int>(sequences[s].maps.size());
      const int split = static_cast<int>(std::floor(config.train_fraction * n));
      const auto base = static_cast<std::uint64_t>(s) * 1000 + static_cast<std::uint64_t>(w);
      train_sets.push_back(window_features(sequences[s].maps, sequences[s].trace, w, config.windows,
                                           mix_seed(config.seed, {base, 0}), static_cast<int>(s), 0, split));
      test_sets.push_back(window_features(sequences[s].maps, sequences[s].trace, w, config.windows,
                                          mix_seed(config.seed, {base, 1}), static_cast<int>(s), split, n));
    }
    for (std::size_t kind = 0; kind < 3; ++kind) {
      auto gather = [&](const std::vector<WindowSet>& sets, std::vector<int>* labels) {
        Eigen::Index rows = 0;
        for (const auto& ws : sets) rows += static_cast<Eigen::Index>(ws.starts.size());
        const Eigen::Index cols = sets.front().features(kWindowKinds[kind]).cols();
        Eigen::MatrixXd x(rows, cols);
        Eigen::Index r = 0;
        for (const auto& ws : sets) {
          const Eigen::MatrixXd f = ws.features(kWindowKinds[kind]);
          x.middleRows(r, f.rows()) = f;
          r += f.rows();
          labels->insert(labels->end(), ws.starts.size(), ws.label);
        }
        return x;
      };
      std::vector<int> train_labels, test_labels;
      const Eigen::MatrixXd x_train = gather(train_sets, &train_labels);
      const Eigen::MatrixXd x_test = gather(test_sets, &test_labels);
      svm::SvmConfig sc = config.svm;
      sc.seed = mix_seed(config.seed, {static_cast<std::uint64_t>(w), kind, 2});
      const auto model = svm::train_svm(x_train, train_labels, sc);
      out.accuracy[kind][wi] = svm::accuracy(model, x_test, test_labels);
    }
  });
  return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman needs two equal-length series of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t q = i; q <= j; ++q) r[idx[q]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace egogaze::experiments
