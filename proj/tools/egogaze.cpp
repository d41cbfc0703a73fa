#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "egogaze/baselines.hpp"
#include "egogaze/bottomup.hpp"
#include "egogaze/cues.hpp"
#include "egogaze/experiments.hpp"
#include "egogaze/image.hpp"
#include "egogaze/io.hpp"
#include "egogaze/metrics.hpp"
#include "egogaze/recurrent.hpp"
#include "egogaze/regression.hpp"
#include "egogaze/report.hpp"
#include "egogaze/seed.hpp"
#include "egogaze/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace egogaze;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int jobs = 1;
  int k = kDefaultGrid;
  int kernel_width = 5;
  double kernel_sigma = 1.0;
  std::string out = "egogaze_out";

  GaussianKernel kernel() const { return GaussianKernel(kernel_width, kernel_sigma); }
};

// Every named option of `app` with its effective value (flag, config or default).
void collect_options(const CLI::App* app, json& j) {
  for (const CLI::Option* o : app->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string& name = o->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto& res = o->results();
    if (res.empty()) {
      j[name] = o->get_default_str();
    } else if (res.size() == 1) {
      j[name] = res.front();
    } else {
      j[name] = res;
    }
  }
}

json run_config(const CLI::App& app, const CLI::App* sub) {
  json j = json::object();
  collect_options(&app, j);
  collect_options(sub, j);
  return j;
}

void finish(const Globals& g, const CLI::App& app, const CLI::App* sub) {
  fs::create_directories(g.out);
  report::write_manifest(fs::path(g.out) / "manifest.json", report::run_manifest(sub->get_name(), run_config(app, sub), g.seed));
}

void print_table(const report::Table& t) {
  std::printf("%s\n%-16s", t.title.c_str(), t.label_header.c_str());
  for (const auto& c : t.columns) std::printf(" %12s", c.c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
    std::printf("%-16s", t.row_labels[i].c_str());
    for (double v : t.values[i]) std::printf(" %12.4f", v);
    std::printf("\n");
  }
}

std::vector<Image> load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("frame directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .pgm/.ppm frames in " + dir.string());
  std::vector<Image> frames;
  for (const auto& f : files) frames.push_back(Image::from_raw(io::read_pnm(f)));
  return frames;
}

FixationTrace load_trace(const std::string& path) {
  std::vector<std::string> warnings;
  auto trace = io::load_fixation_log(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return trace;
}

// --- dataset manifest -------------------------------------------------------
//
// {
//   "k": 20,
//   "sequences": [
//     {"id": "task_a", "features": "a.f32", "fixations": ["a_s1.csv", "a_s2.csv"], "maps": "maps/a"}
//   ]
// }
// Paths are relative to the manifest. "maps" is only needed by `activity`.

struct Dataset {
  std::vector<experiments::Sequence> sequences;
  std::vector<experiments::ActivitySequence> activity;
};

Dataset load_dataset(const fs::path& path, bool need_features, bool need_maps) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("dataset manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  Dataset d;
  for (const auto& s : j.at("sequences")) {
    experiments::Sequence seq;
    seq.id = s.at("id").get<std::string>();
    for (const auto& f : s.at("fixations")) {
      auto trace = load_trace((base / f.get<std::string>()).string());
      trace.sequence_id = seq.id;
      seq.traces.push_back(std::move(trace));
    }
    if (seq.traces.empty()) throw Error("sequence " + seq.id + " has no fixation logs");
    if (need_features) seq.features = io::load_feature_matrix(base / s.at("features").get<std::string>());
    if (need_maps) {
      experiments::ActivitySequence a;
      a.id = seq.id;
      a.trace = seq.traces.front();
      a.maps = io::load_map_sequence(base / s.at("maps").get<std::string>());
      d.activity.push_back(std::move(a));
    }
    d.sequences.push_back(std::move(seq));
  }
  return d;
}

experiments::Sequence slice(const experiments::Sequence& s, int begin, int end) {
  std::vector<int> rows(static_cast<std::size_t>(end - begin));
  std::iota(rows.begin(), rows.end(), begin);
  experiments::Sequence out;
  out.id = s.id;
  out.features = s.features.select_rows(rows);
  for (const auto& t : s.traces) out.traces.push_back(select_records(t, rows));
  return out;
}

experiments::TrainFn make_trainer(const std::string& name, const Globals& g, double ridge) {
  if (name == "regression") return experiments::regression_trainer(g.k, g.kernel(), ridge);
  if (name == "afm") return experiments::afm_trainer(g.k, g.kernel());
  throw Error("unknown trainer '" + name + "' (regression, afm)");
}

report::Table ablation_table(const std::string& title, const std::string& axis,
                             const std::vector<experiments::AblationPoint>& curve) {
  report::Table t{title, axis, {"nss_mean", "nss_std", "auc_mean", "auc_std", "runs"}, {}, {}};
  for (const auto& p : curve) {
    t.add_row(std::to_string(p.budget), {p.nss_mean, p.nss_std, p.auc_mean, p.auc_std, static_cast<double>(p.runs)});
  }
  return t;
}

report::Table score_table(const std::string& title, const std::vector<std::string>& names,
                          const std::vector<metrics::ScoreReport>& reports) {
  report::Table t{title, "model", {"nss", "auc"}, {}, {}};
  for (std::size_t i = 0; i < names.size(); ++i) t.add_row(names[i], {reports[i].nss_mean, reports[i].auc_mean});
  return t;
}

// --- commands -----------------------------------------------------------------

struct BaselinesArgs {
  std::string fix;
  std::vector<std::string> train;
};

int cmd_baselines(const Globals& g, const BaselinesArgs& a) {
  const auto trace = load_trace(a.fix);
  const auto kernel = g.kernel();
  fs::create_directories(g.out);
  std::vector<std::string> names{"central"};
  std::vector<metrics::ScoreReport> reports;
  const GridMap central = baselines::central_gaussian(g.k);
  io::save_map(fs::path(g.out) / "central.map", central);
  reports.push_back(metrics::score_static(central, trace));
  if (!a.train.empty()) {
    std::vector<FixationTrace> train;
    for (const auto& p : a.train) train.push_back(load_trace(p));
    const auto afm = baselines::fit_afm(train, g.k, kernel);
    io::save_map(fs::path(g.out) / "afm.map", afm.predict());
    names.push_back("afm");
    reports.push_back(metrics::score_static(afm.predict(), trace));
  }
  names.push_back("fom");
  reports.push_back(metrics::score_sequence(baselines::fom(trace, g.k, kernel), trace));
  const auto t = score_table("Baselines on " + trace.sequence_id, names, reports);
  report::emit_report(t, g.out, "baselines", report::PlotKind::bar);
  print_table(t);
  return 0;
}

struct CuesArgs {
  std::string frames;
  int flow_resolution = 128;
  double alpha = 1.0;
  int iters = 200;
  bool descriptors = false;
};

int cmd_cues(const Globals& g, const CuesArgs& a) {
  const auto frames = load_frames(a.frames);
  bottomup::CueStackOptions opt;
  opt.flow = {a.alpha, a.iters, 1e-4};
  opt.flow_resolution = a.flow_resolution;
  opt.jobs = g.jobs;
  const auto stack = bottomup::build_cue_stack(frames, g.k, opt);
  const fs::path out(g.out);
  for (const auto cue : bottomup::kCueOrder) io::save_map_sequence(out / std::string(cue), stack.stream(cue));
  io::save_feature_matrix(out / "cues.f32", stack.features());
  if (a.descriptors) io::save_feature_matrix(out / "descriptors.f32", describe_frames(frames));
  std::printf("%zu frames, %zu cue maps each, written to %s\n", frames.size(), bottomup::kCueOrder.size(), g.out.c_str());
  return 0;
}

struct FitArgs {
  std::string features;
  std::string fix;
  std::string model = "model.f32";
  double ridge = 0.0;
  double cutoff = regression::kDefaultCutoff;
};

int cmd_fit(const Globals& g, const FitArgs& a) {
  const auto features = io::load_feature_matrix(a.features);
  const auto trace = load_trace(a.fix);
  const auto model = regression::fit(features, trace, g.k, g.kernel(), a.ridge, a.cutoff);
  regression::save_model(a.model, model);
  std::printf("fitted %lld x %lld weights, rank %d, residual %.6g\n", static_cast<long long>(model.weights.rows()),
              static_cast<long long>(model.weights.cols()), model.rank, model.residual_norm);
  return 0;
}

struct GruArgs {
  std::string features;
  std::string fix;
  std::string checkpoint = "gru.f32";
  recurrent::TrainConfig config;
  int hidden = recurrent::kDefaultHidden;
};

int cmd_train_gru(const Globals& g, GruArgs a) {
  const auto features = io::load_feature_matrix(a.features);
  const auto trace = load_trace(a.fix);
  a.config.seed = mix_seed(g.seed, {1});
  a.config.validate();
  auto model = recurrent::GruGazeModel::random(static_cast<int>(features.cols()), g.k, mix_seed(g.seed, {2}), a.hidden);
  const auto res = recurrent::train(std::move(model), features, trace, a.config);
  recurrent::save_checkpoint(a.checkpoint, res.model, a.config);
  report::Table t{"GRU training loss", "epoch", {"loss"}, {}, {}};
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) {
    t.add_row(std::to_string(e + 1), {res.epoch_loss[e]});
    std::printf("epoch %zu loss %.6f\n", e + 1, res.epoch_loss[e]);
  }
  report::emit_report(t, g.out, "gru_loss", report::PlotKind::line);
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string features;
};

int cmd_predict(const Globals& g, const PredictArgs& a, bool gru) {
  const auto features = io::load_feature_matrix(a.features);
  std::vector<GridMap> maps;
  if (gru) {
    const auto ck = recurrent::load_checkpoint(a.model);
    maps = recurrent::forward_sequence(ck.model, features.data).maps;
  } else {
    maps = regression::predict(regression::load_model(a.model), features);
  }
  io::save_map_sequence(fs::path(g.out) / "maps", maps);
  std::printf("%zu maps written to %s\n", maps.size(), (fs::path(g.out) / "maps").c_str());
  return 0;
}

struct EvalArgs {
  std::string pred;
  std::string fix;
  std::string mp;
  double mp_weight = 1.0;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  auto maps = io::load_map_sequence(a.pred);
  const auto trace = load_trace(a.fix);
  if (!a.mp.empty()) {
    const auto points = cues::from_point_log(io::load_point_log(a.mp), cues::PointKind::manipulation_click);
    const auto mp = cues::point_maps(points, static_cast<int>(maps.size()), maps.front().k(), g.kernel());
    for (std::size_t t = 0; t < maps.size(); ++t) maps[t] = cues::augment(maps[t], mp[t], a.mp_weight);
  }
  const auto rep = metrics::score_sequence(maps, trace);
  fs::create_directories(g.out);
  io::write_text(fs::path(g.out) / "per_frame.csv", rep.to_csv());
  io::write_text(fs::path(g.out) / "summary.json", rep.summary().dump(2) + "\n");
  std::printf("frames %zu  NSS %.4f  AUC %.4f\n", rep.frames_scored, rep.nss_mean, rep.auc_mean);
  return 0;
}

struct CombineArgs {
  std::vector<std::string> cues{"itti", "gbvs", "sr", "of", "gru", "mp"};
  std::string train;
  std::string test;
  bool synthetic = false;
  double ridge = regression::kDefaultCueRidge;
};

// Synthetic stand-ins for cue streams: each is an independent noisy view of
// the gaze path; "mp" sits on the gaze 80% of the time.
std::vector<GridMap> synthetic_stream(const std::string& cue, const synthetic::GazePath& path, const Globals& g,
                                      std::mt19937_64& rng) {
  if (cue == "mp") {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<cues::PointAnnotation> points;
    for (std::size_t t = 0; t < path.size(); ++t) {
      cues::PointAnnotation p;
      p.frame = static_cast<int>(t);
      const bool on_gaze = u01(rng) < 0.8;
      p.x = on_gaze ? path.x[t] : u01(rng);
      p.y = on_gaze ? path.y[t] : u01(rng);
      points.push_back(p);
    }
    return cues::point_maps(points, static_cast<int>(path.size()), g.k, g.kernel());
  }
  double error = 5.0;
  if (cue == "gru") error = 2.0;
  else if (cue == "gbvs") error = 4.0;
  else if (cue == "sr") error = 6.0;
  return synthetic::noisy_oracle_maps(path, error, g.k, g.kernel(), rng);
}

std::vector<regression::NamedStream> load_streams(const fs::path& dir, const std::vector<std::string>& names, int frames,
                                                  const Globals& g) {
  std::vector<regression::NamedStream> out;
  for (const auto& n : names) {
    regression::NamedStream s{n, {}};
    if (fs::is_directory(dir / n)) {
      s.maps = io::load_map_sequence(dir / n);
    } else if (fs::exists(dir / (n + ".csv"))) {
      const auto points = cues::from_point_log(io::load_point_log(dir / (n + ".csv")), cues::PointKind::manipulation_click);
      s.maps = cues::point_maps(points, frames, g.k, g.kernel());
    } else {
      throw Error("cue '" + n + "' not found under " + dir.string());
    }
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_combine(const Globals& g, const CombineArgs& a) {
  if (a.cues.empty()) throw Error("no cues given");
  FixationTrace train_trace, test_trace;
  std::vector<regression::NamedStream> train, test;
  if (a.synthetic) {
    std::mt19937_64 rng(mix_seed(g.seed, {3}));
    const synthetic::TaskSpec task{"synthetic", 0.5, 0.5, 0.15, 0.9, 1.0};
    const auto train_path = synthetic::gaze_path(task, 600, rng);
    const auto test_path = synthetic::gaze_path(task, 300, rng);
    train_trace = synthetic::trace_from_path(train_path, "train", "subject_0", 0.01, rng);
    test_trace = synthetic::trace_from_path(test_path, "test", "subject_0", 0.01, rng);
    for (const auto& c : a.cues) {
      train.push_back({c, synthetic_stream(c, train_path, g, rng)});
      test.push_back({c, synthetic_stream(c, test_path, g, rng)});
    }
  } else {
    if (a.train.empty() || a.test.empty()) throw Error("combine needs --train and --test directories or --synthetic");
    train_trace = load_trace((fs::path(a.train) / "fixations.csv").string());
    test_trace = load_trace((fs::path(a.test) / "fixations.csv").string());
    train = load_streams(a.train, a.cues, static_cast<int>(train_trace.size()), g);
    test = load_streams(a.test, a.cues, static_cast<int>(test_trace.size()), g);
  }
  std::vector<std::string> names;
  std::vector<metrics::ScoreReport> reports;
  for (const auto& s : test) {
    names.push_back(s.name);
    reports.push_back(metrics::score_sequence(s.maps, test_trace));
  }
  const auto combo = regression::combine_cues(train, train_trace, g.kernel(), a.ridge);
  names.push_back("combined");
  reports.push_back(metrics::score_sequence(regression::predict(combo, test), test_trace));
  const auto t = score_table("Accuracy of the combined model", names, reports);
  report::emit_report(t, g.out, "combine", report::PlotKind::bar);
  print_table(t);
  return 0;
}

struct ExperimentArgs {
  std::string dataset;
  bool synthetic = false;
  std::string trainer = "regression";
  double ridge = 1e-3;
  // synthetic suite
  int frames = 400;
  int subjects = 3;
  double subject_noise = 0.03;
  std::string suite = "distinct";
  // ablation
  std::string sequence;
  std::string test_sequence;
  int step = 1000;
  int runs = 3;
  double test_fraction = 0.3;
  // activity
  std::vector<int> windows{2, 5, 10, 20};
  int window_count = 2000;
  double train_fraction = 0.7;
  double lambda = 1e-4;
  int svm_epochs = 20;
};

std::vector<synthetic::TaskSpec> suite_tasks(const std::string& name) {
  if (name == "distinct") return synthetic::distinct_tasks();
  if (name == "equal") return synthetic::equal_predictability_tasks();
  throw Error("unknown suite '" + name + "' (distinct, equal)");
}

int cmd_transfer(const Globals& g, const ExperimentArgs& a) {
  std::vector<experiments::Sequence> seqs;
  if (a.synthetic) {
    seqs = synthetic::task_suite(suite_tasks(a.suite), a.frames, a.subjects, a.subject_noise, mix_seed(g.seed, {4}));
  } else {
    if (a.dataset.empty()) throw Error("transfer needs --dataset or --synthetic");
    seqs = load_dataset(a.dataset, true, false).sequences;
  }
  const auto cm = experiments::transfer_matrix(seqs, make_trainer(a.trainer, g, a.ridge), experiments::mean_score, g.jobs);
  for (std::size_t i = 0; i < cm.errors.size(); ++i) {
    if (!cm.errors[i].empty()) std::cerr << "warning: training on " << cm.train_ids[i] << " failed: " << cm.errors[i] << "\n";
  }
  for (int which = 0; which < 2; ++which) {
    const auto& m = which == 0 ? cm.nss : cm.auc;
    report::Table t{which == 0 ? "Transfer NSS (rows train, columns test)" : "Transfer AUC (rows train, columns test)",
                    "train", cm.test_ids, {}, {}};
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      t.add_row(cm.train_ids[static_cast<std::size_t>(i)], row);
    }
    report::emit_report(t, g.out, which == 0 ? "transfer_nss" : "transfer_auc", report::PlotKind::heat);
    print_table(t);
  }
  std::printf("diagonal AUC %.4f, off-diagonal AUC %.4f\n", cm.diagonal_mean_auc(), cm.off_diagonal_mean_auc());
  return 0;
}

int cmd_ablate(const Globals& g, const ExperimentArgs& a) {
  const auto trainer = make_trainer(a.trainer, g, a.ridge);
  experiments::Sequence subj_seq, train_seq, test_seq;
  if (a.synthetic) {
    const auto tasks = suite_tasks(a.suite);
    const auto& task = tasks.back();
    subj_seq = synthetic::task_suite({task}, a.frames, std::max(a.subjects, 2), a.subject_noise, mix_seed(g.seed, {5}))[0];
    std::mt19937_64 rng(mix_seed(g.seed, {6}));
    const auto proj = synthetic::random_projection(mix_seed(g.seed, {7}));
    auto make = [&](int n, const std::string& id) {
      const auto p = synthetic::gaze_path(task, n, rng);
      experiments::Sequence s;
      s.id = id;
      s.features = synthetic::encode_features(p, proj, 0.05, rng);
      s.traces.push_back(synthetic::trace_from_path(p, id, "subject_0", a.subject_noise, rng));
      return s;
    };
    train_seq = make(4 * a.step, task.id + "_train");
    test_seq = make(a.step, task.id + "_test");
  } else {
    if (a.dataset.empty()) throw Error("ablate needs --dataset or --synthetic");
    const auto d = load_dataset(a.dataset, true, false);
    auto find = [&](const std::string& id) -> const experiments::Sequence& {
      if (id.empty()) return d.sequences.front();
      for (const auto& s : d.sequences) {
        if (s.id == id) return s;
      }
      throw Error("sequence '" + id + "' not in dataset");
    };
    subj_seq = find(a.sequence);
    if (!a.test_sequence.empty()) {
      train_seq = subj_seq;
      test_seq = find(a.test_sequence);
    } else {
      const int n = static_cast<int>(subj_seq.features.rows());
      const int cut = static_cast<int>(n * (1.0 - a.test_fraction));
      train_seq = slice(subj_seq, 0, cut);
      test_seq = slice(subj_seq, cut, n);
    }
  }
  if (subj_seq.traces.size() >= 2) {
    const auto sc = experiments::subject_ablation(subj_seq, trainer, experiments::mean_score, g.jobs);
    const auto t = ablation_table("Score vs number of training subjects (" + subj_seq.id + ")", "subjects", sc);
    report::emit_report(t, g.out, "ablation_subjects", report::PlotKind::line);
    print_table(t);
  } else {
    std::cerr << "warning: " << subj_seq.id << " has one subject; subject ablation skipped\n";
  }
  const auto fc = experiments::frame_ablation(train_seq, test_seq, trainer, a.step, a.runs, mix_seed(g.seed, {8}),
                                              experiments::mean_score, g.jobs);
  const auto t = ablation_table("Score vs number of training frames (" + train_seq.id + ")", "frames", fc);
  report::emit_report(t, g.out, "ablation_frames", report::PlotKind::line);
  print_table(t);
  return 0;
}

int cmd_activity(const Globals& g, const ExperimentArgs& a) {
  std::vector<experiments::ActivitySequence> seqs;
  if (a.synthetic) {
    seqs = synthetic::activity_suite(suite_tasks(a.suite), std::max(a.frames, 100), g.k, mix_seed(g.seed, {9}));
  } else {
    if (a.dataset.empty()) throw Error("activity needs --dataset or --synthetic");
    seqs = load_dataset(a.dataset, false, true).activity;
  }
  experiments::ActivityConfig cfg;
  cfg.window_sizes = a.windows;
  cfg.windows = a.window_count;
  cfg.train_fraction = a.train_fraction;
  cfg.svm.lambda = a.lambda;
  cfg.svm.epochs = a.svm_epochs;
  cfg.seed = mix_seed(g.seed, {10});
  const auto curves = experiments::activity_curves(seqs, cfg, g.jobs);
  report::Table t{"Activity accuracy vs window size", "window", {}, {}, {}};
  for (const auto kind : experiments::kWindowKinds) t.columns.push_back(experiments::to_string(kind));
  t.columns.push_back("chance");
  for (std::size_t w = 0; w < curves.window_sizes.size(); ++w) {
    t.add_row(std::to_string(curves.window_sizes[w]),
              {curves.accuracy[0][w], curves.accuracy[1][w], curves.accuracy[2][w], curves.chance});
  }
  report::emit_report(t, g.out, "activity_accuracy", report::PlotKind::line);
  print_table(t);
  return 0;
}

int cmd_selftest(const Globals& g, const std::vector<int>& only) {
  const fs::path out(g.out);
  fs::create_directories(out);
  acceptance::Options opt;
  opt.seed = g.seed;
  opt.jobs = g.jobs;
  json results = json::array();
  std::string csv = "criterion,title,check,value,bound,pass\n";
  bool all = true;
  for (int id = 1; id <= acceptance::kCriterionCount; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto r = acceptance::run_criterion(id, opt);
    std::cout << acceptance::format_line(r) << std::endl;
    all = all && r.passed();
    results.push_back(r.to_json());
    for (const auto& c : r.checks) {
      csv += std::to_string(id) + ",\"" + r.title + "\",\"" + c.name + "\"," + report::format_number(c.value) + ",\"" +
             c.bound + "\"," + (c.pass ? "1" : "0") + "\n";
    }
    const fs::path dir = out / ("criterion_" + std::to_string(id));
    for (const auto& art : r.artifacts) report::emit_report(art.table, dir, art.stem, art.kind);
  }
  io::write_text(out / "selftest_report.json", json{{"seed", g.seed}, {"criteria", results}}.dump(2) + "\n");
  io::write_text(out / "selftest_report.csv", csv);
  std::cout << (all ? "selftest passed" : "selftest FAILED") << std::endl;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egogaze: egocentric gaze prediction toolkit"};
  app.footer(
      "Option precedence: command-line flags > --config file > EGOGAZE_SEED (seed only) > defaults.\n"
      "Exit codes: 0 success, 1 runtime error, 2 usage error.");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI config file; [command] sections apply to that command");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  if (const char* env = std::getenv("EGOGAZE_SEED")) {
    try {
      g.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "EGOGAZE_SEED must be an unsigned integer\n";
      return 2;
    }
  }
  app.add_option("--seed", g.seed, "random seed (default from EGOGAZE_SEED, else 1)");
  app.add_option("--jobs,-j", g.jobs, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--k", g.k, "grid side")->check(CLI::Range(2, 200));
  app.add_option("--kernel-width", g.kernel_width, "odd smoothing kernel width")->check(CLI::Range(1, 99));
  app.add_option("--kernel-sigma", g.kernel_sigma, "smoothing kernel sigma, in cells")->check(CLI::PositiveNumber);
  app.add_option("--out,-o", g.out, "output directory");

  BaselinesArgs ba;
  auto* baselines = app.add_subcommand("baselines", "central, average-fixation and fixation-oracle baselines");
  baselines->add_option("--fix", ba.fix, "fixation log to score")->required()->check(CLI::ExistingFile);
  baselines->add_option("--train", ba.train, "fixation logs for the average fixation map")->check(CLI::ExistingFile);

  CuesArgs ca;
  auto* cues_cmd = app.add_subcommand("cues", "bottom-up cue maps for a directory of PGM/PPM frames");
  cues_cmd->add_option("--frames", ca.frames, "frame directory")->required()->check(CLI::ExistingDirectory);
  cues_cmd->add_option("--flow-resolution", ca.flow_resolution, "square resolution for optical flow");
  cues_cmd->add_option("--flow-alpha", ca.alpha, "Horn-Schunck smoothness weight (8-bit intensity units)");
  cues_cmd->add_option("--flow-iters", ca.iters, "Horn-Schunck iteration cap");
  cues_cmd->add_flag("--descriptors", ca.descriptors, "also write the built-in frame descriptors");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit-regression", "fit the linear feature-to-map model");
  fit->add_option("--features", fa.features, "feature matrix")->required()->check(CLI::ExistingFile);
  fit->add_option("--fix", fa.fix, "fixation log")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", fa.model, "output model path");
  fit->add_option("--ridge", fa.ridge)->check(CLI::NonNegativeNumber);
  fit->add_option("--cutoff", fa.cutoff, "relative singular value cutoff")->check(CLI::NonNegativeNumber);

  GruArgs ga;
  auto* train_gru = app.add_subcommand("train-gru", "train the recurrent gaze model");
  train_gru->add_option("--features", ga.features)->required()->check(CLI::ExistingFile);
  train_gru->add_option("--fix", ga.fix)->required()->check(CLI::ExistingFile);
  train_gru->add_option("--checkpoint", ga.checkpoint, "output checkpoint path");
  train_gru->add_option("--epochs", ga.config.epochs)->check(CLI::PositiveNumber);
  train_gru->add_option("--lr", ga.config.learning_rate)->check(CLI::PositiveNumber);
  train_gru->add_option("--window", ga.config.bptt_window, "truncated BPTT window")->check(CLI::PositiveNumber);
  train_gru->add_option("--hidden", ga.hidden)->check(CLI::PositiveNumber);

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "maps from a fitted linear model");
  predict->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
  predict->add_option("--features", pa.features)->required()->check(CLI::ExistingFile);
  PredictArgs pga;
  auto* predict_gru = app.add_subcommand("predict-gru", "maps from a GRU checkpoint");
  predict_gru->add_option("--checkpoint", pga.model)->required()->check(CLI::ExistingFile);
  predict_gru->add_option("--features", pga.features)->required()->check(CLI::ExistingFile);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "per-frame NSS/AUC of a map sequence");
  eval->add_option("--pred", ea.pred, "map sequence directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--fix", ea.fix)->required()->check(CLI::ExistingFile);
  eval->add_option("--mp", ea.mp, "manipulation point log to augment the maps with")->check(CLI::ExistingFile);
  eval->add_option("--mp-weight", ea.mp_weight)->check(CLI::NonNegativeNumber);

  CombineArgs cba;
  auto* combine = app.add_subcommand("combine", "fuse cue streams by regression and score each cue and the fusion");
  combine->add_option("--cues", cba.cues, "cue names, comma separated")->delimiter(',');
  combine->add_option("--train", cba.train, "directory with fixations.csv and one map sequence (or point log) per cue");
  combine->add_option("--test", cba.test, "same layout as --train");
  combine->add_flag("--synthetic", cba.synthetic, "use generated cue streams");
  combine->add_option("--ridge", cba.ridge)->check(CLI::NonNegativeNumber);

  ExperimentArgs xa;
  auto experiment_options = [&](CLI::App* c) {
    c->add_option("--dataset", xa.dataset, "dataset manifest (JSON)")->check(CLI::ExistingFile);
    c->add_flag("--synthetic", xa.synthetic, "use a generated task suite");
    c->add_option("--suite", xa.suite, "synthetic suite: distinct or equal");
    c->add_option("--frames", xa.frames, "frames per synthetic sequence")->check(CLI::PositiveNumber);
  };
  auto* transfer = app.add_subcommand("transfer", "train on each sequence, test on every sequence");
  experiment_options(transfer);
  transfer->add_option("--trainer", xa.trainer, "regression or afm");
  transfer->add_option("--ridge", xa.ridge)->check(CLI::NonNegativeNumber);
  transfer->add_option("--subjects", xa.subjects)->check(CLI::PositiveNumber);
  transfer->add_option("--subject-noise", xa.subject_noise)->check(CLI::NonNegativeNumber);

  auto* ablate = app.add_subcommand("ablate", "score vs number of training subjects and frames");
  experiment_options(ablate);
  ablate->add_option("--trainer", xa.trainer, "regression or afm");
  ablate->add_option("--ridge", xa.ridge)->check(CLI::NonNegativeNumber);
  ablate->add_option("--subjects", xa.subjects)->check(CLI::PositiveNumber);
  ablate->add_option("--subject-noise", xa.subject_noise)->check(CLI::NonNegativeNumber);
  ablate->add_option("--sequence", xa.sequence, "sequence id (default: first)");
  ablate->add_option("--test-sequence", xa.test_sequence, "test sequence for the frame ablation");
  ablate->add_option("--test-fraction", xa.test_fraction, "held-out tail when no test sequence is given")
      ->check(CLI::Range(0.05, 0.95));
  ablate->add_option("--step", xa.step, "frame budget step")->check(CLI::PositiveNumber);
  ablate->add_option("--runs", xa.runs, "random subsets per budget")->check(CLI::PositiveNumber);

  auto* activity = app.add_subcommand("activity", "decode the task from windows of predicted maps");
  experiment_options(activity);
  activity->add_option("--windows", xa.windows, "window sizes")->delimiter(',');
  activity->add_option("--window-count", xa.window_count, "windows drawn per sequence and split")->check(CLI::PositiveNumber);
  activity->add_option("--train-fraction", xa.train_fraction)->check(CLI::Range(0.05, 0.95));
  activity->add_option("--lambda", xa.lambda)->check(CLI::PositiveNumber);
  activity->add_option("--svm-epochs", xa.svm_epochs)->check(CLI::PositiveNumber);

  std::vector<int> only;
  auto* selftest = app.add_subcommand("selftest", "oracle and property checks on generated data");
  selftest->add_option("--only", only, "criterion ids")->delimiter(',')->check(CLI::Range(1, acceptance::kCriterionCount));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (g.kernel_width % 2 == 0) {
    std::cerr << "--kernel-width must be odd\n";
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    int rc = 0;
    if (sub == baselines) rc = cmd_baselines(g, ba);
    else if (sub == cues_cmd) rc = cmd_cues(g, ca);
    else if (sub == fit) rc = cmd_fit(g, fa);
    else if (sub == train_gru) rc = cmd_train_gru(g, ga);
    else if (sub == predict) rc = cmd_predict(g, pa, false);
    else if (sub == predict_gru) rc = cmd_predict(g, pga, true);
    else if (sub == eval) rc = cmd_eval(g, ea);
    else if (sub == combine) rc = cmd_combine(g, cba);
    else if (sub == transfer) rc = cmd_transfer(g, xa);
    else if (sub == ablate) rc = cmd_ablate(g, xa);
    else if (sub == activity) rc = cmd_activity(g, xa);
    else if (sub == selftest) rc = cmd_selftest(g, only);
    finish(g, app, sub);
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
