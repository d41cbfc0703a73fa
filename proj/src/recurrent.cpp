#include "egogaze/recurrent.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "egogaze/io.hpp"

namespace egogaze::recurrent {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

GruLayerParams GruLayerParams::zeros(int input_dim, int hidden) {
  GruLayerParams p;
  for (auto* w : {&p.w_z, &p.w_r, &p.w_h}) *w = Eigen::MatrixXd::Zero(hidden, input_dim);
  for (auto* u : {&p.u_z, &p.u_r, &p.u_h}) *u = Eigen::MatrixXd::Zero(hidden, hidden);
  for (auto* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Eigen::VectorXd::Zero(hidden);
  return p;
}

GruParameters GruParameters::zeros(int input_dim, int hidden, int cells) {
  GruParameters p;
  for (int l = 0; l < kLayers; ++l) p.layers[l] = GruLayerParams::zeros(l == 0 ? input_dim : hidden, hidden);
  p.readout_w = Eigen::MatrixXd::Zero(cells, hidden);
  p.readout_b = Eigen::VectorXd::Zero(cells);
  return p;
}

std::vector<GruParameters::Tensor> GruParameters::tensors() {
  std::vector<Tensor> out;
  auto add_m = [&](const std::string& name, Eigen::MatrixXd& m) { out.push_back({name, m.rows(), m.cols(), m.data()}); };
  auto add_v = [&](const std::string& name, Eigen::VectorXd& v) { out.push_back({name, v.rows(), 1, v.data()}); };
  for (int l = 0; l < kLayers; ++l) {
    auto& p = layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    add_m(pre + "w_z", p.w_z);
    add_m(pre + "u_z", p.u_z);
    add_v(pre + "b_z", p.b_z);
    add_m(pre + "w_r", p.w_r);
    add_m(pre + "u_r", p.u_r);
    add_v(pre + "b_r", p.b_r);
    add_m(pre + "w_h", p.w_h);
    add_m(pre + "u_h", p.u_h);
    add_v(pre + "b_h", p.b_h);
  }
  add_m("readout_w", readout_w);
  add_v("readout_b", readout_b);
  return out;
}

Eigen::Index GruParameters::count() const {
  Eigen::Index n = readout_w.size() + readout_b.size();
  for (const auto& p : layers) {
    n += p.w_z.size() + p.u_z.size() + p.b_z.size() + p.w_r.size() + p.u_r.size() + p.b_r.size() +
         p.w_h.size() + p.u_h.size() + p.b_h.size();
  }
  return n;
}

double GruParameters::squared_norm() const {
  double s = readout_w.squaredNorm() + readout_b.squaredNorm();
  for (const auto& p : layers) {
    s += p.w_z.squaredNorm() + p.u_z.squaredNorm() + p.b_z.squaredNorm() + p.w_r.squaredNorm() +
         p.u_r.squaredNorm() + p.b_r.squaredNorm() + p.w_h.squaredNorm() + p.u_h.squaredNorm() +
         p.b_h.squaredNorm();
  }
  return s;
}

bool GruParameters::all_finite() const { return std::isfinite(squared_norm()); }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be > 0");
  if (bptt_window < 1) throw Error("BPTT window must be >= 1");
  if (epochs < 0) throw Error("epochs must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw Error("invalid Adam hyperparameters");
  }
}

GruGazeModel GruGazeModel::zeros(int input_dim, int k, int hidden) {
  if (input_dim < 1 || hidden < 1 || k < 2) throw DimensionError("invalid GRU model dimensions");
  GruGazeModel m;
  m.k = k;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.params = GruParameters::zeros(input_dim, hidden, k * k);
  m.adam.m = m.params;
  m.adam.v = m.params;
  return m;
}

GruGazeModel GruGazeModel::random(int input_dim, int k, std::uint64_t seed, int hidden) {
  GruGazeModel m = zeros(input_dim, k, hidden);
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& t : m.params.tensors()) {
    // Matrices use their column count; biases use the state width.
    const Eigen::Index fan_in = t.cols == 1 ? hidden : t.cols;
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-s, s);
    auto flat = t.flat();
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = dist(rng);
  }
  return m;
}

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruLayerParams& p, GruCellCache* cache) {
  if (x.size() != p.w_z.cols() || h_prev.size() != p.u_z.cols()) {
    throw DimensionError("gru cell input (" + std::to_string(x.size()) + ") or state (" +
                         std::to_string(h_prev.size()) + ") does not match parameters");
  }
  const Eigen::VectorXd z = sigmoid(p.w_z * x + p.u_z * h_prev + p.b_z);
  const Eigen::VectorXd r = sigmoid(p.w_r * x + p.u_r * h_prev + p.b_r);
  const Eigen::VectorXd c =
      (p.w_h * x + p.u_h * r.cwiseProduct(h_prev) + p.b_h).array().tanh().matrix();
  Eigen::VectorXd h = z.cwiseProduct(h_prev) + (Eigen::VectorXd::Ones(z.size()) - z).cwiseProduct(c);
  if (cache) *cache = {x, h_prev, z, r, c};
  return h;
}

namespace {

// Accumulates the cell's parameter gradients and returns (dx, dh_prev).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gru_cell_backward(const GruCellCache& c, const Eigen::VectorXd& dh,
                                                              const GruLayerParams& p, GruLayerParams& g) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(dh.size());
  const Eigen::VectorXd dz = dh.cwiseProduct(c.h_prev - c.candidate);
  const Eigen::VectorXd daz = dz.cwiseProduct(c.z.cwiseProduct(one - c.z));
  const Eigen::VectorXd dc = dh.cwiseProduct(one - c.z);
  const Eigen::VectorXd dah = dc.cwiseProduct(one - c.candidate.cwiseProduct(c.candidate));
  const Eigen::VectorXd rh = c.r.cwiseProduct(c.h_prev);
  const Eigen::VectorXd drh = p.u_h.transpose() * dah;
  const Eigen::VectorXd dar = drh.cwiseProduct(c.h_prev).cwiseProduct(c.r.cwiseProduct(one - c.r));

  g.w_z.noalias() += daz * c.x.transpose();
  g.u_z.noalias() += daz * c.h_prev.transpose();
  g.b_z += daz;
  g.w_r.noalias() += dar * c.x.transpose();
  g.u_r.noalias() += dar * c.h_prev.transpose();
  g.b_r += dar;
  g.w_h.noalias() += dah * c.x.transpose();
  g.u_h.noalias() += dah * rh.transpose();
  g.b_h += dah;

  Eigen::VectorXd dx = p.w_z.transpose() * daz + p.w_r.transpose() * dar + p.w_h.transpose() * dah;
  Eigen::VectorXd dh_prev =
      dh.cwiseProduct(c.z) + drh.cwiseProduct(c.r) + p.u_z.transpose() * daz + p.u_r.transpose() * dar;
  return {std::move(dx), std::move(dh_prev)};
}

HiddenState zero_state(const GruGazeModel& model) {
  HiddenState h;
  for (auto& v : h) v = Eigen::VectorXd::Zero(model.hidden);
  return h;
}

void check_features(const GruGazeModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_dim) {
    throw DimensionError("features have " + std::to_string(features.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim));
  }
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

double loss(const Eigen::VectorXd& logits, int target) {
  if (target < 0 || target >= logits.size()) throw DimensionError("target cell outside logits");
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits(target);
}

SequenceOutput forward_sequence(const GruGazeModel& model, const Eigen::MatrixXd& features) {
  check_features(model, features);
  SequenceOutput out;
  out.logits.resize(features.rows(), model.cells());
  out.maps.reserve(static_cast<std::size_t>(features.rows()));
  HiddenState h = zero_state(model);
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    Eigen::VectorXd in = features.row(t).transpose();
    for (int l = 0; l < kLayers; ++l) {
      h[l] = gru_cell_forward(in, h[l], model.params.layers[l]);
      in = h[l];
    }
    const Eigen::VectorXd logits = model.params.readout_w * in + model.params.readout_b;
    out.logits.row(t) = logits.transpose();
    const Eigen::VectorXd p = softmax(logits);
    out.maps.emplace_back(model.k, std::vector<double>(p.data(), p.data() + p.size()));
  }
  return out;
}

WindowResult window_loss_and_gradients(const GruGazeModel& model, const Eigen::MatrixXd& features,
                                       const std::vector<int>& targets, const HiddenState& initial,
                                       GruParameters* grads) {
  check_features(model, features);
  const Eigen::Index steps = features.rows();
  if (static_cast<Eigen::Index>(targets.size()) != steps) throw DimensionError("one target per window row required");
  const auto& P = model.params;

  std::vector<std::array<GruCellCache, kLayers>> caches(static_cast<std::size_t>(steps));
  std::vector<Eigen::VectorXd> probs(static_cast<std::size_t>(steps));
  std::vector<Eigen::VectorXd> tops(static_cast<std::size_t>(steps));
  WindowResult result;
  HiddenState h = initial;
  for (Eigen::Index t = 0; t < steps; ++t) {
    Eigen::VectorXd in = features.row(t).transpose();
    for (int l = 0; l < kLayers; ++l) {
      h[l] = gru_cell_forward(in, h[l], P.layers[l], &caches[static_cast<std::size_t>(t)][l]);
      in = h[l];
    }
    tops[static_cast<std::size_t>(t)] = in;
    const int target = targets[static_cast<std::size_t>(t)];
    if (target < 0) continue;
    const Eigen::VectorXd logits = P.readout_w * in + P.readout_b;
    result.loss_sum += loss(logits, target);
    ++result.scored;
    probs[static_cast<std::size_t>(t)] = softmax(logits);
  }
  result.final_state = h;
  if (!grads) return result;

  *grads = GruParameters::zeros(model.input_dim, model.hidden, model.cells());
  if (result.scored == 0) return result;
  const double inv = 1.0 / result.scored;
  HiddenState dh_next;
  for (auto& v : dh_next) v = Eigen::VectorXd::Zero(model.hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    Eigen::VectorXd dh_top = dh_next[kLayers - 1];
    if (targets[ti] >= 0) {
      Eigen::VectorXd dlogits = probs[ti];
      dlogits(targets[ti]) -= 1.0;
      dlogits *= inv;
      grads->readout_w.noalias() += dlogits * tops[ti].transpose();
      grads->readout_b += dlogits;
      dh_top += P.readout_w.transpose() * dlogits;
    }
    Eigen::VectorXd dh = dh_top;
    for (int l = kLayers - 1; l >= 0; --l) {
      auto [dx, dh_prev] = gru_cell_backward(caches[ti][l], dh, P.layers[l], grads->layers[l]);
      dh_next[l] = std::move(dh_prev);
      if (l > 0) dh = std::move(dx) + dh_next[l - 1];
    }
  }
  return result;
}

std::vector<int> target_cells(const FixationTrace& trace, int k) {
  std::vector<int> out;
  out.reserve(trace.size());
  for (const auto& r : trace.records) out.push_back(r.valid ? fixation_cell(r.x, r.y, k).index(k) : -1);
  return out;
}

namespace {

void adam_step(GruGazeModel& model, GruParameters& grads, const TrainConfig& cfg) {
  auto& st = model.adam;
  ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  auto params = model.params.tensors();
  auto ms = st.m.tensors();
  auto vs = st.v.tensors();
  auto gs = grads.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].flat();
    auto m = ms[i].flat();
    auto v = vs[i].flat();
    const auto g = gs[i].flat();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  }
}

}  // namespace

TrainResult train(GruGazeModel model, const std::vector<TrainingSequence>& sequences, const TrainConfig& config) {
  config.validate();
  std::vector<std::vector<int>> targets;
  for (const auto& s : sequences) {
    check_features(model, s.features->data);
    if (static_cast<Eigen::Index>(s.trace->size()) != s.features->rows()) {
      throw DimensionError("trace '" + s.trace->subject_id + "' has " + std::to_string(s.trace->size()) +
                           " records but features have " + std::to_string(s.features->rows()) + " rows");
    }
    s.trace->validate();
    targets.push_back(target_cells(*s.trace, model.k));
  }
  TrainResult result;
  GruParameters grads;
  const int w = config.bptt_window;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    long scored = 0;
    int window_index = 0;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      const auto& x = sequences[s].features->data;
      HiddenState h = zero_state(model);
      for (Eigen::Index start = 0; start < x.rows(); start += w, ++window_index) {
        const Eigen::Index len = std::min<Eigen::Index>(w, x.rows() - start);
        const std::vector<int> tw(targets[s].begin() + start, targets[s].begin() + start + len);
        const WindowResult wr = window_loss_and_gradients(model, x.middleRows(start, len), tw, h, &grads);
        h = wr.final_state;
        if (wr.scored == 0) continue;
        const double gnorm = std::sqrt(grads.squared_norm());
        if (!std::isfinite(wr.loss_sum) || !std::isfinite(gnorm)) {
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", window " +
                                  std::to_string(window_index) + " (grad norm " + std::to_string(gnorm) + ")",
                              epoch, window_index, gnorm);
        }
        loss_sum += wr.loss_sum;
        scored += wr.scored;
        adam_step(model, grads, config);
      }
    }
    result.epoch_loss.push_back(scored ? loss_sum / static_cast<double>(scored) : 0.0);
    ++model.epochs_trained;
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(GruGazeModel model, const FeatureMatrix& features, const FixationTrace& trace,
                  const TrainConfig& config) {
  return train(std::move(model), std::vector<TrainingSequence>{{&features, &trace}}, config);
}

GradientCheckReport gradient_check(const GruGazeModel& model, const Eigen::MatrixXd& features,
                                   const std::vector<int>& targets,
                                   const std::function<void(GruParameters&)>& tamper) {
  constexpr double kStep = 1e-5;
  // Entries whose gradients are both below this are compared absolutely.
  constexpr double kFloor = 1e-6;
  const HiddenState h0 = zero_state(model);
  GruParameters analytic;
  window_loss_and_gradients(model, features, targets, h0, &analytic);
  if (tamper) tamper(analytic);

  GruGazeModel probe = model;
  auto mean_loss = [&]() {
    const WindowResult r = window_loss_and_gradients(probe, features, targets, h0, nullptr);
    return r.scored ? r.loss_sum / r.scored : 0.0;
  };
  GradientCheckReport report;
  auto ptensors = probe.params.tensors();
  auto gtensors = analytic.tensors();
  for (std::size_t i = 0; i < ptensors.size(); ++i) {
    auto p = ptensors[i].flat();
    const auto g = gtensors[i].flat();
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double saved = p(j);
      p(j) = saved + kStep;
      const double up = mean_loss();
      p(j) = saved - kStep;
      const double down = mean_loss();
      p(j) = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      const double a = g(j);
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.finite = false;
        report.max_relative_error = std::numeric_limits<double>::infinity();
        report.worst_tensor = ptensors[i].name;
        continue;
      }
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), kFloor);
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = ptensors[i].name;
      }
    }
  }
  return report;
}

void save_checkpoint(const std::filesystem::path& path, const GruGazeModel& model, const TrainConfig& config) {
  GruGazeModel copy = model;
  auto params = copy.params.tensors();
  auto ms = copy.adam.m.tensors();
  auto vs = copy.adam.v.tensors();
  const Eigen::Index n = copy.params.count();
  Eigen::MatrixXd payload(3 * n, 1);
  nlohmann::json order = nlohmann::json::array();
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::Index len = params[i].rows * params[i].cols;
    order.push_back({{"name", params[i].name}, {"rows", params[i].rows}, {"cols", params[i].cols},
                     {"offset", off}, {"storage", "column-major"}});
    payload.block(off, 0, len, 1) = params[i].flat();
    payload.block(n + off, 0, len, 1) = ms[i].flat();
    payload.block(2 * n + off, 0, len, 1) = vs[i].flat();
    off += len;
  }
  nlohmann::json header = {
      {"kind", "gru_gaze_model"},
      {"k", model.k},
      {"input_dim", model.input_dim},
      {"hidden", model.hidden},
      {"layers", kLayers},
      {"seed", model.seed},
      {"epoch", model.epochs_trained},
      {"adam_step", model.adam.step},
      {"parameter_count", n},
      {"sections", {"params", "adam_m", "adam_v"}},
      {"tensors", order},
      {"config",
       {{"learning_rate", config.learning_rate},
        {"epochs", config.epochs},
        {"bptt_window", config.bptt_window},
        {"beta1", config.beta1},
        {"beta2", config.beta2},
        {"epsilon", config.epsilon},
        {"seed", config.seed}}}};
  io::save_matrix(path, payload, header);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto loaded = io::load_matrix(path);
  const auto& h = loaded.header;
  if (h.value("kind", "") != "gru_gaze_model" || h.value("layers", 0) != kLayers) {
    throw ParseError(io::header_path(path).string(), 1, 0, "not a stacked GRU checkpoint");
  }
  Checkpoint ck;
  ck.model = GruGazeModel::zeros(h.at("input_dim").get<int>(), h.at("k").get<int>(), h.at("hidden").get<int>());
  ck.model.seed = h.at("seed").get<std::uint64_t>();
  ck.model.epochs_trained = h.at("epoch").get<int>();
  ck.model.adam.step = h.at("adam_step").get<long>();
  const auto& c = h.at("config");
  ck.config.learning_rate = c.at("learning_rate").get<double>();
  ck.config.epochs = c.at("epochs").get<int>();
  ck.config.bptt_window = c.at("bptt_window").get<int>();
  ck.config.beta1 = c.at("beta1").get<double>();
  ck.config.beta2 = c.at("beta2").get<double>();
  ck.config.epsilon = c.at("epsilon").get<double>();
  ck.config.seed = c.at("seed").get<std::uint64_t>();

  const Eigen::Index n = ck.model.params.count();
  if (loaded.data.rows() != 3 * n || loaded.data.cols() != 1) {
    throw DimensionError(path.string() + ": checkpoint payload does not match model dimensions");
  }
  auto params = ck.model.params.tensors();
  auto ms = ck.model.adam.m.tensors();
  auto vs = ck.model.adam.v.tensors();
  const auto& order = h.at("tensors");
  Eigen::Index off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (order.at(i).at("name") != params[i].name) {
      throw ParseError(io::header_path(path).string(), 1, 0, "unexpected tensor order at " + params[i].name);
    }
    const Eigen::Index len = params[i].rows * params[i].cols;
    params[i].flat() = loaded.data.block(off, 0, len, 1);
    ms[i].flat() = loaded.data.block(n + off, 0, len, 1);
    vs[i].flat() = loaded.data.block(2 * n + off, 0, len, 1);
    off += len;
  }
  return ck;
}

}  // namespace egogaze::recurrent
