#include "egogaze/regression.hpp"

#include "egogaze/io.hpp"

namespace egogaze::regression {

LinearGazeModel fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, int k,
                    double ridge, double cutoff) {
  if (features.rows() == 0) throw DimensionError("regression fit needs at least one row");
  if (features.rows() != targets.rows()) {
    throw DimensionError("feature rows (" + std::to_string(features.rows()) + ") != target rows (" +
                         std::to_string(targets.rows()) + ")");
  }
  if (targets.cols() != static_cast<Eigen::Index>(k) * k) {
    throw DimensionError("targets must have k^2 columns");
  }
  if (ridge < 0.0 || cutoff < 0.0) throw Error("ridge and cutoff must be non-negative");
  if (!features.allFinite() || !targets.allFinite()) throw Error("regression inputs must be finite");

  LinearGazeModel model;
  model.k = k;
  model.ridge = ridge;
  model.cutoff = cutoff;
  model.weights = Eigen::MatrixXd::Zero(features.cols(), targets.cols());

  Eigen::BDCSVD<Eigen::MatrixXd> svd(features, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (smax > 0.0) {
    const double threshold = cutoff * smax;
    Eigen::VectorXd filter = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > threshold) {
        filter(i) = s(i) / (s(i) * s(i) + ridge);
        ++model.rank;
      }
    }
    model.weights = svd.matrixV() * filter.asDiagonal() * (svd.matrixU().transpose() * targets);
  }
  model.residual_norm = (features * model.weights - targets).norm();
  return model;
}

LinearGazeModel fit(const FeatureMatrix& features, const FixationTrace& trace, int k,
                    const GaussianKernel& kernel, double ridge, double cutoff) {
  features.validate();
  const TargetMatrix targets = build_targets(trace, k, kernel);
  if (targets.rows() != features.rows()) {
    throw DimensionError("trace has " + std::to_string(targets.rows()) + " frames but features have " +
                         std::to_string(features.rows()) + " rows");
  }
  std::vector<int> rows;
  for (std::size_t t = 0; t < targets.valid.size(); ++t) {
    if (targets.valid[t]) rows.push_back(static_cast<int>(t));
  }
  if (rows.size() == targets.valid.size()) return fit(features.data, targets.data, k, ridge, cutoff);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), features.cols());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), targets.data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = features.data.row(rows[i]);
    x.row(static_cast<Eigen::Index>(i)) = targets.data.row(rows[i]);
  }
  return fit(m, x, k, ridge, cutoff);
}

std::vector<GridMap> predict_signed(const LinearGazeModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_dim()) {
    throw DimensionError("features have " + std::to_string(features.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
  }
  // Row by row so batch and single-row predictions agree bit for bit.
  std::vector<GridMap> maps;
  maps.reserve(static_cast<std::size_t>(features.rows()));
  Eigen::RowVectorXd row;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    row = features.row(r);
    maps.push_back(unlinearize(row * model.weights, model.k));
  }
  return maps;
}

GridMap predict_signed(const LinearGazeModel& model, const Eigen::RowVectorXd& row) {
  if (row.size() != model.input_dim()) {
    throw DimensionError("feature row has " + std::to_string(row.size()) + " entries, model expects " +
                         std::to_string(model.input_dim()));
  }
  return unlinearize(row * model.weights, model.k);
}

std::vector<GridMap> predict(const LinearGazeModel& model, const FeatureMatrix& features) {
  auto maps = predict_signed(model, features.data);
  for (auto& m : maps) m = m.clamped();
  return maps;
}

GridMap predict(const LinearGazeModel& model, const Eigen::RowVectorXd& row) {
  return predict_signed(model, row).clamped();
}

FeatureMatrix stack_streams(const std::vector<NamedStream>& streams) {
  if (streams.empty()) throw Error("no cue streams to stack");
  const std::size_t n = streams.front().maps.size();
  for (const auto& s : streams) {
    if (s.maps.size() != n) {
      throw DimensionError("stream '" + s.name + "' has " + std::to_string(s.maps.size()) +
                           " frames but stream '" + streams.front().name + "' has " + std::to_string(n));
    }
  }
  if (n == 0) throw DimensionError("cue streams are empty");
  Eigen::Index cols = 0;
  for (const auto& s : streams) cols += static_cast<Eigen::Index>(s.maps.front().size());
  FeatureMatrix out;
  out.provenance = Provenance::cue_stack;
  out.data.resize(static_cast<Eigen::Index>(n), cols);
  for (std::size_t t = 0; t < n; ++t) {
    Eigen::Index off = 0;
    for (const auto& s : streams) {
      const auto& m = s.maps[t];
      if (m.size() != s.maps.front().size()) {
        throw DimensionError("stream '" + s.name + "' changes grid size at frame " + std::to_string(t));
      }
      out.data.block(static_cast<Eigen::Index>(t), off, 1, static_cast<Eigen::Index>(m.size())) = linearize(m);
      off += static_cast<Eigen::Index>(m.size());
    }
  }
  return out;
}

CueCombination combine_cues(const std::vector<NamedStream>& streams, const FixationTrace& trace,
                            const GaussianKernel& kernel, double ridge, double cutoff) {
  const FeatureMatrix features = stack_streams(streams);
  CueCombination combo;
  for (const auto& s : streams) combo.names.push_back(s.name);
  combo.model = fit(features, trace, streams.front().maps.front().k(), kernel, ridge, cutoff);
  return combo;
}

std::vector<GridMap> predict(const CueCombination& combo, const std::vector<NamedStream>& streams) {
  if (streams.size() != combo.names.size()) throw DimensionError("stream count differs from fitted combination");
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (streams[i].name != combo.names[i]) {
      throw Error("stream " + std::to_string(i) + " is '" + streams[i].name + "', expected '" +
                  combo.names[i] + "'");
    }
  }
  return predict(combo.model, stack_streams(streams));
}

void save_model(const std::filesystem::path& path, const LinearGazeModel& model) {
  nlohmann::json meta = {{"kind", "linear_gaze_model"},
                         {"m", model.input_dim()},
                         {"k", model.k},
                         {"lambda", model.ridge},
                         {"tau", model.cutoff},
                         {"diagnostics", {{"rank", model.rank}, {"residual_norm", model.residual_norm}}}};
  io::save_matrix(path, model.weights, meta);
}

LinearGazeModel load_model(const std::filesystem::path& path) {
  auto loaded = io::load_matrix(path);
  const auto& h = loaded.header;
  if (h.value("kind", "") != "linear_gaze_model") {
    throw ParseError(io::header_path(path).string(), 1, 0, "not a linear gaze model header");
  }
  LinearGazeModel model;
  model.k = h.at("k").get<int>();
  model.ridge = h.at("lambda").get<double>();
  model.cutoff = h.at("tau").get<double>();
  model.rank = h.at("diagnostics").at("rank").get<int>();
  model.residual_norm = h.at("diagnostics").at("residual_norm").get<double>();
  model.weights = std::move(loaded.data);
  if (model.weights.cols() != static_cast<Eigen::Index>(model.k) * model.k ||
      model.weights.rows() != h.at("m").get<Eigen::Index>()) {
    throw DimensionError(path.string() + ": weight payload does not match m x k^2");
  }
  return model;
}

}  // namespace egogaze::regression
