#include "hyflow/regress.hpp"

#include <exception>
#include <thread>

#include "hyflow/feeder.hpp"

namespace hyflow {

using nlohmann::json;

FeatureVector make_features(const OperatingPoint& op) {
  const Index m = op.s.size();
  FeatureVector y(feature_length(m));
  y.segment(0, 3) = op.v0.real();
  y.segment(3, 3) = op.v0.imag();
  y.segment(6, m) = op.s.real();
  y.segment(6 + m, m) = op.s.imag();
  return y;
}

std::string_view to_string(SampleFlag f) {
  switch (f) {
    case SampleFlag::clean: return "clean";
    case SampleFlag::noisy: return "noisy";
    case SampleFlag::bad: return "bad";
  }
  return "clean";
}

SampleFlag flag_from_string(std::string_view s) {
  if (s == "clean") return SampleFlag::clean;
  if (s == "noisy") return SampleFlag::noisy;
  if (s == "bad") return SampleFlag::bad;
  throw Error("unknown sample flag \"" + std::string(s) + "\"");
}

std::string_view to_string(ModelKind k) { return k == ModelKind::lr ? "lr" : "svr"; }
std::string_view to_string(TargetKind k) { return k == TargetKind::error ? "error" : "voltage"; }

RMat Standardizer::apply_rows(const RMat& rows) const {
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Standardizer standardize_fit(const RMat& rows) {
  if (rows.rows() < 2) throw Error("standardize: at least two samples are required");
  Standardizer st;
  st.mean = rows.colwise().mean().transpose();
  const RMat centered = rows.rowwise() - st.mean.transpose();
  st.scale = (centered.colwise().squaredNorm() / static_cast<double>(rows.rows())).cwiseSqrt().transpose();
  for (Index k = 0; k < st.scale.size(); ++k)
    if (!(st.scale[k] >= 1e-12)) st.scale[k] = 1.0;
  return st;
}

Standardizer standardize_fit(const TrainingSet& ts) { return standardize_fit(ts.features); }

namespace {

void check_training_set(const TrainingSet& ts) {
  if (ts.features.rows() != ts.targets.rows()) throw Error("training set: feature and target counts differ");
  if (ts.size() < 2) throw Error("training set: at least two samples are required");
}

}  // namespace

ErrorModel train_lr(const TrainingSet& ts, double ridge) {
  check_training_set(ts);
  if (!(ridge >= 0.0)) throw Error("lr: ridge must be nonnegative");
  ErrorModel model;
  model.kind = ModelKind::lr;
  model.ridge = ridge;
  model.standardizer = standardize_fit(ts.features);

  const Index n = ts.size();
  const Index f = ts.features.cols();
  const RMat xs = model.standardizer.apply_rows(ts.features);
  const RVec target_mean = ts.targets.colwise().mean().transpose();
  const RVec feature_mean = xs.colwise().mean().transpose();

  // Ridge least squares on centred data via QR of [X; sqrt(l) I].
  RMat stacked = RMat::Zero(n + f, f);
  stacked.topRows(n) = xs.rowwise() - feature_mean.transpose();
  stacked.bottomRows(f).diagonal().setConstant(std::sqrt(ridge));
  RMat rhs = RMat::Zero(n + f, ts.targets.cols());
  rhs.topRows(n) = ts.targets.rowwise() - target_mean.transpose();

  const RMat wt = stacked.colPivHouseholderQr().solve(rhs);
  model.weights = wt.transpose();
  model.offsets = target_mean - model.weights * feature_mean;
  return model;
}

ErrorModel train_svr(const TrainingSet& ts, const SvrParams& params) {
  check_training_set(ts);
  ErrorModel model;
  model.kind = ModelKind::svr;
  model.C = params.C;
  model.epsilon = params.epsilon;
  model.standardizer = standardize_fit(ts.features);

  const RMat xs = model.standardizer.apply_rows(ts.features);
  const Standardizer target_st = standardize_fit(ts.targets);
  const RMat zs = target_st.apply_rows(ts.targets);

  const Index outputs = ts.targets.cols();
  model.weights.resize(outputs, xs.cols());
  model.offsets.resize(outputs);

  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(outputs));
  auto work = [&](Index first, Index stride) {
    for (Index o = first; o < outputs; o += stride) {
      try {
        const SvrFit fit = fit_linear_svr(xs, zs.col(o), params.C, params.epsilon, params.solver);
        model.weights.row(o) = target_st.scale[o] * fit.w.transpose();
        model.offsets[o] = target_st.scale[o] * fit.b + target_st.mean[o];
      } catch (...) {
        failures[static_cast<std::size_t>(o)] = std::current_exception();
      }
    }
  };

  const Index threads = std::clamp<Index>(
      params.threads > 0 ? params.threads : static_cast<Index>(std::thread::hardware_concurrency()), 1, outputs);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (Index k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
  }

  for (Index o = 0; o < outputs; ++o) {
    if (!failures[static_cast<std::size_t>(o)]) continue;
    try {
      std::rethrow_exception(failures[static_cast<std::size_t>(o)]);
    } catch (const SvrError& e) {
      throw SvrError("output " + std::to_string(o) + ": " + e.what(), e.best());
    }
  }
  return model;
}

RVec predict_errors(const ErrorModel& model, const FeatureVector& y) {
  if (y.size() != model.feature_count())
    throw Error("predict: feature length " + std::to_string(y.size()) + " does not match model (" +
                std::to_string(model.feature_count()) + ")");
  return model.weights * model.standardizer.apply(y) + model.offsets;
}

PFSolution hybrid_solve(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t,
                        const ErrorModel& model) {
  if (model.target != TargetKind::error) throw Error("hybrid: model does not predict linearization errors");
  if (model.output_count() != 2 * sys.size()) throw Error("hybrid: model is dimensioned for another network");
  PFSolution sol = solve_taylor(assemble_linear(sys, op, t));
  sol.v = from_rect(to_rect(sol.v) + predict_errors(model, make_features(op)));
  sol.method = model.kind == ModelKind::svr ? Method::hybrid : Method::lr_corrected;
  sol.residual = power_residual(sys, op, sol.v).cwiseAbs().maxCoeff();
  return sol;
}

PFSolution direct_solve(const AdmittanceSystem& sys, const OperatingPoint& op, const ErrorModel& model) {
  if (model.target != TargetKind::voltage) throw Error("direct: model does not predict voltages");
  if (model.output_count() != 2 * sys.size()) throw Error("direct: model is dimensioned for another network");
  PFSolution sol;
  sol.method = Method::direct;
  sol.v = from_rect(predict_errors(model, make_features(op)));
  sol.residual = power_residual(sys, op, sol.v).cwiseAbs().maxCoeff();
  return sol;
}

namespace {

json rvec_json(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RVec rvec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const RVec>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

json model_to_json(const ErrorModel& m) {
  json doc;
  doc["kind"] = to_string(m.kind);
  doc["target"] = to_string(m.target);
  doc["hyperparams"] = {{"C", m.C}, {"epsilon", m.epsilon}, {"ridge", m.ridge}};
  doc["standardizer"] = {{"mean", rvec_json(m.standardizer.mean)}, {"scale", rvec_json(m.standardizer.scale)}};
  doc["rows"] = m.weights.rows();
  doc["cols"] = m.weights.cols();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.weights.size()));
  for (Index r = 0; r < m.weights.rows(); ++r)
    for (Index c = 0; c < m.weights.cols(); ++c) flat.push_back(m.weights(r, c));
  doc["weights"] = flat;
  doc["offsets"] = rvec_json(m.offsets);
  doc["fingerprint"] = m.fingerprint;
  return doc;
}

ErrorModel model_from_json(const json& doc) {
  try {
    ErrorModel m;
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "lr") m.kind = ModelKind::lr;
    else if (kind == "svr") m.kind = ModelKind::svr;
    else throw Error("unknown model kind \"" + kind + "\"");
    const auto target = doc.value("target", std::string("error"));
    if (target == "error") m.target = TargetKind::error;
    else if (target == "voltage") m.target = TargetKind::voltage;
    else throw Error("unknown model target \"" + target + "\"");
    const json& hp = doc.at("hyperparams");
    m.C = hp.value("C", 0.0);
    m.epsilon = hp.value("epsilon", 0.0);
    m.ridge = hp.value("ridge", 0.0);
    m.standardizer.mean = rvec_from(doc.at("standardizer").at("mean"));
    m.standardizer.scale = rvec_from(doc.at("standardizer").at("scale"));
    const Index rows = doc.at("rows").get<Index>();
    const Index cols = doc.at("cols").get<Index>();
    const auto flat = doc.at("weights").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != rows * cols) throw Error("model weights do not match rows x cols");
    m.weights.resize(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m.weights(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    m.offsets = rvec_from(doc.at("offsets"));
    m.fingerprint = doc.value("fingerprint", std::string());
    if (m.offsets.size() != rows || m.standardizer.mean.size() != cols || m.standardizer.scale.size() != cols)
      throw Error("model vectors do not match the weight matrix");
    if ((m.standardizer.scale.array() <= 0.0).any()) throw Error("model standardizer scales must be positive");
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace hyflow
