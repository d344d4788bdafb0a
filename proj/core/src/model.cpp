#include "tdg/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "tdg/backward.hpp"

namespace tdg {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

std::string architecture_name(Architecture a) {
  switch (a) {
    case Architecture::gcn: return "gcn";
    case Architecture::sgc: return "sgc";
    case Architecture::sage_mean: return "sage_mean";
  }
  throw ModelError("unknown architecture");
}

Architecture architecture_from_name(const std::string& name) {
  if (name == "gcn") return Architecture::gcn;
  if (name == "sgc") return Architecture::sgc;
  if (name == "sage_mean") return Architecture::sage_mean;
  throw ModelError("unknown architecture '" + name + "'");
}

void ModelSpec::validate() const {
  if (architecture != Architecture::sgc && hidden_dims.empty())
    throw ModelError("hidden_dims must be non-empty for gcn/sage");
  for (auto d : hidden_dims)
    if (d < 1) throw ModelError("hidden layer width must be >= 1");
  if (architecture == Architecture::sgc && sgc_k < 1)
    throw ModelError("sgc_k must be >= 1");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw ModelError("dropout_rate must lie in [0,1)");
}

Model init_model(const ModelSpec& spec, Eigen::Index input_dim, int num_classes,
                 std::uint64_t seed) {
  spec.validate();
  if (input_dim < 1 || num_classes < 1)
    throw ModelError("input_dim and num_classes must be positive");

  std::vector<Eigen::Index> dims{input_dim};
  if (spec.architecture != Architecture::sgc)
    dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  dims.push_back(num_classes);

  std::mt19937_64 rng(seed);
  Model m;
  m.spec = spec;
  m.num_classes = num_classes;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer layer;
    const Eigen::Index fan_in = dims[i], fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    layer.weight.resize(fan_in, fan_out);
    for (Eigen::Index r = 0; r < fan_in; ++r)
      for (Eigen::Index c = 0; c < fan_out; ++c) layer.weight(r, c) = u(rng);
    layer.bias = Vector::Zero(fan_out);
    const bool hidden = i + 2 < dims.size();
    if (spec.use_layernorm && hidden && spec.architecture != Architecture::sgc) {
      layer.ln_gain = Vector::Ones(fan_out);
      layer.ln_offset = Vector::Zero(fan_out);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

Matrix spmm(const NormalizedAdjacency& a, const Matrix& x) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (NodeId v = 0; v < a.n; ++v)
    for (std::int64_t i = a.offsets[v]; i < a.offsets[v + 1]; ++i)
      y.row(v) += a.weights[i] * x.row(a.cols[i]);
  return y;
}

Matrix spmm_transpose(const NormalizedAdjacency& a, const Matrix& x) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (NodeId v = 0; v < a.n; ++v)
    for (std::int64_t i = a.offsets[v]; i < a.offsets[v + 1]; ++i)
      y.row(a.cols[i]) += a.weights[i] * x.row(v);
  return y;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

namespace {

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - rate;
  Matrix mask(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      mask(r, c) = u(rng) < keep ? 1.0 / keep : 0.0;
  return mask;
}

Matrix layernorm_forward(const Matrix& z, const Vector& gain, const Vector& offset) {
  const auto d = static_cast<double>(z.cols());
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mu = z.row(r).mean();
    const double var = (z.row(r).array() - mu).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.row(r) =
        ((z.row(r).array() - mu) * inv) * gain.transpose().array() + offset.transpose().array();
  }
  return out;
}

}  // namespace

ForwardTrace forward_trace(const Model& model, const NormalizedAdjacency& adj,
                           const Matrix& features, const ForwardMode& mode) {
  if (features.cols() != model.input_dim())
    throw ModelError("feature dimension " + std::to_string(features.cols()) +
                     " does not match model input dim " + std::to_string(model.input_dim()));
  if (features.rows() != adj.n) throw ModelError("feature rows do not match graph size");

  std::mt19937_64 rng(mode.dropout_seed);
  const bool drop = mode.training && model.spec.dropout_rate > 0;

  ForwardTrace t;
  Matrix h = features;
  if (drop) {
    Matrix mask = dropout_mask(h.rows(), h.cols(), model.spec.dropout_rate, rng);
    h = h.cwiseProduct(mask);
    t.dropout_masks.push_back(std::move(mask));
  }
  t.input = h;

  if (model.spec.architecture == Architecture::sgc) {
    Matrix p = h;
    for (int i = 0; i < model.spec.sgc_k; ++i) p = spmm(adj, p);
    t.layer_inputs.push_back(h);
    t.aggregated.push_back(p);
    const auto& layer = model.layers.front();
    t.logits = (p * layer.weight).rowwise() + layer.bias.transpose();
    t.pre_norm.push_back(t.logits);
    t.normalized.push_back(t.logits);
    t.probabilities = softmax_rows(t.logits);
    return t;
  }

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    const bool last = i + 1 == model.layers.size();
    if (i > 0 && drop) {
      Matrix mask = dropout_mask(h.rows(), h.cols(), model.spec.dropout_rate, rng);
      h = h.cwiseProduct(mask);
      t.dropout_masks.push_back(std::move(mask));
    }
    t.layer_inputs.push_back(h);
    Matrix agg = spmm(adj, h);
    Matrix z = (agg * layer.weight).rowwise() + layer.bias.transpose();
    Matrix norm = layer.ln_gain.size() ? layernorm_forward(z, layer.ln_gain, layer.ln_offset) : z;
    t.aggregated.push_back(std::move(agg));
    t.pre_norm.push_back(std::move(z));
    if (last) {
      t.logits = norm;
    } else {
      h = norm.cwiseMax(0.0);
    }
    t.normalized.push_back(std::move(norm));
  }
  t.probabilities = softmax_rows(t.logits);
  return t;
}

BackwardResult backward(const Model& model, const NormalizedAdjacency& adj,
                        const ForwardTrace& trace, const Matrix& dlogits,
                        bool need_input_grad) {
  BackwardResult res;
  res.param_grads.resize(model.layers.size());

  if (model.spec.architecture == Architecture::sgc) {
    const auto& layer = model.layers.front();
    auto& g = res.param_grads.front();
    g.weight = trace.aggregated.front().transpose() * dlogits;
    g.bias = dlogits.colwise().sum().transpose();
    if (need_input_grad) {
      Matrix dp = dlogits * layer.weight.transpose();
      for (int i = 0; i < model.spec.sgc_k; ++i) dp = spmm_transpose(adj, dp);
      if (!trace.dropout_masks.empty()) dp = dp.cwiseProduct(trace.dropout_masks.front());
      res.input_grad = std::move(dp);
    }
    return res;
  }

  Matrix dnorm = dlogits;
  for (std::size_t ri = model.layers.size(); ri-- > 0;) {
    const auto& layer = model.layers[ri];
    auto& g = res.param_grads[ri];

    Matrix dz;
    if (layer.ln_gain.size()) {
      const Matrix& z = trace.pre_norm[ri];
      const auto d = static_cast<double>(z.cols());
      dz.resize(z.rows(), z.cols());
      g.ln_gain = Vector::Zero(layer.ln_gain.size());
      g.ln_offset = Vector::Zero(layer.ln_offset.size());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double mu = z.row(r).mean();
        const double var = (z.row(r).array() - mu).square().sum() / d;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        Eigen::RowVectorXd xhat = (z.row(r).array() - mu) * inv;
        g.ln_gain += dnorm.row(r).cwiseProduct(xhat).transpose();
        g.ln_offset += dnorm.row(r).transpose();
        Eigen::RowVectorXd dxhat = dnorm.row(r).cwiseProduct(layer.ln_gain.transpose());
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat).mean();
        dz.row(r) = inv * (dxhat.array() - m1 - xhat.array() * m2);
      }
    } else {
      dz = dnorm;
    }

    g.weight = trace.aggregated[ri].transpose() * dz;
    g.bias = dz.colwise().sum().transpose();

    const bool first = ri == 0;
    if (!first || need_input_grad) {
      Matrix dagg = dz * layer.weight.transpose();
      Matrix dh = spmm_transpose(adj, dagg);
      if (ri < trace.dropout_masks.size())
        dh = dh.cwiseProduct(trace.dropout_masks[ri]);
      if (first) {
        res.input_grad = std::move(dh);
      } else {
        // relu backward against the pre-activation of the previous layer
        dnorm = dh.cwiseProduct(
            (trace.normalized[ri - 1].array() > 0.0).cast<double>().matrix());
      }
    }
  }
  return res;
}

Prediction forward(const Model& model, const Dataset& ds, const ForwardMode& mode) {
  auto adj = normalize_adjacency(ds.graph, model.spec.norm_scheme());
  auto trace = forward_trace(model, adj, ds.features, mode);
  Prediction pred;
  pred.probabilities = std::move(trace.probabilities);
  pred.labels.resize(static_cast<std::size_t>(pred.probabilities.rows()));
  for (Eigen::Index r = 0; r < pred.probabilities.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < pred.probabilities.cols(); ++c)
      if (pred.probabilities(r, c) > pred.probabilities(r, best)) best = static_cast<int>(c);
    pred.labels[static_cast<std::size_t>(r)] = best;
  }
  return pred;
}

Prediction predict_labels(const Model& model, const Dataset& ds) {
  return forward(model, ds, ForwardMode{});
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      flat[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  auto rows = j.at("rows").get<Eigen::Index>();
  auto cols = j.at("cols").get<Eigen::Index>();
  auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw ModelError("checkpoint matrix size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& file) {
  nlohmann::json j;
  j["spec"] = {{"architecture", architecture_name(model.spec.architecture)},
               {"hidden_dims", model.spec.hidden_dims},
               {"use_layernorm", model.spec.use_layernorm},
               {"sgc_k", model.spec.sgc_k},
               {"dropout_rate", model.spec.dropout_rate}};
  j["num_classes"] = model.num_classes;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : model.layers) {
    nlohmann::json lj;
    lj["weight"] = matrix_to_json(layer.weight);
    lj["bias"] = matrix_to_json(layer.bias);
    if (layer.ln_gain.size()) {
      lj["ln_gain"] = matrix_to_json(layer.ln_gain);
      lj["ln_offset"] = matrix_to_json(layer.ln_offset);
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(file);
  if (!out) throw ModelError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

Model load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ModelError("missing file: " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);

  Model m;
  const auto& sj = j.at("spec");
  m.spec.architecture = architecture_from_name(sj.at("architecture").get<std::string>());
  m.spec.hidden_dims = sj.at("hidden_dims").get<std::vector<Eigen::Index>>();
  m.spec.use_layernorm = sj.at("use_layernorm").get<bool>();
  m.spec.sgc_k = sj.at("sgc_k").get<int>();
  m.spec.dropout_rate = sj.at("dropout_rate").get<double>();
  m.num_classes = j.at("num_classes").get<int>();
  for (const auto& lj : j.at("layers")) {
    Layer layer;
    layer.weight = matrix_from_json(lj.at("weight"));
    layer.bias = matrix_from_json(lj.at("bias"));
    if (lj.contains("ln_gain")) {
      layer.ln_gain = matrix_from_json(lj.at("ln_gain"));
      layer.ln_offset = matrix_from_json(lj.at("ln_offset"));
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

}  // namespace tdg
