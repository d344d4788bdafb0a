#include "tdg/injection.hpp"

#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace tdg {

std::vector<Violation> validate_injection(const Injection& inj, const Budget& budget,
                                          NodeId n_original) {
  std::vector<Violation> out;

  if (inj.n_injected > budget.max_nodes)
    out.push_back({Violation::Kind::count, inj.n_injected,
                   "injected node count " + std::to_string(inj.n_injected) +
                       " exceeds budget " + std::to_string(budget.max_nodes)});

  std::map<NodeId, std::int64_t> degree;
  std::set<std::pair<NodeId, NodeId>> seen_cross;
  for (const auto& [orig, inj_idx] : inj.cross_edges) {
    if (orig < 0 || orig >= n_original)
      out.push_back({Violation::Kind::index, orig,
                     "cross edge references invalid original node " + std::to_string(orig)});
    if (inj_idx < 0 || inj_idx >= inj.n_injected)
      out.push_back({Violation::Kind::index, inj_idx,
                     "cross edge references invalid injected index " + std::to_string(inj_idx)});
    if (!seen_cross.insert({orig, inj_idx}).second)
      out.push_back({Violation::Kind::index, inj_idx,
                     "duplicate cross edge (" + std::to_string(orig) + "," +
                         std::to_string(inj_idx) + ")"});
    degree[inj_idx]++;
  }
  for (const auto& [i, j] : inj.injected_edges) {
    if (i < 0 || i >= inj.n_injected || j < 0 || j >= inj.n_injected || i == j) {
      out.push_back({Violation::Kind::index, i,
                     "invalid injected edge (" + std::to_string(i) + "," +
                         std::to_string(j) + ")"});
      continue;
    }
    degree[i]++;
    degree[j]++;
  }
  for (const auto& [idx, d] : degree)
    if (d > budget.max_degree)
      out.push_back({Violation::Kind::degree, idx,
                     "injected node " + std::to_string(idx) + " has degree " +
                         std::to_string(d) + " > budget " + std::to_string(budget.max_degree)});

  if (inj.injected_features.rows() != inj.n_injected)
    out.push_back({Violation::Kind::index, inj.n_injected,
                   "feature row count does not match n_injected"});
  const auto [lo, hi] = budget.feature_bounds;
  for (Eigen::Index i = 0; i < inj.injected_features.rows(); ++i)
    for (Eigen::Index j = 0; j < inj.injected_features.cols(); ++j) {
      double x = inj.injected_features(i, j);
      if (x < lo || x > hi || !std::isfinite(x)) {
        out.push_back({Violation::Kind::feature_range, i,
                       "feature (" + std::to_string(i) + "," + std::to_string(j) +
                           ") = " + std::to_string(x) + " outside bounds"});
        break;  // one violation per row is enough to name the offender
      }
    }
  return out;
}

Dataset apply_injection(const Dataset& ds, const Injection& inj) {
  if (inj.empty()) return ds;
  if (inj.injected_features.cols() != ds.features.cols())
    throw DatasetError("injected feature dimension mismatch");

  const NodeId n = ds.num_nodes();
  auto edges = ds.graph.edge_list();
  for (const auto& [orig, idx] : inj.cross_edges) {
    if (orig < 0 || orig >= n || idx < 0 || idx >= inj.n_injected)
      throw DatasetError("injection edge index out of range");
    edges.emplace_back(orig, n + idx);
  }
  for (const auto& [i, j] : inj.injected_edges) {
    if (i < 0 || i >= inj.n_injected || j < 0 || j >= inj.n_injected)
      throw DatasetError("injected-block edge index out of range");
    edges.emplace_back(n + i, n + j);
  }

  Dataset out;
  out.graph = Graph::from_edges(n + inj.n_injected, edges);
  out.features.resize(n + inj.n_injected, ds.features.cols());
  out.features.topRows(n) = ds.features;
  out.features.bottomRows(inj.n_injected) = inj.injected_features;
  out.labels = ds.labels;
  out.labels.resize(static_cast<std::size_t>(n + inj.n_injected), 0);
  out.train_idx = ds.train_idx;
  out.val_idx = ds.val_idx;
  out.test_idx = ds.test_idx;
  out.num_classes = ds.num_classes;
  out.feature_range = {std::min(ds.feature_range.first,
                                inj.injected_features.size() ? inj.injected_features.minCoeff()
                                                             : ds.feature_range.first),
                       std::max(ds.feature_range.second,
                                inj.injected_features.size() ? inj.injected_features.maxCoeff()
                                                             : ds.feature_range.second)};
  return out;
}

void save_injection(const Injection& inj, const Budget& budget,
                    const std::filesystem::path& file) {
  nlohmann::json j;
  j["n_injected"] = inj.n_injected;
  j["cross_edges"] = inj.cross_edges;
  j["injected_adjacency"] = inj.injected_edges;
  std::vector<double> feats(inj.injected_features.size());
  for (Eigen::Index i = 0; i < inj.injected_features.rows(); ++i)
    for (Eigen::Index k = 0; k < inj.injected_features.cols(); ++k)
      feats[static_cast<std::size_t>(i * inj.injected_features.cols() + k)] =
          inj.injected_features(i, k);
  j["injected_features"] = feats;
  j["feature_dim"] = inj.injected_features.cols();
  j["budget"] = {{"max_nodes", budget.max_nodes},
                 {"max_degree", budget.max_degree},
                 {"feature_min", budget.feature_bounds.first},
                 {"feature_max", budget.feature_bounds.second}};
  std::ofstream out(file);
  if (!out) throw DatasetError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

std::pair<Injection, Budget> load_injection(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("missing file: " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);

  Injection inj;
  inj.n_injected = j.at("n_injected").get<NodeId>();
  inj.cross_edges = j.at("cross_edges").get<std::vector<std::pair<NodeId, NodeId>>>();
  inj.injected_edges = j.at("injected_adjacency").get<std::vector<std::pair<NodeId, NodeId>>>();
  auto feats = j.at("injected_features").get<std::vector<double>>();
  auto dim = j.at("feature_dim").get<Eigen::Index>();
  if (dim > 0 && static_cast<Eigen::Index>(feats.size()) != inj.n_injected * dim)
    throw DatasetError(file.string() + ": injected_features size mismatch");
  inj.injected_features.resize(inj.n_injected, dim);
  for (Eigen::Index i = 0; i < inj.n_injected; ++i)
    for (Eigen::Index k = 0; k < dim; ++k)
      inj.injected_features(i, k) = feats[static_cast<std::size_t>(i * dim + k)];

  Budget b;
  b.max_nodes = j.at("budget").at("max_nodes").get<NodeId>();
  b.max_degree = j.at("budget").at("max_degree").get<std::int64_t>();
  b.feature_bounds = {j.at("budget").at("feature_min").get<double>(),
                      j.at("budget").at("feature_max").get<double>()};
  return {inj, b};
}

}  // namespace tdg
