#include "tdg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace tdg {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void load_fail(const fs::path& file, std::size_t line, const std::string& what) {
  throw DatasetError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::ifstream open_or_fail(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("missing file: " + file.string());
  return in;
}

std::int64_t parse_int(const std::string& s, const fs::path& file, std::size_t line) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    load_fail(file, line, "malformed integer '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const fs::path& file, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    load_fail(file, line, "malformed real '" + s + "'");
  }
}

std::vector<NodeId> load_index_file(const fs::path& file, NodeId n) {
  auto in = open_or_fail(file);
  std::vector<NodeId> idx;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    NodeId v = parse_int(line, file, ln);
    if (v < 0 || v >= n) load_fail(file, ln, "index out of range");
    idx.push_back(v);
  }
  return idx;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != graph.num_nodes())
    throw DatasetError("feature row count does not match node count");
  if (static_cast<NodeId>(labels.size()) != graph.num_nodes())
    throw DatasetError("label count does not match node count");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw DatasetError("label out of range at node " + std::to_string(i));
  std::set<NodeId> seen;
  for (const auto* split : {&train_idx, &val_idx, &test_idx})
    for (NodeId v : *split) {
      if (v < 0 || v >= graph.num_nodes())
        throw DatasetError("split index out of range: " + std::to_string(v));
      if (!seen.insert(v).second)
        throw DatasetError("splits are not disjoint at node " + std::to_string(v));
    }
  if (features.size() > 0) {
    double lo = features.minCoeff(), hi = features.maxCoeff();
    if (lo < feature_range.first || hi > feature_range.second)
      throw DatasetError("feature entry outside declared feature_range");
  }
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;

  // features first: they fix n and D
  {
    const fs::path file = dir / "features.csv";
    auto in = open_or_fail(file);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      auto fields = split_line(line);
      std::vector<double> row;
      row.reserve(fields.size());
      for (const auto& f : fields) row.push_back(parse_real(f, file, ln));
      if (!rows.empty() && row.size() != rows.front().size())
        load_fail(file, ln, "inconsistent column count");
      rows.push_back(std::move(row));
    }
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  const NodeId n = ds.features.rows();

  {
    const fs::path file = dir / "edges.csv";
    auto in = open_or_fail(file);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      auto fields = split_line(line);
      if (fields.size() != 2) load_fail(file, ln, "expected two columns");
      NodeId u = parse_int(fields[0], file, ln);
      NodeId v = parse_int(fields[1], file, ln);
      if (u < 0 || u >= n || v < 0 || v >= n) load_fail(file, ln, "node id out of range");
      edges.emplace_back(u, v);
    }
    ds.graph = Graph::from_edges(n, edges);
  }

  {
    const fs::path file = dir / "labels.csv";
    auto in = open_or_fail(file);
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty()) continue;
      std::int64_t y = parse_int(line, file, ln);
      if (y < 0) load_fail(file, ln, "negative label");
      ds.labels.push_back(static_cast<int>(y));
    }
    if (static_cast<NodeId>(ds.labels.size()) != n)
      throw DatasetError(file.string() + ": label count " + std::to_string(ds.labels.size()) +
                         " does not match node count " + std::to_string(n));
    ds.num_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  }

  ds.train_idx = load_index_file(dir / "split_train.csv", n);
  ds.val_idx = load_index_file(dir / "split_val.csv", n);
  ds.test_idx = load_index_file(dir / "split_test.csv", n);

  if (ds.features.size() > 0)
    ds.feature_range = {ds.features.minCoeff(), ds.features.maxCoeff()};
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.csv");
    for (const auto& [u, v] : ds.graph.edge_list()) out << u << "," << v << "\n";
  }
  {
    std::ofstream out(dir / "features.csv");
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
        if (j) out << ",";
        out << format_real(ds.features(i, j));
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (int y : ds.labels) out << y << "\n";
  }
  auto write_split = [&](const char* name, const std::vector<NodeId>& idx) {
    std::ofstream out(dir / name);
    for (NodeId v : idx) out << v << "\n";
  };
  write_split("split_train.csv", ds.train_idx);
  write_split("split_val.csv", ds.val_idx);
  write_split("split_test.csv", ds.test_idx);
}

Dataset synth_sbm(const SbmParams& params, std::uint64_t seed) {
  if (params.p_in < 0 || params.p_in > 1 || params.p_out < 0 || params.p_out > 1)
    throw DatasetError("SBM probabilities must lie in [0,1]");

  std::vector<NodeId> sizes = params.sizes;
  if (sizes.empty()) {
    sizes.assign(params.blocks, params.nodes / params.blocks);
    for (NodeId i = 0; i < params.nodes % params.blocks; ++i) sizes[i]++;
  }
  const NodeId n = std::accumulate(sizes.begin(), sizes.end(), NodeId{0});
  const int k = static_cast<int>(sizes.size());

  std::vector<int> labels(n);
  {
    NodeId pos = 0;
    for (int c = 0; c < k; ++c)
      for (NodeId i = 0; i < sizes[c]; ++i) labels[pos++] = c;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) {
      double p = labels[u] == labels[v] ? params.p_in : params.p_out;
      if (unit(rng) < p) edges.emplace_back(u, v);
    }

  Dataset ds;
  ds.graph = Graph::from_edges(n, edges);
  ds.labels = std::move(labels);
  ds.num_classes = k;

  const Eigen::Index d = params.feature_dim;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix class_means(k, d);
  for (int c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < d; ++j) class_means(c, j) = gauss(rng);

  ds.features.resize(n, d);
  std::uniform_real_distribution<double> noise(-params.noise, params.noise);
  for (NodeId v = 0; v < n; ++v)
    for (Eigen::Index j = 0; j < d; ++j)
      ds.features(v, j) =
          params.class_signal_strength * class_means(ds.labels[v], j) + noise(rng);

  double scale = ds.features.cwiseAbs().maxCoeff();
  if (scale > 0) ds.features /= scale;
  ds.feature_range = {-1.0, 1.0};

  // per-class shuffled split so every class appears in every split
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<NodeId>> by_class(k);
  for (NodeId v : order) by_class[ds.labels[v]].push_back(v);
  for (int c = 0; c < k; ++c) {
    const auto& nodes = by_class[c];
    auto m = static_cast<std::size_t>(nodes.size());
    auto n_train = static_cast<std::size_t>(params.train_frac * m);
    auto n_val = static_cast<std::size_t>(params.val_frac * m);
    for (std::size_t i = 0; i < m; ++i) {
      if (i < n_train)
        ds.train_idx.push_back(nodes[i]);
      else if (i < n_train + n_val)
        ds.val_idx.push_back(nodes[i]);
      else
        ds.test_idx.push_back(nodes[i]);
    }
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());

  ds.validate();
  return ds;
}

}  // namespace tdg
