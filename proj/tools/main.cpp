// tdgia: reproducible node-injection attack experiments from a JSON config.
//
// Subcommands: synth | train | attack | evaluate. Every command is a pure
// function of (config file, CLI flags, seeds); artifacts are byte-identical
// across re-runs. Exit codes: 0 success, 2 config/validation error,
// 3 numerical failure. Set TDGIA_LOG=debug|info|quiet for verbosity.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdg/attack.hpp"
#include "tdg/baselines.hpp"
#include "tdg/eval.hpp"
#include "tdg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tdg;

namespace {

int log_level() {  // 0 quiet, 1 info, 2 debug
  const char* v = std::getenv("TDGIA_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "[tdgia] %s\n", msg.c_str());
}
void debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[tdgia:debug] %s\n", msg.c_str());
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<NodeId> budget_nodes;
  std::optional<std::int64_t> budget_degree;
};

const std::vector<std::string> kMethods{"tdgia",            "fgsm",
                                        "afgsm",            "ablation:defective",
                                        "ablation:uniform", "ablation:random"};

json load_config(const std::string& path, const CliOverrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  // CLI flags override config fields
  if (ov.seed) cfg["seeds"] = json::array({*ov.seed});
  if (ov.out) cfg["out"] = *ov.out;
  if (ov.budget_nodes) cfg["budget"]["max_nodes"] = *ov.budget_nodes;
  if (ov.budget_degree) cfg["budget"]["max_degree"] = *ov.budget_degree;
  if (!cfg.contains("out")) throw ConfigError("config: missing \"out\" directory");
  if (!cfg.contains("seeds") || cfg["seeds"].empty())
    throw ConfigError("config: missing non-empty \"seeds\" list");
  return cfg;
}

fs::path out_dir(const json& cfg) { return fs::path(cfg.at("out").get<std::string>()); }

std::vector<std::uint64_t> seeds_of(const json& cfg) {
  return cfg.at("seeds").get<std::vector<std::uint64_t>>();
}

// resolved-config echo: every command writes the config it actually used
void echo_config(const json& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.json");
  out << cfg.dump(2) << "\n";
}

SbmParams sbm_params(const json& j) {
  SbmParams p;
  if (j.contains("blocks")) p.blocks = j["blocks"].get<int>();
  if (j.contains("nodes")) p.nodes = j["nodes"].get<NodeId>();
  if (j.contains("p_in")) p.p_in = j["p_in"].get<double>();
  if (j.contains("p_out")) p.p_out = j["p_out"].get<double>();
  if (j.contains("feature_dim")) p.feature_dim = j["feature_dim"].get<Eigen::Index>();
  if (j.contains("class_signal_strength"))
    p.class_signal_strength = j["class_signal_strength"].get<double>();
  if (j.contains("noise")) p.noise = j["noise"].get<double>();
  if (j.contains("train_frac")) p.train_frac = j["train_frac"].get<double>();
  if (j.contains("val_frac")) p.val_frac = j["val_frac"].get<double>();
  if (j.contains("sizes")) p.sizes = j["sizes"].get<std::vector<NodeId>>();
  return p;
}

ModelSpec model_spec(const json& j) {
  ModelSpec s;
  if (j.contains("architecture"))
    s.architecture = architecture_from_name(j["architecture"].get<std::string>());
  if (j.contains("hidden_dims")) s.hidden_dims = j["hidden_dims"].get<std::vector<Eigen::Index>>();
  if (s.architecture == Architecture::sgc && !j.contains("hidden_dims")) s.hidden_dims.clear();
  if (j.contains("use_layernorm")) s.use_layernorm = j["use_layernorm"].get<bool>();
  if (j.contains("sgc_k")) s.sgc_k = j["sgc_k"].get<int>();
  if (j.contains("dropout_rate")) s.dropout_rate = j["dropout_rate"].get<double>();
  s.validate();
  return s;
}

TrainConfig train_config(const json& cfg) {
  TrainConfig tc;
  if (cfg.contains("train")) {
    const json& j = cfg["train"];
    if (j.contains("epochs")) tc.epochs = j["epochs"].get<int>();
    if (j.contains("lr")) tc.adam.lr = j["lr"].get<double>();
    if (j.contains("eval_interval")) tc.eval_interval = j["eval_interval"].get<int>();
  }
  tc.validate();
  return tc;
}

Budget budget_of(const json& cfg) {
  Budget b;
  if (cfg.contains("budget")) {
    const json& j = cfg["budget"];
    if (j.contains("max_nodes")) b.max_nodes = j["max_nodes"].get<NodeId>();
    if (j.contains("max_degree")) b.max_degree = j["max_degree"].get<std::int64_t>();
    if (j.contains("feature_bounds"))
      b.feature_bounds = {j["feature_bounds"][0].get<double>(),
                          j["feature_bounds"][1].get<double>()};
  }
  b.validate();
  return b;
}

AttackConfig attack_config(const json& cfg, const std::string& method, std::uint64_t seed) {
  AttackConfig c;
  const json j = cfg.contains("attack") ? cfg["attack"] : json::object();
  if (j.contains("k1")) c.k1 = j["k1"].get<double>();
  if (j.contains("k2")) c.k2 = j["k2"].get<double>();
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("r")) c.r = j["r"].get<double>();
  if (j.contains("batch_fraction")) c.batch_fraction = j["batch_fraction"].get<double>();
  if (j.contains("opt_lr")) c.opt_lr = j["opt_lr"].get<double>();
  if (j.contains("opt_epochs")) c.opt_epochs = j["opt_epochs"].get<int>();
  if (j.contains("init_sigma")) c.init_sigma = j["init_sigma"].get<double>();
  if (j.contains("feature_map"))
    c.feature_map = j["feature_map"].get<std::string>() == "clamp" ? FeatureMap::clamp
                                                                   : FeatureMap::smoothmap;
  if (j.contains("loss_mode"))
    c.loss_mode = j["loss_mode"].get<std::string>() == "inverse_kl" ? LossMode::inverse_kl
                                                                    : LossMode::smooth;
  else if (method == "fgsm" || method == "afgsm")
    c.loss_mode = LossMode::inverse_kl;  // these baselines default to inverse KL
  if (j.contains("effective_degree_cap") && !j["effective_degree_cap"].is_null())
    c.effective_degree_cap = j["effective_degree_cap"].get<std::int64_t>();
  c.seed = seed;
  return c;
}

MetricWeights weights_of(const json& cfg, std::size_t n_defenses) {
  MetricWeights w;
  if (cfg.contains("weights")) {
    w.w = cfg["weights"].get<std::vector<double>>();
  } else if (n_defenses == 7) {
    w = MetricWeights::default7();
  } else if (n_defenses == 12) {
    w = MetricWeights::default12();
  } else {
    throw ConfigError("config: \"weights\" required for " + std::to_string(n_defenses) +
                      " defenses (built-in vectors exist for 7 and 12)");
  }
  w.validate();
  if (w.w.size() != n_defenses)
    throw ConfigError("config: weight vector length " + std::to_string(w.w.size()) +
                      " does not match defense count " + std::to_string(n_defenses));
  return w;
}

Dataset dataset_of(const json& cfg) {
  const json& j = cfg.at("dataset");
  if (j.contains("path")) return load_dataset(j["path"].get<std::string>());
  return load_dataset(out_dir(cfg) / "dataset");
}

// distinct deterministic training seeds per experiment seed: surrogate gets
// index 0, defense i gets index i+1
std::uint64_t train_seed(std::uint64_t seed, std::size_t index) {
  return seed * 1000003ull + static_cast<std::uint64_t>(index) * 7919ull + 1ull;
}

std::string defense_name(const json& j, std::size_t i) {
  if (j.contains("name")) return j["name"].get<std::string>();
  return "defense" + std::to_string(i);
}

std::vector<NamedModel> load_defenses(const json& cfg, std::uint64_t seed) {
  const fs::path dir = out_dir(cfg) / "models" / ("seed_" + std::to_string(seed));
  std::vector<NamedModel> defenses;
  std::size_t i = 0;
  for (const json& dj : cfg.at("defenses")) {
    const std::string name = defense_name(dj, i++);
    defenses.push_back({name, load_model(dir / (name + ".json"))});
  }
  return defenses;
}

AttackResult run_attack(const std::string& method, const Model& surrogate, const Dataset& ds,
                        const Budget& budget, const AttackConfig& cfg) {
  if (method == "tdgia") return tdgia_attack(surrogate, ds, budget, cfg);
  if (method == "fgsm") return fgsm_attack(surrogate, ds, budget, cfg);
  if (method == "afgsm") return afgsm_attack(surrogate, ds, budget, cfg);
  if (method.rfind("ablation:", 0) == 0)
    return edge_policy_ablation(edge_policy_from_name(method.substr(9)), surrogate, ds, budget,
                                cfg);
  std::string valid;
  for (const auto& m : kMethods) valid += (valid.empty() ? "" : ", ") + m;
  throw ConfigError("unknown method \"" + method + "\"; valid methods: " + valid);
}

std::vector<NodeId> budget_sweep(const json& cfg) {
  if (cfg.contains("budget_sweep")) return cfg["budget_sweep"].get<std::vector<NodeId>>();
  return {};
}

fs::path attack_dir(const json& cfg, const std::string& method, std::optional<NodeId> b) {
  std::string tag = method;
  std::replace(tag.begin(), tag.end(), ':', '_');
  if (b) tag += "_b" + std::to_string(*b);
  return out_dir(cfg) / "attacks" / tag;
}

// ---------------------------------------------------------------------------

int cmd_synth(const json& cfg) {
  if (!cfg.at("dataset").contains("sbm"))
    throw ConfigError("synth requires a dataset.sbm section");
  const auto params = sbm_params(cfg["dataset"]["sbm"]);
  const auto seed = seeds_of(cfg).front();
  auto ds = synth_sbm(params, seed);
  const fs::path dir = out_dir(cfg) / "dataset";
  save_dataset(ds, dir);
  echo_config(cfg, out_dir(cfg));
  // summary counts each undirected edge once
  std::printf("synth: nodes=%lld edges=%zu classes=%d features=%lld -> %s\n",
              static_cast<long long>(ds.num_nodes()), ds.graph.edge_list().size(),
              ds.num_classes, static_cast<long long>(ds.feature_dim()), dir.c_str());
  return 0;
}

int cmd_train(const json& cfg) {
  const auto ds = dataset_of(cfg);
  const auto tc_base = train_config(cfg);
  echo_config(cfg, out_dir(cfg));
  for (const auto seed : seeds_of(cfg)) {
    const fs::path dir = out_dir(cfg) / "models" / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);

    auto tc = tc_base;
    tc.seed = train_seed(seed, 0);
    auto surrogate = train(model_spec(cfg.at("surrogate")), ds, tc);
    save_model(surrogate.model, dir / "surrogate.json");

    std::ofstream acc(dir / "clean_accuracies.csv");
    acc << "model,clean_accuracy\n";
    char buf[64];
    auto log_acc = [&](const std::string& name, const Model& m) {
      const double a = accuracy(predict_labels(m, ds), ds.labels, ds.test_idx);
      std::snprintf(buf, sizeof buf, "%.17g", a);
      acc << name << "," << buf << "\n";
      info("seed " + std::to_string(seed) + ": " + name + " clean accuracy " +
           std::to_string(a));
    };
    log_acc("surrogate", surrogate.model);

    std::size_t i = 0;
    for (const json& dj : cfg.at("defenses")) {
      const std::string name = defense_name(dj, i);
      tc.seed = train_seed(seed, i + 1);
      auto defense = train(model_spec(dj), ds, tc);
      save_model(defense.model, dir / (name + ".json"));
      log_acc(name, defense.model);
      ++i;
    }
  }
  return 0;
}

int cmd_attack(const json& cfg, const std::string& method) {
  const auto ds = dataset_of(cfg);
  const auto base_budget = budget_of(cfg);
  auto sweep = budget_sweep(cfg);
  echo_config(cfg, out_dir(cfg));

  std::vector<std::optional<NodeId>> budgets;
  if (sweep.empty())
    budgets.push_back(std::nullopt);
  else
    for (NodeId b : sweep) budgets.push_back(b);

  for (const auto& b_nodes : budgets) {
    Budget budget = base_budget;
    if (b_nodes) budget.max_nodes = *b_nodes;
    for (const auto seed : seeds_of(cfg)) {
      auto cfg_a = attack_config(cfg, method, seed);
      // fail on config errors before any compute
      budget.validate();
      cfg_a.validate(budget);
      const fs::path mdir = out_dir(cfg) / "models" / ("seed_" + std::to_string(seed));
      auto surrogate = load_model(mdir / "surrogate.json");
      debug("attack " + method + " seed " + std::to_string(seed));
      auto result = run_attack(method, surrogate, ds, budget, cfg_a);
      const fs::path dir = attack_dir(cfg, method, b_nodes) / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      save_injection(result.injection, budget, dir / "injection.json");
      write_attack_log(result.log, method, dir / "attack_log.csv");
    }
  }
  return 0;
}

int cmd_evaluate(const json& cfg, const std::string& method) {
  const auto ds = dataset_of(cfg);
  const auto base_budget = budget_of(cfg);
  const auto weights = weights_of(cfg, cfg.at("defenses").size());
  auto sweep = budget_sweep(cfg);
  echo_config(cfg, out_dir(cfg));

  const fs::path edir = out_dir(cfg) / "eval" / [&] {
    std::string tag = method;
    std::replace(tag.begin(), tag.end(), ':', '_');
    return tag;
  }();
  fs::create_directories(edir);

  auto eval_one = [&](std::uint64_t seed, std::optional<NodeId> b_nodes) {
    auto defenses = load_defenses(cfg, seed);
    Injection inj;
    inj.injected_features.resize(0, ds.feature_dim());
    Budget budget = base_budget;
    if (b_nodes) budget.max_nodes = *b_nodes;
    const fs::path afile =
        attack_dir(cfg, method, b_nodes) / ("seed_" + std::to_string(seed)) / "injection.json";
    if (fs::exists(afile)) {
      auto [loaded, bud] = load_injection(afile);
      inj = std::move(loaded);
      budget = bud;
    } else {
      info("no injection at " + afile.string() + "; evaluating clean accuracies");
    }
    auto report = evaluate_attack(defenses, ds, inj, weights);
    report.method = method;
    report.seed = seed;
    report.budget_nodes = budget.max_nodes;
    report.budget_degree = budget.max_degree;
    return report;
  };

  std::vector<EvalReport> reports;
  if (sweep.empty()) {
    for (const auto seed : seeds_of(cfg)) {
      auto report = eval_one(seed, std::nullopt);
      emit_report(report, edir / ("seed_" + std::to_string(seed)));
      reports.push_back(std::move(report));
    }
  } else {
    std::vector<CurvePoint> curve;
    for (NodeId b : sweep) {
      std::vector<double> acc, red;
      for (const auto seed : seeds_of(cfg)) {
        auto report = eval_one(seed, b);
        acc.push_back(report.attacked.s_weighted);
        red.push_back(report.reduction);
        reports.push_back(std::move(report));
      }
      auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
      };
      curve.push_back({b, median(acc), median(red)});
    }
    emit_curve(curve, edir / "curve.csv");
  }
  emit_reports_csv(reports, edir / "metrics.csv");

  // transfer matrix across surrogate architectures when several are configured
  if (cfg.contains("surrogates") && cfg["surrogates"].size() > 1) {
    const auto seed = seeds_of(cfg).front();
    auto defenses = load_defenses(cfg, seed);
    std::vector<NamedModel> surrogates;
    std::size_t i = 0;
    auto tc = train_config(cfg);
    for (const json& sj : cfg["surrogates"]) {
      tc.seed = train_seed(seed, 100 + i);
      surrogates.push_back({defense_name(sj, i), train(model_spec(sj), ds, tc).model});
      ++i;
    }
    AttackFn fn = [&](const Model& s, const Dataset& d, const Budget& bud, std::uint64_t sd) {
      return run_attack(method, s, d, bud, attack_config(cfg, method, sd)).injection;
    };
    auto tm = transfer_matrix(surrogates, defenses, fn, ds, base_budget, seed);
    emit_transfer_matrix(tm, edir / "transfer_matrix.csv");
  }

  for (const auto& r : reports)
    std::printf("evaluate: method=%s seed=%llu b=%lld clean=%.4f attacked=%.4f reduction=%.4f\n",
                r.method.c_str(), static_cast<unsigned long long>(r.seed),
                static_cast<long long>(r.budget_nodes), r.clean.s_weighted,
                r.attacked.s_weighted, r.reduction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"node-injection attack laboratory for graph neural networks"};
  app.require_subcommand(1);

  std::string config_path, method = "tdgia";
  CliOverrides ov;
  std::uint64_t seed_flag = 0;
  std::string out_flag;
  NodeId bn_flag = 0;
  std::int64_t bd_flag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed_flag, "override: run this single seed")
        ->each([&](const std::string&) { ov.seed = seed_flag; });
    sub->add_option("--out", out_flag, "override: output directory")
        ->each([&](const std::string&) { ov.out = out_flag; });
    return sub;
  };
  auto add_budget = [&](CLI::App* sub) {
    sub->add_option("--budget-nodes", bn_flag, "override: injected node budget b")
        ->each([&](const std::string&) { ov.budget_nodes = bn_flag; });
    sub->add_option("--budget-degree", bd_flag, "override: per-node degree budget d")
        ->each([&](const std::string&) { ov.budget_degree = bd_flag; });
  };

  auto* synth = add_common(app.add_subcommand("synth", "generate a synthetic dataset"));
  auto* train_ = add_common(app.add_subcommand("train", "train surrogate and defense models"));
  auto* attack = add_common(app.add_subcommand("attack", "craft injections with a method"));
  auto* evaluate = add_common(app.add_subcommand("evaluate", "score injections on defenses"));
  attack->add_option("--method", method, "tdgia | fgsm | afgsm | ablation:<policy>");
  evaluate->add_option("--method", method, "method whose artifacts to evaluate");
  add_budget(attack);
  add_budget(evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    const json cfg = load_config(config_path, ov);
    if (synth->parsed()) return cmd_synth(cfg);
    if (train_->parsed()) return cmd_train(cfg);
    if (attack->parsed()) return cmd_attack(cfg, method);
    if (evaluate->parsed()) return cmd_evaluate(cfg, method);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
