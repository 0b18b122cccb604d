// Command-line front end: dataset generation, spectral analysis, theorem
// verification, rewiring, homophily metrics, training and the gamma sweep.
// Every command writes into --out-dir (config echo + results + log) and
// reruns with identical inputs produce byte-identical result files.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/dataset.hpp"
#include "pdg/directional.hpp"
#include "pdg/graph.hpp"
#include "pdg/homophily.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/nn/model.hpp"
#include "pdg/nn/train.hpp"
#include "pdg/rewire.hpp"
#include "pdg/spectral.hpp"
#include "pdg/stats.hpp"
#include "pdg/sweep.hpp"
#include "pdg/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pdg::DataError("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw pdg::DataError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pdg::DataError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(std::stod(cell));
  }
  if (out.empty()) throw pdg::UsageError("expected a comma-separated list of numbers");
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& spec) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos)
      throw pdg::UsageError("pairs must look like \"i:j,i:j\"");
    out.emplace_back(std::stoi(cell.substr(0, colon)),
                     std::stoi(cell.substr(colon + 1)));
  }
  if (out.empty()) throw pdg::UsageError("no pairs given");
  return out;
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pdg::DataError("cannot open labels: " + path);
  std::vector<int> labels;
  int z;
  while (in >> z) labels.push_back(z);
  if (labels.empty()) throw pdg::DataError("labels file is empty");
  return labels;
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::int64_t seed_override) {
  json cfg_json = load_json(config_path);
  if (seed_override >= 0) cfg_json["seed"] = static_cast<std::uint64_t>(seed_override);
  pdg::SynthConfig cfg = pdg::SynthConfig::from_json(cfg_json);

  pdg::SynthResult res = pdg::generate(cfg);
  const fs::path dir(out_dir);
  pdg::save_bundle(res.dataset, dir);
  write_json(dir / "meta.json", cfg.to_json());
  std::ostringstream log;
  log << "generated n=" << cfg.n << " edges=" << res.dataset.graph.num_edges()
      << " uniform_fallbacks=" << res.uniform_fallbacks << "\n";
  write_text(dir / "gen.log", log.str());
  std::cout << "wrote dataset bundle to " << dir.string() << "\n";
  return 0;
}

int cmd_spectral(const std::string& graph_path, double alpha, double gamma,
                 int k, const std::string& mode, const std::string& out_dir) {
  pdg::Graph g = pdg::load_edge_list(graph_path);
  pdg::SpectralDecomposition dec =
      mode == "iterative" ? pdg::eig_sym(g, gamma, k, pdg::EigMode::iterative)
                          : pdg::eig_sym(g, gamma);
  pdg::EigvecView view = pdg::eigvec_view(dec, alpha);

  std::ostringstream csv;
  for (int c = 0; c < view.eigenvalues.size(); ++c) {
    if (c) csv << ',';
    csv << pdg::format_double(view.eigenvalues[c]);
  }
  csv << '\n';
  for (int i = 0; i < view.vectors.rows(); ++i) {
    for (int c = 0; c < view.vectors.cols(); ++c) {
      if (c) csv << ',';
      csv << pdg::format_double(view.vectors(i, c));
    }
    csv << '\n';
  }
  const fs::path dir(out_dir);
  write_text(dir / "eigen.csv", csv.str());
  write_json(dir / "config.json", {{"graph", graph_path},
                                   {"alpha", alpha},
                                   {"gamma", gamma},
                                   {"k", k},
                                   {"mode", mode},
                                   {"degenerate_lambda1", dec.degenerate_lambda1}});
  std::cout << "wrote " << (dir / "eigen.csv").string() << "\n";
  return 0;
}

int cmd_distances(const std::string& graph_path, double alpha, double gamma,
                  const std::string& pairs_spec, const std::string& ts_spec,
                  const std::string& out_dir) {
  pdg::Graph g = pdg::load_edge_list(graph_path);
  const auto pairs = parse_pairs(pairs_spec);
  const auto ts = parse_double_list(ts_spec);
  pdg::EigvecView view =
      pdg::eigvec_view(pdg::eig_sym(g, gamma), alpha);

  std::ostringstream csv;
  csv << "i,j,t,d_t,d_s\n";
  for (auto [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= g.num_nodes() || j >= g.num_nodes())
      throw pdg::DataError("pair node id out of range");
    const double ds = pdg::spectral_distance(view, i, j).value;
    for (double t : ts) {
      csv << i << ',' << j << ',' << pdg::format_double(t) << ','
          << pdg::format_double(pdg::diffusion_distance(view, i, j, t)) << ','
          << pdg::format_double(ds) << '\n';
    }
  }
  const fs::path dir(out_dir);
  write_text(dir / "distances.csv", csv.str());
  write_json(dir / "config.json",
             {{"graph", graph_path}, {"alpha", alpha}, {"gamma", gamma},
              {"pairs", pairs_spec}, {"t", ts_spec},
              {"degenerate_lambda1", view.degenerate_lambda1}});
  std::cout << "wrote " << (dir / "distances.csv").string() << "\n";
  return 0;
}

int cmd_verify(const std::string& graph_path, const std::string& alphas_spec,
               const std::string& gammas_spec, int triples, std::int64_t seed,
               const std::string& out_dir) {
  pdg::Graph g = pdg::load_edge_list(graph_path);
  if (!pdg::is_connected(g))
    throw pdg::DataError("verification requires a connected graph "
                         "(route through largest_component first)");
  const auto alphas = parse_double_list(alphas_spec);
  const auto gammas = parse_double_list(gammas_spec);
  json report;

  // Theorem 1: non-negativity of P^(alpha,gamma); stochastic rows at alpha=1.
  {
    double min_entry = std::numeric_limits<double>::infinity();
    double max_rowsum_dev = 0.0;
    for (double a : alphas)
      for (double gm : gammas) {
        const Eigen::MatrixXd p =
            pdg::ParamAdjacency(g, pdg::LaplacianParams(a, gm)).dense();
        min_entry = std::min(min_entry, p.minCoeff());
        if (a == 1.0)
          max_rowsum_dev = std::max(
              max_rowsum_dev,
              (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
      }
    const bool pass = min_entry >= -1e-14 && max_rowsum_dev < 1e-12;
    report["theorem1"] = {{"pass", pass},
                          {"min_entry", min_entry},
                          {"max_rowsum_deviation", max_rowsum_dev}};
  }

  // Theorem 2: eigenvalue range and strict monotonicity in gamma.
  {
    std::vector<double> grid = gammas;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto rep = pdg::verify_monotonicity(g, grid);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double gm : grid) {
      const auto dec = pdg::eig_sym(g, gm);
      lo = std::min(lo, dec.eigenvalues.minCoeff());
      hi = std::max(hi, dec.eigenvalues.maxCoeff());
    }
    const bool range_ok = lo >= -1e-10 && hi <= 2.0 + 1e-10;
    report["theorem2"] = {{"pass", rep.pass && range_ok},
                          {"min_forward_difference", rep.min_forward_difference},
                          {"lambda_min", lo},
                          {"lambda_max", hi}};
  }

  // Theorem 3: sampled triples obey the order-preservation constant.
  {
    const double gm = gammas[gammas.size() / 2];
    const auto dec = pdg::eig_sym(g, gm);
    int checked = 0, violations = 0;
    bool skipped = dec.degenerate_lambda1;
    if (!skipped) {
      const auto view = pdg::eigvec_view(dec, 1.0);
      pdg::Rng rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
      const int n = g.num_nodes();
      for (int attempt = 0; attempt < 200 * triples && checked < triples;
           ++attempt) {
        const int i = static_cast<int>(rng.uniform_int(0, n - 1));
        const int j = static_cast<int>(rng.uniform_int(0, n - 1));
        const int m = static_cast<int>(rng.uniform_int(0, n - 1));
        if (i == j || m == j || m == i) continue;
        if (!(pdg::spectral_distance(view, m, j).value + 1e-6 <
              pdg::spectral_distance(view, i, j).value))
          continue;
        const double c = pdg::order_constant(view, i, j, m);
        const int t0 =
            std::isinf(c) ? 1 : std::max(1, static_cast<int>(std::floor(c)) + 1);
        for (int t = t0; t < t0 + 10; ++t)
          if (!(pdg::diffusion_distance(view, m, j, t) <
                pdg::diffusion_distance(view, i, j, t)))
            ++violations;
        ++checked;
      }
    }
    report["theorem3"] = {{"pass", violations == 0},
                          {"gamma", gm},
                          {"triples_checked", checked},
                          {"violations", violations},
                          {"skipped_degenerate", skipped}};
  }

  const bool all_pass = report["theorem1"]["pass"].get<bool>() &&
                        report["theorem2"]["pass"].get<bool>() &&
                        report["theorem3"]["pass"].get<bool>();
  report["pass"] = all_pass;
  const fs::path dir(out_dir);
  write_json(dir / "verify.json", report);
  std::cout << (all_pass ? "PASS" : "FAIL") << ": report at "
            << (dir / "verify.json").string() << "\n";
  return all_pass ? 0 : 3;
}

int cmd_metrics(const std::string& graph_path, const std::string& labels_path,
                int classes, const std::string& out_dir) {
  pdg::Graph g = pdg::load_edge_list(graph_path);
  const auto labels = load_labels(labels_path);
  if (static_cast<int>(labels.size()) != g.num_nodes())
    throw pdg::DataError("labels length does not match the graph");
  int c = classes;
  if (c <= 0) {
    c = 0;
    for (int z : labels) c = std::max(c, z + 1);
  }
  const auto rep = pdg::homophily_metrics(g, labels, c);
  const fs::path dir(out_dir);
  write_json(dir / "metrics.json", rep.to_json());
  std::cout << rep.to_json().dump(2) << "\n";
  return 0;
}

int cmd_rewire(const std::string& graph_path, double alpha, double gamma,
               const std::string& out_dir) {
  pdg::Graph g = pdg::load_edge_list(graph_path);
  auto res = pdg::rewire(g, pdg::LaplacianParams(alpha, gamma));
  const fs::path dir(out_dir);
  write_text(dir / "rewired.edges", pdg::to_edge_list(res.graph));
  write_json(dir / "rewire.json", res.report.to_json());
  std::cout << "added " << res.report.added_edges.size() << " edges; wrote "
            << (dir / "rewired.edges").string() << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              std::int64_t seed_override, const std::string& out_dir) {
  json cfg_json = load_json(config_path);
  if (seed_override >= 0) cfg_json["seed"] = static_cast<std::uint64_t>(seed_override);
  pdg::nn::ModelConfig cfg = pdg::nn::ModelConfig::from_json(cfg_json);
  pdg::Dataset data = pdg::load_bundle(data_dir);

  pdg::nn::Model model(cfg, data);
  pdg::nn::TrainReport rep = pdg::nn::train(model, data);

  const fs::path dir(out_dir);
  write_json(dir / "config.json", cfg.to_json());
  write_json(dir / "report.json", rep.to_json());
  write_text(dir / "curves.csv", rep.curves_csv());
  if (model.rewire_report())
    write_json(dir / "rewire.json", model.rewire_report()->to_json());
  std::ostringstream log;
  log << "arch=" << pdg::nn::to_string(cfg.arch) << " epochs=" << cfg.epochs
      << " wall_seconds=" << rep.wall_seconds << "\n";
  write_text(dir / "run.log", log.str());
  std::cout << "best_epoch=" << rep.best_epoch << " val=" << rep.best_val
            << " test=" << rep.test_at_best << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, std::int64_t seed_override,
              int threads, const std::string& out_dir) {
  json cfg_json = load_json(config_path);
  if (seed_override >= 0)
    cfg_json["seeds"] = {static_cast<std::uint64_t>(seed_override)};
  pdg::SweepProtocol proto = pdg::SweepProtocol::from_json(cfg_json);

  const auto t0 = std::chrono::steady_clock::now();
  pdg::SweepResult result = pdg::run_sweep(proto, threads);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int failed = 0;
  for (const auto& c : result.cells) failed += c.failed ? 1 : 0;

  const fs::path dir(out_dir);
  write_json(dir / "config.json", proto.to_json());
  write_text(dir / "sweep.csv", result.to_csv());
  write_json(dir / "summary.json", result.summary(proto));
  std::ostringstream log;
  log << "cells=" << result.cells.size() << " failed=" << failed
      << " wall_seconds=" << wall << "\n";
  write_text(dir / "run.log", log.str());
  std::cout << "sweep finished: " << result.cells.size() << " cells ("
            << failed << " failed); results in " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parameterized graph Laplacian toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = "out";
  std::int64_t seed = -1;
  int threads = 1;
  app.add_option("--out-dir", out_dir, "output directory for results");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "worker threads (sweep)");

  std::string gen_config;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset bundle");
  gen->add_option("--config", gen_config, "SynthConfig JSON")->required();

  std::string sp_graph, sp_mode = "dense";
  double sp_alpha = 0.5, sp_gamma = 1.0;
  int sp_k = 1;
  auto* spectral = app.add_subcommand("spectral", "eigendecomposition dump");
  spectral->add_option("--graph", sp_graph, "edge-list file")->required();
  spectral->add_option("--alpha", sp_alpha, "alpha in [0,1]");
  spectral->add_option("--gamma", sp_gamma, "gamma in (0,1]")->required();
  spectral->add_option("--k", sp_k, "non-trivial pairs (iterative mode)");
  spectral->add_option("--mode", sp_mode, "dense|iterative")
      ->check(CLI::IsMember({"dense", "iterative"}));

  std::string di_graph, di_pairs, di_ts = "1";
  double di_alpha = 1.0, di_gamma = 1.0;
  auto* distances = app.add_subcommand("distances", "diffusion/spectral distances");
  distances->add_option("--graph", di_graph)->required();
  distances->add_option("--alpha", di_alpha);
  distances->add_option("--gamma", di_gamma)->required();
  distances->add_option("--pairs", di_pairs, "node pairs \"i:j,i:j\"")->required();
  distances->add_option("--t", di_ts, "diffusion times, comma separated");

  std::string ve_graph, ve_alphas = "0,0.25,0.5,0.75,1";
  std::string ve_gammas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  int ve_triples = 100;
  auto* verify = app.add_subcommand("verify", "verify the spectral theorems");
  verify->add_option("--graph", ve_graph)->required();
  verify->add_option("--alphas", ve_alphas, "alpha grid");
  verify->add_option("--gammas", ve_gammas, "gamma grid");
  verify->add_option("--triples", ve_triples, "order-preservation samples");

  std::string me_graph, me_labels;
  int me_classes = 0;
  auto* metrics = app.add_subcommand("metrics", "homophily metrics report");
  metrics->add_option("--graph", me_graph)->required();
  metrics->add_option("--labels", me_labels, "one label per line")->required();
  metrics->add_option("--classes", me_classes, "class count (default: max+1)");

  std::string rw_graph;
  double rw_alpha = 1.0, rw_gamma = 1.0;
  auto* rewire_cmd = app.add_subcommand("rewire", "topology-guided rewiring");
  rewire_cmd->add_option("--graph", rw_graph)->required();
  rewire_cmd->add_option("--alpha", rw_alpha);
  rewire_cmd->add_option("--gamma", rw_gamma)->required();

  std::string tr_data, tr_config;
  auto* train_cmd = app.add_subcommand("train", "train a model on a bundle");
  train_cmd->add_option("--data", tr_data, "dataset bundle directory")->required();
  train_cmd->add_option("--config", tr_config, "ModelConfig JSON")->required();

  std::string sw_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "gamma sweep over synthetic graphs");
  sweep_cmd->add_option("--config", sw_config, "SweepProtocol JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors map to exit 1
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_config, out_dir, seed);
    if (spectral->parsed())
      return cmd_spectral(sp_graph, sp_alpha, sp_gamma, sp_k, sp_mode, out_dir);
    if (distances->parsed())
      return cmd_distances(di_graph, di_alpha, di_gamma, di_pairs, di_ts, out_dir);
    if (verify->parsed())
      return cmd_verify(ve_graph, ve_alphas, ve_gammas, ve_triples, seed, out_dir);
    if (metrics->parsed())
      return cmd_metrics(me_graph, me_labels, me_classes, out_dir);
    if (rewire_cmd->parsed())
      return cmd_rewire(rw_graph, rw_alpha, rw_gamma, out_dir);
    if (train_cmd->parsed()) return cmd_train(tr_data, tr_config, seed, out_dir);
    if (sweep_cmd->parsed()) return cmd_sweep(sw_config, seed, threads, out_dir);
  } catch (const pdg::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const pdg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const pdg::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
