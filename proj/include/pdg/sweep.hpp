#pragma once

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/dataset.hpp"
#include "pdg/nn/model.hpp"
#include "pdg/nn/train.hpp"
#include "pdg/stats.hpp"
#include "pdg/synthgen.hpp"

namespace pdg {

/// The gamma-sweep experiment: for each homophily level mu and seed, train
/// each architecture over the gamma grid (parameterized archs) or once
/// (baselines) on a shared synthetic dataset.
struct SweepProtocol {
  std::vector<double> mus;
  std::vector<double> gammas;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> archs{"pd-gcn", "gcn"};
  double alpha = 1.0;
  int n = 600;
  int c = 5;
  int m = 2;
  int feature_dim = 2;
  int restarts = 3;  ///< deterministic model restarts averaged per cell
  nn::ModelConfig model;  ///< shared hyperparameters (arch/params overridden per cell)

  void validate() const {
    if (mus.empty() || seeds.empty() || archs.empty())
      throw DataError("sweep protocol needs mus, seeds and archs");
    if (gammas.empty()) throw DataError("sweep protocol needs a gamma grid");
    for (double g : gammas)
      if (!(g > 0.0 && g <= 1.0)) throw DataError("gamma grid must lie in (0, 1]");
    for (double mu : mus)
      if (!(mu >= 0.0 && mu <= 1.0)) throw DataError("mu grid must lie in [0, 1]");
    if (restarts < 1) throw DataError("restarts must be positive");
  }

  static SweepProtocol from_json(const nlohmann::json& j) {
    SweepProtocol p;
    if (!j.contains("mus")) throw UsageError("sweep config: missing mus");
    p.mus = j.at("mus").get<std::vector<double>>();
    if (j.contains("gammas")) {
      p.gammas = j.at("gammas").get<std::vector<double>>();
    } else {
      for (int i = 1; i <= 10; ++i) p.gammas.push_back(0.1 * i);
    }
    if (j.contains("seeds"))
      p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    else
      p.seeds = {1, 2, 3};
    if (j.contains("archs")) p.archs = j.at("archs").get<std::vector<std::string>>();
    p.alpha = j.value("alpha", 1.0);
    p.n = j.value("n", 600);
    p.c = j.value("c", 5);
    p.m = j.value("m", 2);
    p.feature_dim = j.value("feature_dim", 2);
    p.restarts = j.value("restarts", 3);
    nlohmann::json mj = j.value("model", nlohmann::json::object());
    mj["arch"] = "gcn";  // placeholder; overridden per cell
    p.model = nn::ModelConfig::from_json(mj);
    p.validate();
    return p;
  }

  nlohmann::json to_json() const {
    return {{"mus", mus},       {"gammas", gammas},
            {"seeds", seeds},   {"archs", archs},
            {"alpha", alpha},   {"n", n},
            {"c", c},           {"m", m},
            {"feature_dim", feature_dim},
            {"restarts", restarts},
            {"model", model.to_json()}};
  }
};

struct SweepCell {
  std::string arch;
  double mu = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();  ///< NaN for baselines
  std::uint64_t seed = 0;
  double test_metric = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  ///< ordered by grid index

  std::string to_csv() const {
    std::ostringstream out;
    out << "arch,mu,gamma,seed,test_metric,status\n";
    for (const auto& c : cells) {
      out << c.arch << ',' << format_double(c.mu) << ',';
      if (!std::isnan(c.gamma)) out << format_double(c.gamma);
      out << ',' << c.seed << ',' << format_double(c.test_metric) << ','
          << (c.failed ? "failed" : "ok") << '\n';
    }
    return out.str();
  }

  /// Mean test metric per (arch, mu, gamma); baselines keyed with gamma NaN
  /// folded to -1.
  nlohmann::json summary(const SweepProtocol& proto) const {
    nlohmann::json out;
    for (const std::string& arch : proto.archs) {
      const bool pd = nn::is_parameterized(nn::arch_from_string(arch));
      nlohmann::json arch_out;
      std::vector<double> mu_list, best_gamma_list;
      std::map<int, std::vector<double>> acc_by_gamma;  // gamma idx -> per-mu means

      for (std::size_t mi = 0; mi < proto.mus.size(); ++mi) {
        nlohmann::json mu_out;
        mu_out["mu"] = proto.mus[mi];
        if (pd) {
          double best_mean = -std::numeric_limits<double>::infinity();
          double best_gamma = 0.0;
          nlohmann::json per_gamma = nlohmann::json::array();
          for (std::size_t gi = 0; gi < proto.gammas.size(); ++gi) {
            std::vector<double> vals = collect(arch, proto.mus[mi], proto.gammas[gi]);
            const double m = mean(vals);
            per_gamma.push_back({{"gamma", proto.gammas[gi]},
                                 {"mean", m},
                                 {"std", stddev(vals)}});
            acc_by_gamma[static_cast<int>(gi)].push_back(m);
            if (m > best_mean + 1e-15) {  // ties keep the smaller gamma
              best_mean = m;
              best_gamma = proto.gammas[gi];
            }
          }
          mu_out["per_gamma"] = per_gamma;
          mu_out["best_gamma"] = best_gamma;
          mu_out["best_mean"] = best_mean;
          mu_list.push_back(proto.mus[mi]);
          best_gamma_list.push_back(best_gamma);
        } else {
          std::vector<double> vals = collect(arch, proto.mus[mi],
                                             std::numeric_limits<double>::quiet_NaN());
          mu_out["mean"] = mean(vals);
          mu_out["std"] = stddev(vals);
        }
        arch_out["per_mu"].push_back(mu_out);
      }
      if (pd && mu_list.size() >= 2) {
        arch_out["spearman_mu_best_gamma"] = spearman(mu_list, best_gamma_list);
        nlohmann::json per_gamma_rank = nlohmann::json::array();
        for (std::size_t gi = 0; gi < proto.gammas.size(); ++gi) {
          per_gamma_rank.push_back(
              {{"gamma", proto.gammas[gi]},
               {"spearman_mu_accuracy",
                spearman(mu_list, acc_by_gamma[static_cast<int>(gi)])}});
        }
        arch_out["per_gamma_rank_correlation"] = per_gamma_rank;
      }
      out[arch] = arch_out;
    }
    return out;
  }

  std::vector<double> collect(const std::string& arch, double mu, double gamma) const {
    std::vector<double> vals;
    for (const auto& c : cells) {
      if (c.failed || c.arch != arch || c.mu != mu) continue;
      if (std::isnan(gamma) != std::isnan(c.gamma)) continue;
      if (!std::isnan(gamma) && c.gamma != gamma) continue;
      vals.push_back(c.test_metric);
    }
    if (vals.empty()) throw DataError("sweep summary: empty cell group");
    return vals;
  }
};

/// Runs every cell of the sweep grid. Cells execute in a worker pool but each
/// cell is internally deterministic and results are assembled by grid index,
/// so the output is identical for any thread count.
inline SweepResult run_sweep(const SweepProtocol& proto, int threads = 1,
                             std::ostream* log = nullptr) {
  proto.validate();

  // Enumerate cells in fixed grid order.
  struct CellPlan {
    std::string arch;
    std::size_t mu_idx;
    std::size_t seed_idx;
    double gamma;  // NaN for baselines
  };
  std::vector<CellPlan> plan;
  for (const std::string& arch : proto.archs) {
    const bool pd = nn::is_parameterized(nn::arch_from_string(arch));
    for (std::size_t mi = 0; mi < proto.mus.size(); ++mi)
      for (std::size_t si = 0; si < proto.seeds.size(); ++si) {
        if (pd) {
          for (double g : proto.gammas) plan.push_back({arch, mi, si, g});
        } else {
          plan.push_back({arch, mi, si,
                          std::numeric_limits<double>::quiet_NaN()});
        }
      }
  }

  // Datasets are shared across gammas and archs of the same (mu, seed).
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const Dataset>> data;
  for (std::size_t mi = 0; mi < proto.mus.size(); ++mi)
    for (std::size_t si = 0; si < proto.seeds.size(); ++si) {
      SynthConfig sc;
      sc.n = proto.n;
      sc.c = proto.c;
      sc.mu = proto.mus[mi];
      sc.m = proto.m;
      sc.feature_dim = proto.feature_dim;
      sc.seed = proto.seeds[si];
      data[{mi, si}] = std::make_shared<const Dataset>(generate(sc).dataset);
    }

  SweepResult result;
  result.cells.resize(plan.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) break;
      const CellPlan& p = plan[i];
      SweepCell cell;
      cell.arch = p.arch;
      cell.mu = proto.mus[p.mu_idx];
      cell.gamma = p.gamma;
      cell.seed = proto.seeds[p.seed_idx];
      try {
        nn::ModelConfig cfg = proto.model;
        cfg.arch = nn::arch_from_string(p.arch);
        if (!std::isnan(p.gamma))
          cfg.params = LaplacianParams(proto.alpha, p.gamma);
        // The cell metric averages a few deterministic restarts. Restart
        // seeds depend only on the dataset seed, so every arch and gamma on
        // one dataset trains from the same initializations (paired draws).
        double acc = 0.0;
        for (int r = 0; r < proto.restarts; ++r) {
          cfg.seed = splitmix64(proto.seeds[p.seed_idx] + 0x9e37 * r);
          acc += nn::train(cfg, *data.at({p.mu_idx, p.seed_idx})).test_at_best;
        }
        cell.test_metric = acc / proto.restarts;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      result.cells[i] = std::move(cell);
      ++done;
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (log != nullptr)
    *log << "sweep: " << done.load() << " cells finished\n";
  return result;
}

}  // namespace pdg
