#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/graph.hpp"

namespace pdg {

/// Shortest round-tripping decimal form of a double (deterministic output).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// A node-classification dataset: graph, features, labels and disjoint,
/// exhaustive train/val/test masks.
struct Dataset {
  Graph graph;
  Eigen::MatrixXd features;       ///< n x feature_dim
  std::vector<int> labels;        ///< length n, values in [0, num_classes)
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;
  int num_classes = 0;

  int num_nodes() const { return graph.num_nodes(); }

  void check() const {
    const int n = num_nodes();
    if (features.rows() != n || static_cast<int>(labels.size()) != n ||
        static_cast<int>(train_mask.size()) != n ||
        static_cast<int>(val_mask.size()) != n ||
        static_cast<int>(test_mask.size()) != n)
      throw DataError("dataset arrays disagree on node count");
    for (int i = 0; i < n; ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes)
        throw DataError("label out of range at node " + std::to_string(i));
      if (train_mask[i] + val_mask[i] + test_mask[i] != 1)
        throw DataError("masks must be disjoint and exhaustive");
    }
  }

  std::vector<int> mask_indices(const std::vector<std::uint8_t>& mask) const {
    std::vector<int> idx;
    for (int i = 0; i < num_nodes(); ++i)
      if (mask[i]) idx.push_back(i);
    return idx;
  }
};

namespace detail {

inline std::vector<std::uint8_t> mask_from_indices(const nlohmann::json& arr, int n) {
  std::vector<std::uint8_t> mask(n, 0);
  for (const auto& v : arr) {
    const int i = v.get<int>();
    if (i < 0 || i >= n) throw DataError("split index out of range");
    mask[i] = 1;
  }
  return mask;
}

}  // namespace detail

/// Writes the bundle files graph.edges, features.csv, labels.txt and
/// splits.json into dir; the caller adds meta.json. Output is byte-stable
/// for identical inputs.
inline void save_bundle(const Dataset& ds, const std::filesystem::path& dir) {
  ds.check();
  std::filesystem::create_directories(dir);
  save_edge_list(ds.graph, (dir / "graph.edges").string());

  {
    std::ofstream out(dir / "features.csv", std::ios::binary);
    for (int i = 0; i < ds.features.rows(); ++i) {
      for (int j = 0; j < ds.features.cols(); ++j) {
        if (j) out << ',';
        out << format_double(ds.features(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt", std::ios::binary);
    for (int z : ds.labels) out << z << '\n';
  }
  {
    nlohmann::json splits;
    splits["train"] = ds.mask_indices(ds.train_mask);
    splits["val"] = ds.mask_indices(ds.val_mask);
    splits["test"] = ds.mask_indices(ds.test_mask);
    std::ofstream out(dir / "splits.json", std::ios::binary);
    out << splits.dump(2) << '\n';
  }
}

inline Dataset load_bundle(const std::filesystem::path& dir) {
  Dataset ds;
  ds.graph = load_edge_list((dir / "graph.edges").string());
  const int n = ds.graph.num_nodes();

  {
    std::ifstream in(dir / "features.csv");
    if (!in) throw DataError("cannot open features.csv in " + dir.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != n)
      throw DataError("features.csv row count does not match the graph");
    const auto dim = rows.empty() ? 0 : rows[0].size();
    ds.features.resize(n, static_cast<Eigen::Index>(dim));
    for (int i = 0; i < n; ++i) {
      if (rows[i].size() != dim) throw DataError("ragged features.csv");
      for (std::size_t j = 0; j < dim; ++j) ds.features(i, j) = rows[i][j];
    }
  }
  {
    std::ifstream in(dir / "labels.txt");
    if (!in) throw DataError("cannot open labels.txt in " + dir.string());
    int z;
    while (in >> z) ds.labels.push_back(z);
    if (static_cast<int>(ds.labels.size()) != n)
      throw DataError("labels.txt length does not match the graph");
  }
  {
    std::ifstream in(dir / "splits.json");
    if (!in) throw DataError("cannot open splits.json in " + dir.string());
    nlohmann::json splits = nlohmann::json::parse(in);
    ds.train_mask = detail::mask_from_indices(splits.at("train"), n);
    ds.val_mask = detail::mask_from_indices(splits.at("val"), n);
    ds.test_mask = detail::mask_from_indices(splits.at("test"), n);
  }
  ds.num_classes = 0;
  for (int z : ds.labels) ds.num_classes = std::max(ds.num_classes, z + 1);
  ds.check();
  return ds;
}

}  // namespace pdg
