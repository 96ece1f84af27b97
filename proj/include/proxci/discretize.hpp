#pragma once

#include <Eigen/Dense>

#include <vector>

namespace proxci {

enum class BinStrategy { Quantile, Uniform };

struct BinningSpec {
    BinStrategy strategy = BinStrategy::Quantile;
    int bins = 2;
};

struct BinnedColumn {
    std::vector<int> labels;
    std::vector<double> edges;  // bins + 1 cut points
    std::vector<long> counts;

    int bins() const { return static_cast<int>(counts.size()); }
};

// Bins are (e_k, e_{k+1}] with the lowest bin also closed at e_0. Quantile
// edges are order statistics x_(ceil(k n / B)), so with distinct values every
// bin holds floor or ceil of n / B samples.
BinnedColumn discretize(const Eigen::Ref<const Eigen::VectorXd>& column, const BinningSpec& spec);

// Label new values with existing edges; values outside the training range
// go to the boundary bins.
std::vector<int> apply_edges(const Eigen::Ref<const Eigen::VectorXd>& column, const std::vector<double>& edges);
int bin_of(double value, const std::vector<double>& edges);

}  // namespace proxci
