#include "proxci/discretize.hpp"

#include "proxci/error.hpp"

#include <algorithm>
#include <cmath>

namespace proxci {

int bin_of(double value, const std::vector<double>& edges) {
    const int bins = static_cast<int>(edges.size()) - 1;
    // First interior edge >= value; its position is the label.
    const auto it = std::lower_bound(edges.begin() + 1, edges.end() - 1, value);
    return std::min(static_cast<int>(it - (edges.begin() + 1)), bins - 1);
}

std::vector<int> apply_edges(const Eigen::Ref<const Eigen::VectorXd>& column, const std::vector<double>& edges) {
    require(edges.size() >= 3, ErrorKind::Precondition, "need at least two bins");
    std::vector<int> labels(static_cast<std::size_t>(column.size()));
    for (Eigen::Index r = 0; r < column.size(); ++r) {
        require(std::isfinite(column(r)), ErrorKind::NonFinite, "non-finite value in binned column");
        labels[static_cast<std::size_t>(r)] = bin_of(column(r), edges);
    }
    return labels;
}

BinnedColumn discretize(const Eigen::Ref<const Eigen::VectorXd>& column, const BinningSpec& spec) {
    const int B = spec.bins;
    const auto n = column.size();
    require(B >= 2, ErrorKind::Precondition, "bin count must be at least 2");
    require(n >= B, ErrorKind::Precondition,
            "column has " + std::to_string(n) + " values, fewer than " + std::to_string(B) + " bins");
    require(column.allFinite(), ErrorKind::NonFinite, "non-finite value in column to discretize");

    std::vector<double> sorted(column.data(), column.data() + n);
    std::sort(sorted.begin(), sorted.end());
    BinnedColumn out;
    out.edges.resize(static_cast<std::size_t>(B) + 1);
    out.edges.front() = sorted.front();
    out.edges.back() = sorted.back();
    if (spec.strategy == BinStrategy::Quantile) {
        for (int k = 1; k < B; ++k) {
            const long long rank = (static_cast<long long>(k) * n + B - 1) / B;  // ceil(k n / B)
            out.edges[static_cast<std::size_t>(k)] = sorted[static_cast<std::size_t>(rank - 1)];
        }
    } else {
        const double width = (sorted.back() - sorted.front()) / B;
        for (int k = 1; k < B; ++k) out.edges[static_cast<std::size_t>(k)] = sorted.front() + k * width;
    }
    for (int k = 0; k < B; ++k) {
        require(out.edges[static_cast<std::size_t>(k)] < out.edges[static_cast<std::size_t>(k) + 1],
                ErrorKind::TooFewDistinctValues,
                "cannot form " + std::to_string(B) + " bins: duplicate edges from tied values");
    }
    out.labels = apply_edges(column, out.edges);
    out.counts.assign(static_cast<std::size_t>(B), 0);
    for (int l : out.labels) ++out.counts[static_cast<std::size_t>(l)];
    return out;
}

}  // namespace proxci
