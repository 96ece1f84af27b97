#pragma once

// Small builders shared by the unit and acceptance tests.

#include "proxci/discretize.hpp"
#include "proxci/proxytest.hpp"

#include <random>
#include <vector>

namespace fixture {

// BinnedColumn from raw labels; edges are the label values themselves.
inline proxci::BinnedColumn labelled(const std::vector<int>& labels, int bins) {
    proxci::BinnedColumn b;
    b.labels = labels;
    b.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int l : labels) ++b.counts[static_cast<std::size_t>(l)];
    for (int k = 0; k <= bins; ++k) b.edges.push_back(k);
    return b;
}

// Tables from n random draws where the proxy and the outcome both depend on
// the treatment bin, so Q has full column rank with probability one.
inline proxci::ProbabilityTables random_tables(std::mt19937_64& gen, int M, int N, int L, long n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> proxy_w(static_cast<std::size_t>(M)), level_w(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < N; ++k) proxy_w[static_cast<std::size_t>(m)].push_back(0.2 + unif(gen));
        for (int l = 0; l < L; ++l) level_w[static_cast<std::size_t>(m)].push_back(0.2 + unif(gen));
    }
    std::vector<int> a, w, y;
    for (long r = 0; r < n; ++r) {
        const int m = static_cast<int>(r % M);
        std::discrete_distribution<int> pw(proxy_w[static_cast<std::size_t>(m)].begin(),
                                           proxy_w[static_cast<std::size_t>(m)].end());
        std::discrete_distribution<int> py(level_w[static_cast<std::size_t>(m)].begin(),
                                           level_w[static_cast<std::size_t>(m)].end());
        a.push_back(m);
        w.push_back(pw(gen));
        y.push_back(py(gen));
    }
    // Make sure every proxy and outcome level appears at least once.
    for (int k = 0; k < N; ++k) w[static_cast<std::size_t>(k)] = k;
    for (int l = 0; l < L; ++l) y[static_cast<std::size_t>(l)] = l;
    return proxci::build_tables(labelled(a, M), labelled(w, N), labelled(y, L));
}

}  // namespace fixture
