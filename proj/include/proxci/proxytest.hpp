#pragma once

#include "proxci/dataset.hpp"
#include "proxci/discretize.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <vector>

namespace proxci {

// Bin counts for the tested treatment (M), proxy treatment (N) and outcome (L).
struct TestBins {
    int M = 15;
    int N = 8;
    int L = 5;
    BinStrategy strategy = BinStrategy::Quantile;
};

struct ProbabilityTables {
    int M = 0, N = 0, L = 0;
    long n = 0;
    std::vector<long> bin_counts;  // n_m
    // Q(k, m) = P(proxy bin k | treatment bin m); columns sum to one.
    Eigen::MatrixXd Q;
    // q(l * M + m) = P(outcome level l | treatment bin m) for l < L - 1.
    Eigen::VectorXd q;
};

struct TestDiagnostics {
    long min_bin_count = 0;
    double condition_number = 0.0;  // of the covariance after jitter
    int design_rank = 0;
    bool rank_deficient = false;
};

struct TestResult {
    int i = -1, j = -1, proxy = -1;
    int M = 0, N = 0, L = 0;
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool reject = false;
    TestDiagnostics diagnostics;
};

ProbabilityTables build_tables(const BinnedColumn& a, const BinnedColumn& proxy, const BinnedColumn& y);

// Plug-in multinomial covariance of sqrt(n)(q_hat - q): block-diagonal over
// treatment bins, block m = (diag(p) - p p^T) * n / n_m over the first L-1
// levels, plus a ridge of 1e-8 * trace / dim.
Eigen::MatrixXd estimate_covariance(const ProbabilityTables& tables, long min_count = 5);

// Symmetric inverse square root with eigenvalues floored at 1e-12 * max.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma, double* condition_number = nullptr);

// kron(I_{L-1}, Q^T): the proxy design repeated over outcome levels.
Eigen::MatrixXd proxy_design(const ProbabilityTables& tables);

struct Projection {
    Eigen::MatrixXd projector;  // onto the span of the whitened design
    Eigen::VectorXd residual;   // (I - projector) * whitened q
    int rank = 0;
};

// Projection of r onto the columns of `design`; singular values below
// 1e-5 * max are treated as zero.
Projection project_out(const Eigen::MatrixXd& design, const Eigen::VectorXd& r);

TestResult projection_statistic(const ProbabilityTables& tables, const Eigen::MatrixXd& sigma, long n,
                                double alpha = 0.05);

// Discretize A_i, A_proxy and Y_j with `bins` and run the test of
// A_i independent of Y_j given the latent confounder.
TestResult test_edge(const Dataset& data, int i, int j, int proxy, const TestBins& bins = {},
                     double alpha = 0.05);

// Upper tail of the chi-square distribution with k degrees of freedom.
double chi_square_sf(double x, double k);

nlohmann::json to_json(const TestResult& result);

}  // namespace proxci
