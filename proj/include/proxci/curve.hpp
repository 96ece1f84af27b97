#pragma once

#include <Eigen/Dense>

#include <vector>

namespace proxci {

// Dose-response curve: one estimate per dose vector on the grid.
struct EffectCurve {
    std::vector<Eigen::VectorXd> grid;
    std::vector<double> estimates;
    // Per-point standard errors when the producer knows them (Monte Carlo
    // truth, kernel estimator); empty otherwise.
    std::vector<double> std_errors;
    long n_used = 0;
    // Kernel bandwidth per treated coordinate (kernel estimator only).
    std::vector<double> bandwidth;
};

// `count` equally spaced scalar doses in [lo, hi].
std::vector<Eigen::VectorXd> linear_grid(double lo, double hi, int count);

// Default benchmark grid: 10 equally spaced points in [0, 1], replicated
// across `dims` treated coordinates.
std::vector<Eigen::VectorXd> default_grid(int dims = 1);

}  // namespace proxci
