#pragma once

#include "proxci/dataset.hpp"
#include "proxci/discovery.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <vector>

namespace proxci {

// gamma^-1 = median of pairwise squared distances between rows of `points`,
// over a stride subsample of at most `cap` rows.
double median_trick(const Eigen::MatrixXd& points, Eigen::Index cap = 2000);

// k(x, x') = exp(-gamma * |x - x'|^2) between rows of X and Xp.
Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, double gamma);

// Gaussian kernel on standardized inputs: columns are centered and scaled
// by their sample standard deviation, then one median-trick bandwidth is
// shared by all coordinates.
struct GaussianKernel {
    Eigen::RowVectorXd center;
    Eigen::RowVectorXd scale;
    double gamma = 1.0;

    static GaussianKernel fit(const Eigen::MatrixXd& points);
    Eigen::MatrixXd standardize(const Eigen::MatrixXd& points) const;
    Eigen::MatrixXd operator()(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp) const;
};

struct KernelConfig {
    double lambda_h = 0.2;
    double lambda_q = 0.2;
};

// Tabulated regularizers for the benchmark targets of the five-treatment,
// four-outcome model; 0.2 for anything else.
KernelConfig default_kernel_config(const std::vector<int>& S, int j);

// Penalized moment-restriction objective for a bridge b = c + K alpha fitted
// to target t with residual kernel R:
//   (1/n^2) (t~ - K alpha)^T R (t~ - K alpha) + lambda alpha^T K alpha
// where t~ = t - c. Its minimizer solves (R K + n^2 lambda I) alpha = R t~.
double pmmr_objective(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                      double lambda, const Eigen::VectorXd& alpha);
Eigen::VectorXd pmmr_gradient(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                              double lambda, const Eigen::VectorXd& alpha);
Eigen::VectorXd solve_pmmr(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                           double lambda);

enum class BridgeKind { OutcomeH, TreatmentQ };

// b(a, v) = offset + sum_i alpha_i k((a_i, v_i), (a, v)).
struct BridgeModel {
    BridgeKind kind = BridgeKind::OutcomeH;
    GaussianKernel kernel;
    Eigen::MatrixXd anchors;  // rows (dose..., proxy), raw scale
    Eigen::VectorXd alpha;
    double offset = 0.0;
    double lambda = 0.2;

    int dose_dims() const { return static_cast<int>(anchors.cols()) - 1; }
    double predict(const Eigen::VectorXd& dose, double proxy) const;
    // One prediction per row of `proxies`, all at the same dose.
    Eigen::VectorXd predict_at(const Eigen::VectorXd& dose, const Eigen::VectorXd& proxies) const;
};

nlohmann::json to_json(const BridgeModel& model);
BridgeModel bridge_from_json(const nlohmann::json& doc);

struct PropensityEstimate {
    Eigen::VectorXd values;  // p(a_i | w_i), floored
    double bandwidth_a = 0.0;
    double bandwidth_w = 0.0;
    std::vector<bool> floored;
    double floor = 1e-3;
};

// Conditional KDE sum_j K_ba(a - a_j) K_bw(w - w_j) / sum_j K_bw(w - w_j), a
// product kernel over the dose coordinates. Both bandwidths come from a 3-fold
// (contiguous blocks) cross-validated log-likelihood over 20 log-spaced values
// in [0.1, 1], on the raw scale.
PropensityEstimate estimate_propensity(const Eigen::MatrixXd& dose, const Eigen::VectorXd& w, double floor = 1e-3);
PropensityEstimate estimate_propensity(const Dataset& data, const std::vector<int>& S, const VariableId& w);

BridgeModel fit_outcome_bridge(const Dataset& data, const ProxyAssignment& proxies, const KernelConfig& config);
BridgeModel fit_treatment_bridge(const Dataset& data, const ProxyAssignment& proxies, const KernelConfig& config,
                                 const PropensityEstimate& propensity);

}  // namespace proxci
