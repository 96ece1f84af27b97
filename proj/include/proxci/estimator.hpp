#pragma once

#include "proxci/bridge.hpp"
#include "proxci/curve.hpp"
#include "proxci/dataset.hpp"
#include "proxci/discovery.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace proxci {

// Bridge evaluated at one dose for a vector of proxy values.
using BridgeFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& dose, const Eigen::VectorXd& proxy)>;

BridgeFn as_function(const BridgeModel& model);

// 1.5 * sample sd * n^(-1/5).
double bandwidth_rule(const Eigen::Ref<const Eigen::VectorXd>& column);

struct PointEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long matched = 0;  // samples with nonzero weight (indicator variant)
    std::string warning;
};

// Mean over samples of K_h(A - a) q(a, Z) (Y - h(a, W)) + h(a, W), with K_h a
// product of Gaussian densities over the treated coordinates. An empty q
// drops the correction term.
PointEstimate pkdr_estimate(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h,
                            const BridgeFn& q, const Eigen::VectorXd& dose, const std::vector<double>& bandwidth);

// Indicator variant for discrete doses: 1(A = a) in place of the kernel.
// With no matching sample the h-only mean is returned with a warning.
PointEstimate pdr_estimate(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h,
                           const BridgeFn& q, const Eigen::VectorXd& dose);

// pkdr_estimate at each grid point; bandwidths default to bandwidth_rule per
// treated coordinate when `bandwidth` is empty.
EffectCurve effect_curve(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h, const BridgeFn& q,
                         const std::vector<Eigen::VectorXd>& grid, std::vector<double> bandwidth = {},
                         unsigned jobs = 1);

double cmae(const EffectCurve& estimate, const EffectCurve& truth);

void write_curve_csv(std::ostream& out, const EffectCurve& curve);
// Line chart of the estimate, with the truth overlaid when given.
std::string curve_svg(const EffectCurve& curve, const EffectCurve* truth = nullptr, const std::string& title = "");

}  // namespace proxci
