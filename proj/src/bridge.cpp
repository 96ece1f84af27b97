#include "proxci/bridge.hpp"

#include "proxci/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace proxci {

double median_trick(const Eigen::MatrixXd& points, Eigen::Index cap) {
    const Eigen::Index n = points.rows();
    require(n >= 2, ErrorKind::DegenerateInput, "median trick needs at least two points");
    const Eigen::Index stride = (n + cap - 1) / cap;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < n; r += stride) rows.push_back(r);
    std::vector<double> d2;
    d2.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            d2.push_back((points.row(rows[a]) - points.row(rows[b])).squaredNorm());
        }
    }
    require(!d2.empty(), ErrorKind::DegenerateInput, "median trick needs at least two points");
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double median = d2[mid];
    if (d2.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    require(median > 0.0, ErrorKind::DegenerateInput, "median pairwise distance is zero");
    return median;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp, double gamma) {
    require(X.cols() == Xp.cols(), ErrorKind::DimensionMismatch, "kernel inputs differ in dimension");
    const Eigen::VectorXd xn = X.rowwise().squaredNorm();
    const Eigen::VectorXd yn = Xp.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * X * Xp.transpose();
    d2.colwise() += xn;
    d2.rowwise() += yn.transpose();
    return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

GaussianKernel GaussianKernel::fit(const Eigen::MatrixXd& points) {
    require(points.rows() >= 2, ErrorKind::DegenerateInput, "kernel needs at least two points");
    GaussianKernel k;
    k.center = points.colwise().mean();
    const Eigen::MatrixXd centered = points.rowwise() - k.center;
    k.scale = (centered.colwise().squaredNorm() / static_cast<double>(points.rows() - 1)).cwiseSqrt();
    for (Eigen::Index c = 0; c < k.scale.size(); ++c) {
        require(k.scale(c) > 0.0, ErrorKind::DegenerateInput, "kernel input column has zero variance");
    }
    k.gamma = 1.0 / median_trick(k.standardize(points));
    return k;
}

Eigen::MatrixXd GaussianKernel::standardize(const Eigen::MatrixXd& points) const {
    require(points.cols() == center.size(), ErrorKind::DimensionMismatch, "kernel input has wrong dimension");
    return (points.rowwise() - center).array().rowwise() / scale.array();
}

Eigen::MatrixXd GaussianKernel::operator()(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xp) const {
    return gram(standardize(X), standardize(Xp), gamma);
}

KernelConfig default_kernel_config(const std::vector<int>& S, int j) {
    std::vector<int> s = S;
    std::sort(s.begin(), s.end());
    if (s == std::vector<int>{2} && j == 0) return {0.05, 0.20};
    if (s == std::vector<int>{1} && j == 1) return {0.20, 1.00};
    if (s == std::vector<int>{0, 2} && j == 0) return {0.20, 1.00};
    if (s == std::vector<int>{0, 4} && j == 3) return {0.20, 0.20};
    return {0.2, 0.2};
}

double pmmr_objective(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                      double lambda, const Eigen::VectorXd& alpha) {
    const double n = static_cast<double>(target.size());
    const Eigen::VectorXd resid = target - K * alpha;
    return resid.dot(R * resid) / (n * n) + lambda * alpha.dot(K * alpha);
}

Eigen::VectorXd pmmr_gradient(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                              double lambda, const Eigen::VectorXd& alpha) {
    const double n = static_cast<double>(target.size());
    const Eigen::VectorXd resid = target - K * alpha;
    return 2.0 * (K * (lambda * alpha - R * resid / (n * n)));
}

Eigen::VectorXd solve_pmmr(const Eigen::MatrixXd& R, const Eigen::MatrixXd& K, const Eigen::VectorXd& target,
                           double lambda) {
    const Eigen::Index n = target.size();
    require(R.rows() == n && R.cols() == n && K.rows() == n && K.cols() == n, ErrorKind::DimensionMismatch,
            "kernel matrices do not match the target length");
    require(lambda > 0.0, ErrorKind::Precondition, "regularizer must be positive");
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    Eigen::MatrixXd system = R * K;
    system.diagonal().array() += n2 * lambda;
    const Eigen::VectorXd rhs = R * target;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd alpha = lu.solve(rhs);
    for (int step = 0; step < 3 && alpha.allFinite(); ++step) alpha += lu.solve(rhs - system * alpha);
    const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
    if (!alpha.allFinite() || (system * alpha - rhs).norm() > 1e-8 * scale) {
        alpha = system.completeOrthogonalDecomposition().solve(rhs);
        require(alpha.allFinite(), ErrorKind::SingularSystem, "bridge system could not be solved");
    }
    return alpha;
}

double BridgeModel::predict(const Eigen::VectorXd& dose, double proxy) const {
    return predict_at(dose, Eigen::VectorXd::Constant(1, proxy))(0);
}

Eigen::VectorXd BridgeModel::predict_at(const Eigen::VectorXd& dose, const Eigen::VectorXd& proxies) const {
    require(dose.size() == dose_dims(), ErrorKind::DimensionMismatch, "dose has wrong dimension for bridge");
    Eigen::MatrixXd query(proxies.size(), anchors.cols());
    query.leftCols(dose.size()).rowwise() = dose.transpose();
    query.rightCols(1) = proxies;
    return (kernel(query, anchors) * alpha).array() + offset;
}

nlohmann::json to_json(const BridgeModel& m) {
    std::vector<std::vector<double>> anchors(static_cast<std::size_t>(m.anchors.rows()));
    for (Eigen::Index r = 0; r < m.anchors.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.anchors.cols(); ++c) anchors[static_cast<std::size_t>(r)].push_back(m.anchors(r, c));
    }
    const auto vec = [](const auto& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"kind", m.kind == BridgeKind::OutcomeH ? "outcome-h" : "treatment-q"},
            {"gamma", m.kernel.gamma},
            {"center", vec(m.kernel.center)},
            {"scale", vec(m.kernel.scale)},
            {"lambda", m.lambda},
            {"offset", m.offset},
            {"anchors", anchors},
            {"alpha", vec(m.alpha)}};
}

BridgeModel bridge_from_json(const nlohmann::json& doc) {
    try {
        BridgeModel m;
        const std::string kind = doc.at("kind").get<std::string>();
        require(kind == "outcome-h" || kind == "treatment-q", ErrorKind::Parse, "unknown bridge kind '" + kind + "'");
        m.kind = kind == "outcome-h" ? BridgeKind::OutcomeH : BridgeKind::TreatmentQ;
        m.kernel.gamma = doc.at("gamma").get<double>();
        const auto center = doc.at("center").get<std::vector<double>>();
        const auto scale = doc.at("scale").get<std::vector<double>>();
        m.kernel.center = Eigen::Map<const Eigen::RowVectorXd>(center.data(), static_cast<Eigen::Index>(center.size()));
        m.kernel.scale = Eigen::Map<const Eigen::RowVectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
        m.lambda = doc.at("lambda").get<double>();
        m.offset = doc.at("offset").get<double>();
        const auto anchors = doc.at("anchors").get<std::vector<std::vector<double>>>();
        const auto alpha = doc.at("alpha").get<std::vector<double>>();
        require(anchors.size() == alpha.size() && !anchors.empty(), ErrorKind::Parse, "bridge anchors and alpha differ");
        m.anchors.resize(static_cast<Eigen::Index>(anchors.size()), static_cast<Eigen::Index>(center.size()));
        for (std::size_t r = 0; r < anchors.size(); ++r) {
            require(anchors[r].size() == center.size(), ErrorKind::Parse, "bridge anchor has wrong dimension");
            for (std::size_t c = 0; c < center.size(); ++c) {
                m.anchors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = anchors[r][c];
            }
        }
        m.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed bridge JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Propensity

namespace {

Eigen::MatrixXd squared_differences(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return (x.replicate(1, y.size()).rowwise() - y.transpose()).array().square().matrix();
}

// Kernel weights exp(-d2 / (2 b^2)); the Gaussian normalizing constant is applied separately.
Eigen::MatrixXd gaussian_weights(const Eigen::MatrixXd& d2, double b) {
    return (-d2.array() / (2.0 * b * b)).exp().matrix();
}

// Normalized product kernel over dose coordinates for bandwidth b.
Eigen::MatrixXd dose_weights(const std::vector<Eigen::MatrixXd>& dose_d2, double b) {
    Eigen::MatrixXd ka = gaussian_weights(dose_d2.front(), b);
    for (std::size_t c = 1; c < dose_d2.size(); ++c) ka.array() *= gaussian_weights(dose_d2[c], b).array();
    return ka / std::pow(std::sqrt(2.0 * std::numbers::pi) * b, static_cast<double>(dose_d2.size()));
}

// Conditional density of each query row given training rows.
Eigen::VectorXd conditional_density(const Eigen::MatrixXd& ka, const Eigen::MatrixXd& kw) {
    const Eigen::VectorXd num = (ka.array() * kw.array()).rowwise().sum();
    const Eigen::VectorXd den = kw.rowwise().sum();
    Eigen::VectorXd out(num.size());
    for (Eigen::Index r = 0; r < num.size(); ++r) out(r) = den(r) > 0.0 ? num(r) / den(r) : 0.0;
    return out;
}

std::vector<double> bandwidth_grid() {
    std::vector<double> grid;
    for (int k = 0; k < 20; ++k) grid.push_back(std::pow(10.0, -1.0 + 1.0 * k / 19.0));
    return grid;
}

}  // namespace

PropensityEstimate estimate_propensity(const Eigen::MatrixXd& dose, const Eigen::VectorXd& w, double floor) {
    const Eigen::Index n = w.size();
    require(n >= 30, ErrorKind::Precondition, "propensity estimation needs at least 30 samples");
    require(dose.rows() == n && dose.cols() >= 1, ErrorKind::DimensionMismatch, "dose and proxy differ in length");
    require((w.array() != w(0)).any(), ErrorKind::DegenerateInput, "proxy column has zero variance");

    const auto grid = bandwidth_grid();
    const auto G = static_cast<Eigen::Index>(grid.size());
    Eigen::ArrayXd inv2b2(G), norm_a(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        const double b = grid[static_cast<std::size_t>(g)];
        inv2b2(g) = 1.0 / (2.0 * b * b);
        norm_a(g) = std::pow(std::sqrt(2.0 * std::numbers::pi) * b, -static_cast<double>(dose.cols()));
    }
    // One held-out row at a time: rows of KA / KW are the kernel weights to
    // the training rows under each grid bandwidth, so KA * KW^T holds the
    // numerators for every (b_a, b_w) pair.
    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(G, G);
    constexpr int folds = 3;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index lo = n * f / folds, hi = n * (f + 1) / folds;
        const Eigen::Index n_train = n - (hi - lo);
        Eigen::MatrixXd train_dose(n_train, dose.cols());
        train_dose << dose.topRows(lo), dose.bottomRows(n - hi);
        Eigen::VectorXd train_w(n_train);
        train_w << w.head(lo), w.tail(n - hi);
        Eigen::MatrixXd KA(G, n_train), KW(G, n_train);
        for (Eigen::Index r = lo; r < hi; ++r) {
            const Eigen::RowVectorXd da = (train_dose.rowwise() - dose.row(r)).rowwise().squaredNorm().transpose();
            const Eigen::RowVectorXd dw = (train_w.array() - w(r)).square().matrix().transpose();
            for (Eigen::Index g = 0; g < G; ++g) {
                KA.row(g) = norm_a(g) * (-inv2b2(g) * da.array()).exp();
                KW.row(g) = (-inv2b2(g) * dw.array()).exp().matrix();
            }
            const Eigen::MatrixXd num = KA * KW.transpose();
            const Eigen::VectorXd den = KW.rowwise().sum();
            for (Eigen::Index b = 0; b < G; ++b) {
                for (Eigen::Index a = 0; a < G; ++a) {
                    const double p = den(b) > 0.0 ? num(a, b) / den(b) : 0.0;
                    score(a, b) += std::log(std::max(p, floor));
                }
            }
        }
    }
    Eigen::Index best_a = 0, best_b = 0;
    score.maxCoeff(&best_a, &best_b);

    PropensityEstimate est;
    est.floor = floor;
    est.bandwidth_a = grid[static_cast<std::size_t>(best_a)];
    est.bandwidth_w = grid[static_cast<std::size_t>(best_b)];
    std::vector<Eigen::MatrixXd> dose_d2;
    for (Eigen::Index c = 0; c < dose.cols(); ++c) dose_d2.push_back(squared_differences(dose.col(c), dose.col(c)));
    const Eigen::VectorXd p = conditional_density(dose_weights(dose_d2, est.bandwidth_a),
                                                  gaussian_weights(squared_differences(w, w), est.bandwidth_w));
    est.values = p.cwiseMax(floor);
    est.floored.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) est.floored[static_cast<std::size_t>(r)] = !(p(r) >= floor);
    return est;
}

PropensityEstimate estimate_propensity(const Dataset& data, const std::vector<int>& S, const VariableId& w) {
    std::vector<VariableId> ids;
    for (int s : S) ids.push_back(VariableId::treatment(s));
    return estimate_propensity(data.gather(ids), data.variable(w));
}

// ---------------------------------------------------------------------------
// Bridges

namespace {

struct BridgeInputs {
    Eigen::MatrixXd aw;  // (dose..., W)
    Eigen::MatrixXd az;  // (dose..., Z)
};

BridgeInputs bridge_inputs(const Dataset& data, const ProxyAssignment& proxies) {
    require(data.rows() >= 10, ErrorKind::Precondition, "bridge fitting needs at least 10 samples");
    require(!proxies.S.empty(), ErrorKind::Precondition, "treated set is empty");
    require(!(proxies.z == proxies.w), ErrorKind::Precondition, "proxies Z and W must differ");
    std::vector<VariableId> aw, az;
    for (int s : proxies.S) {
        aw.push_back(VariableId::treatment(s));
        az.push_back(VariableId::treatment(s));
    }
    aw.push_back(proxies.w);
    az.push_back(proxies.z);
    return {data.gather(aw), data.gather(az)};
}

BridgeModel fit_bridge(BridgeKind kind, const Eigen::MatrixXd& representer, const Eigen::MatrixXd& residual,
                       const Eigen::VectorXd& target, double lambda) {
    BridgeModel m;
    m.kind = kind;
    m.lambda = lambda;
    m.kernel = GaussianKernel::fit(representer);
    m.anchors = representer;
    m.offset = target.mean();
    const Eigen::MatrixXd K = m.kernel(representer, representer);
    const GaussianKernel rk = GaussianKernel::fit(residual);
    const Eigen::MatrixXd R = rk(residual, residual);
    m.alpha = solve_pmmr(R, K, target.array() - m.offset, lambda);
    return m;
}

}  // namespace

BridgeModel fit_outcome_bridge(const Dataset& data, const ProxyAssignment& proxies, const KernelConfig& config) {
    const auto in = bridge_inputs(data, proxies);
    const Eigen::VectorXd y = data.variable(VariableId::outcome(proxies.j));
    return fit_bridge(BridgeKind::OutcomeH, in.aw, in.az, y, config.lambda_h);
}

BridgeModel fit_treatment_bridge(const Dataset& data, const ProxyAssignment& proxies, const KernelConfig& config,
                                 const PropensityEstimate& propensity) {
    const auto in = bridge_inputs(data, proxies);
    require(propensity.values.size() == data.rows(), ErrorKind::DimensionMismatch,
            "propensity does not match the dataset");
    return fit_bridge(BridgeKind::TreatmentQ, in.az, in.aw, propensity.values.cwiseInverse(), config.lambda_q);
}

}  // namespace proxci
