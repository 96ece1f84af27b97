#include "proxci/proxytest.hpp"

#include "proxci/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace proxci {

ProbabilityTables build_tables(const BinnedColumn& a, const BinnedColumn& proxy, const BinnedColumn& y) {
    const std::size_t n = a.labels.size();
    require(proxy.labels.size() == n && y.labels.size() == n, ErrorKind::DimensionMismatch,
            "binned columns differ in length");
    ProbabilityTables t;
    t.M = a.bins();
    t.N = proxy.bins();
    t.L = y.bins();
    t.n = static_cast<long>(n);
    require(t.M > t.N, ErrorKind::Precondition,
            "treatment bins M=" + std::to_string(t.M) + " must exceed proxy bins N=" + std::to_string(t.N));
    require(t.L >= 2, ErrorKind::Precondition, "outcome needs at least two levels");

    t.bin_counts.assign(static_cast<std::size_t>(t.M), 0);
    Eigen::MatrixXd proxy_counts = Eigen::MatrixXd::Zero(t.N, t.M);
    Eigen::MatrixXd level_counts = Eigen::MatrixXd::Zero(t.L, t.M);
    for (std::size_t r = 0; r < n; ++r) {
        const int m = a.labels[r];
        ++t.bin_counts[static_cast<std::size_t>(m)];
        proxy_counts(proxy.labels[r], m) += 1.0;
        level_counts(y.labels[r], m) += 1.0;
    }
    for (int m = 0; m < t.M; ++m) {
        require(t.bin_counts[static_cast<std::size_t>(m)] > 0, ErrorKind::EmptyBin,
                "treatment bin " + std::to_string(m) + " is empty");
    }
    t.Q.resize(t.N, t.M);
    t.q.resize(static_cast<Eigen::Index>(t.M) * (t.L - 1));
    for (int m = 0; m < t.M; ++m) {
        const double nm = static_cast<double>(t.bin_counts[static_cast<std::size_t>(m)]);
        t.Q.col(m) = proxy_counts.col(m) / nm;
        for (int l = 0; l + 1 < t.L; ++l) t.q(l * t.M + m) = level_counts(l, m) / nm;
    }
    return t;
}

Eigen::MatrixXd estimate_covariance(const ProbabilityTables& t, long min_count) {
    const long smallest = *std::min_element(t.bin_counts.begin(), t.bin_counts.end());
    require(smallest >= min_count, ErrorKind::BinUnderflow,
            "smallest treatment bin has " + std::to_string(smallest) + " samples, need " +
                std::to_string(min_count));
    const int levels = t.L - 1;
    const Eigen::Index dim = static_cast<Eigen::Index>(t.M) * levels;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 0; m < t.M; ++m) {
        const double scale = static_cast<double>(t.n) / static_cast<double>(t.bin_counts[static_cast<std::size_t>(m)]);
        for (int l = 0; l < levels; ++l) {
            const double pl = t.q(l * t.M + m);
            for (int k = 0; k < levels; ++k) {
                const double pk = t.q(k * t.M + m);
                sigma(l * t.M + m, k * t.M + m) = ((l == k ? pl : 0.0) - pl * pk) * scale;
            }
        }
    }
    double jitter = 1e-8 * sigma.trace() / static_cast<double>(dim);
    if (jitter <= 0.0) jitter = 1e-8;
    sigma.diagonal().array() += jitter;
    return sigma;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma, double* condition_number) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    require(eig.info() == Eigen::Success, ErrorKind::SingularSystem, "covariance eigendecomposition failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double top = lambda.maxCoeff();
    require(top > 0.0, ErrorKind::SingularSystem, "covariance is not positive definite");
    const double floor = 1e-12 * top;
    const Eigen::VectorXd clipped = lambda.cwiseMax(floor);
    if (condition_number) *condition_number = top / clipped.minCoeff();
    return eig.eigenvectors() * clipped.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd proxy_design(const ProbabilityTables& t) {
    const int levels = t.L - 1;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.M) * levels,
                                                   static_cast<Eigen::Index>(t.N) * levels);
    for (int l = 0; l < levels; ++l) design.block(l * t.M, l * t.N, t.M, t.N) = t.Q.transpose();
    return design;
}

Projection project_out(const Eigen::MatrixXd& design, const Eigen::VectorXd& r) {
    require(design.rows() == r.size(), ErrorKind::DimensionMismatch, "design and response differ in length");
    // SVD of the design itself rather than an eigensolve of design^T design,
    // which would square its condition number.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = 1e-5 * (sv.size() > 0 ? sv(0) : 0.0);
    Projection out;
    while (out.rank < sv.size() && sv(out.rank) > tol && sv(out.rank) > 0.0) ++out.rank;
    const Eigen::MatrixXd basis = svd.matrixU().leftCols(out.rank);
    out.projector = basis * basis.transpose();
    out.residual = r - basis * (basis.transpose() * r);
    return out;
}

TestResult projection_statistic(const ProbabilityTables& t, const Eigen::MatrixXd& sigma, long n, double alpha) {
    require(sigma.rows() == t.q.size() && sigma.cols() == t.q.size(), ErrorKind::DimensionMismatch,
            "covariance does not match the stacked outcome frequencies");
    require(n >= 1, ErrorKind::Precondition, "sample size must be positive");
    TestResult res;
    res.M = t.M;
    res.N = t.N;
    res.L = t.L;
    res.alpha = alpha;
    res.diagnostics.min_bin_count = t.bin_counts.empty() ? 0 : *std::min_element(t.bin_counts.begin(), t.bin_counts.end());

    const Eigen::MatrixXd whiten = inverse_sqrt(sigma, &res.diagnostics.condition_number);
    const Projection proj = project_out(whiten * proxy_design(t), whiten * t.q);
    res.diagnostics.design_rank = proj.rank;
    res.diagnostics.rank_deficient = proj.rank < t.N * (t.L - 1);
    res.statistic = static_cast<double>(n) * proj.residual.squaredNorm();
    res.dof = static_cast<int>(t.q.size()) - proj.rank;
    res.p_value = res.dof > 0 ? chi_square_sf(res.statistic, res.dof) : 1.0;
    res.reject = res.p_value < alpha;
    return res;
}

TestResult test_edge(const Dataset& data, int i, int j, int proxy, const TestBins& bins, double alpha) {
    require(proxy != i, ErrorKind::Precondition, "proxy treatment must differ from the tested treatment");
    require(bins.M > bins.N, ErrorKind::Precondition, "treatment bins must exceed proxy bins");
    const auto a = discretize(data.variable(VariableId::treatment(i)), {bins.strategy, bins.M});
    const auto w = discretize(data.variable(VariableId::treatment(proxy)), {bins.strategy, bins.N});
    const auto y = discretize(data.variable(VariableId::outcome(j)), {bins.strategy, bins.L});
    const auto tables = build_tables(a, w, y);
    TestResult res = projection_statistic(tables, estimate_covariance(tables), tables.n, alpha);
    res.i = i;
    res.j = j;
    res.proxy = proxy;
    return res;
}

namespace {

// Regularized lower incomplete gamma P(a, x) by its power series, x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction, x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k < 10000; ++k) {
        const double an = -k * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi_square_sf(double x, double k) {
    require(k > 0.0 && std::isfinite(k), ErrorKind::Precondition, "degrees of freedom must be positive");
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const double a = 0.5 * k;
    const double z = 0.5 * x;
    const double q = z < a + 1.0 ? 1.0 - gamma_p_series(a, z) : gamma_q_fraction(a, z);
    return std::clamp(q, 0.0, 1.0);
}

nlohmann::json to_json(const TestResult& r) {
    return {{"i", r.i},
            {"j", r.j},
            {"proxy", r.proxy},
            {"M", r.M},
            {"N", r.N},
            {"L", r.L},
            {"statistic", r.statistic},
            {"dof", r.dof},
            {"p_value", r.p_value},
            {"reject", r.reject},
            {"diagnostics",
             {{"min_bin_count", r.diagnostics.min_bin_count},
              {"condition_number", r.diagnostics.condition_number},
              {"design_rank", r.diagnostics.design_rank},
              {"rank_deficient", r.diagnostics.rank_deficient}}}};
}

}  // namespace proxci
