#include "oracles.hpp"

#include "proxci/bridge.hpp"
#include "proxci/error.hpp"
#include "proxci/estimator.hpp"
#include "proxci/scm.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

using namespace proxci;

namespace {

// Linear-Gaussian columns: treatments A, W; outcomes Y, Z.
ProxyAssignment lg_proxies() {
    return {{0}, 0, VariableId::outcome(1), VariableId::treatment(1), NullProxyCase::III};
}

BridgeFn oracle_h() {
    return [](const Eigen::VectorXd& dose, const Eigen::VectorXd& w) {
        const oracle::LinearGaussian lg;
        return Eigen::VectorXd(w.unaryExpr([&](double v) { return lg.h(dose(0), v); }));
    };
}

BridgeFn oracle_q() {
    return [](const Eigen::VectorXd& dose, const Eigen::VectorXd& z) {
        const oracle::LinearGaussian lg;
        return Eigen::VectorXd(z.unaryExpr([&](double v) { return lg.q(dose(0), v); }));
    };
}

BridgeFn constant(double c) {
    return [c](const Eigen::VectorXd&, const Eigen::VectorXd& v) { return Eigen::VectorXd::Constant(v.size(), c).eval(); };
}

Dataset four_columns(const Eigen::VectorXd& a, const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& z) {
    Eigen::MatrixXd v(a.size(), 4);
    v << a, w, y, z;
    return Dataset({{"A", Role::Treatment}, {"W", Role::Treatment}, {"Y", Role::Outcome}, {"Z", Role::Outcome}}, v);
}

EffectCurve curve_of(std::vector<double> xs, std::vector<double> ys) {
    EffectCurve c;
    for (double x : xs) c.grid.push_back(Eigen::VectorXd::Constant(1, x));
    c.estimates = std::move(ys);
    return c;
}

}  // namespace

TEST(Bandwidth, Examples) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> norm;
    Eigen::VectorXd v(32);
    for (auto& x : v) x = norm(gen);
    v = (v.array() - v.mean()) / std::sqrt((v.array() - v.mean()).square().sum() / 31.0);
    EXPECT_NEAR(bandwidth_rule(v), 0.75, 1e-14);
    EXPECT_NEAR(bandwidth_rule(2.0 * v), 1.5, 1e-14);
    EXPECT_THROW(bandwidth_rule(Eigen::VectorXd::Ones(1)), Error);
    EXPECT_THROW(bandwidth_rule(Eigen::VectorXd::Ones(10)), Error);
}

TEST(Bandwidth, SyntheticColumn) {
    const Dataset d = sample(synthetic_main(), 600, 2);
    const auto a = d.column("A_3");
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index r = 0; r < a.size(); ++r) sum += a(r);
    const double mean = sum / 600.0;
    for (Eigen::Index r = 0; r < a.size(); ++r) sq += (a(r) - mean) * (a(r) - mean);
    EXPECT_NEAR(bandwidth_rule(a), std::sqrt(sq / 599.0) * 1.5 * std::pow(600.0, -0.2), 1e-12);
}

TEST(Pkdr, ZeroTreatmentBridgeGivesOutcomeBridgeMean) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 500, 3);
    const Eigen::VectorXd dose = Eigen::VectorXd::Constant(1, 0.4);
    const double mean_h = oracle_h()(dose, d.column("W")).mean();
    EXPECT_NEAR(pkdr_estimate(d, lg_proxies(), oracle_h(), constant(0.0), dose, {0.8}).value, mean_h, 1e-12);
    EXPECT_NEAR(pkdr_estimate(d, lg_proxies(), oracle_h(), BridgeFn{}, dose, {0.8}).value, mean_h, 1e-12);
}

TEST(Pkdr, ZeroResidualIgnoresTreatmentBridge) {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> norm;
    Eigen::VectorXd a(200), w(200), z(200);
    for (Eigen::Index r = 0; r < 200; ++r) {
        a(r) = norm(gen);
        w(r) = norm(gen);
        z(r) = norm(gen);
    }
    const Eigen::VectorXd dose = Eigen::VectorXd::Constant(1, 0.3);
    const Eigen::VectorXd y = oracle_h()(dose, w);
    const Dataset d = four_columns(a, w, y, z);
    EXPECT_NEAR(pkdr_estimate(d, lg_proxies(), oracle_h(), oracle_q(), dose, {0.5}).value, y.mean(), 1e-12);
}

TEST(Pkdr, OracleBridgesRecoverTruthAtZero) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 5000, 6);
    const Eigen::VectorXd dose = Eigen::VectorXd::Zero(1);
    const double bw = bandwidth_rule(d.column("A"));
    const PointEstimate e = pkdr_estimate(d, lg_proxies(), oracle_h(), oracle_q(), dose, {bw});
    EXPECT_LT(std::fabs(e.value - 0.0), 3.0 * e.std_error);
    EXPECT_GT(e.std_error, 0.0);
}

TEST(Pkdr, OracleTreatmentBridgeSolvesItsEquation) {
    const oracle::LinearGaussian lg;
    for (double a : {-2.0, 0.0, 1.0, 3.0}) {
        for (double w : {-1.5, 0.0, 2.0}) {
            EXPECT_NEAR(lg.q_given(a, w) * lg.density(a, w), 1.0, 1e-8) << a << " " << w;
        }
    }
}

TEST(Pkdr, KernelIntegratesToOne) {
    // One sample with h = 0, q = 1, Y = 1: the estimate is K_h(a0 - a).
    const Dataset d = four_columns(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Zero(1),
                                   Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
    for (double bw : {0.1, 0.5, 1.0}) {
        const auto k = [&](double a) {
            return pkdr_estimate(d, lg_proxies(), constant(0.0), constant(1.0), Eigen::VectorXd::Constant(1, a), {bw}).value;
        };
        EXPECT_NEAR(oracle::integrate(k, 0.7 - 12.0 * bw, 0.7 + 12.0 * bw, 1e-10), 1.0, 1e-4) << bw;
    }
}

TEST(Pkdr, ProductKernelForTwoDoses) {
    // h = 0, q = 1, Y = 1 with two treated columns: weight is the product.
    Eigen::MatrixXd v(1, 4);
    v << 0.2, -0.4, 1.0, 0.0;
    const Dataset d({{"A_1", Role::Treatment}, {"A_2", Role::Treatment}, {"Y", Role::Outcome}, {"Z", Role::Outcome}}, v);
    const ProxyAssignment p{{0, 1}, 0, VariableId::outcome(1), VariableId::treatment(1), NullProxyCase::III};
    const auto phi = [](double u, double b) { return std::exp(-0.5 * u * u / (b * b)) / (std::sqrt(2.0 * std::numbers::pi) * b); };
    const double got = pkdr_estimate(d, p, constant(0.0), constant(1.0), Eigen::Vector2d(0.0, 0.0), {0.5, 0.25}).value;
    EXPECT_NEAR(got, phi(0.2, 0.5) * phi(-0.4, 0.25), 1e-14);
    EXPECT_THROW(pkdr_estimate(d, p, constant(0.0), constant(1.0), Eigen::Vector2d(0.0, 0.0), {0.5}), Error);
}

TEST(Pkdr, DoublyRobustPerturbationBound) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 1000, 7);
    const Eigen::VectorXd dose = Eigen::VectorXd::Constant(1, 1.0);
    const double bw = 0.9;
    const BridgeFn h = [](const Eigen::VectorXd& a, const Eigen::VectorXd& w) { return Eigen::VectorXd((2.0 * a(0) + 0.5 * w.array()).matrix()); };
    const BridgeFn dq = [](const Eigen::VectorXd&, const Eigen::VectorXd& z) { return Eigen::VectorXd(0.3 * z.array().sin()); };
    const BridgeFn q2 = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& z) { return Eigen::VectorXd(oracle_q()(a, z) + dq(a, z)); };
    const double base = pkdr_estimate(d, lg_proxies(), h, oracle_q(), dose, {bw}).value;
    const double moved = pkdr_estimate(d, lg_proxies(), h, q2, dose, {bw}).value;
    double bound = 0.0;
    const auto a = d.column("A"), w = d.column("W"), y = d.column("Y");
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        const double k = std::exp(-0.5 * std::pow((a(r) - 1.0) / bw, 2)) / (std::sqrt(2.0 * std::numbers::pi) * bw);
        bound += std::fabs(k * (y(r) - (2.0 + 0.5 * w(r))));
    }
    bound *= 0.3 / static_cast<double>(d.rows());
    EXPECT_LE(std::fabs(moved - base), bound + 1e-12);
    EXPECT_GT(std::fabs(moved - base), 0.0);
}

TEST(Pkdr, ScaleConsistency) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 800, 8);
    Eigen::MatrixXd scaled = d.values();
    const double c = -3.5;
    scaled.col(d.index_of("Y")) *= c;
    const Dataset ds(d.columns(), scaled);
    const BridgeFn hc = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& w) { return Eigen::VectorXd(c * oracle_h()(a, w)); };
    const Eigen::VectorXd dose = Eigen::VectorXd::Constant(1, 0.5);
    const double base = pkdr_estimate(d, lg_proxies(), oracle_h(), oracle_q(), dose, {0.9}).value;
    EXPECT_NEAR(pkdr_estimate(ds, lg_proxies(), hc, oracle_q(), dose, {0.9}).value, c * base, 1e-10 * std::fabs(c * base) + 1e-12);
}

TEST(Pkdr, PermutationInvariant) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 700, 9);
    std::vector<Eigen::Index> order(700);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(2));
    const Eigen::VectorXd dose = Eigen::VectorXd::Constant(1, -0.5);
    const double a = pkdr_estimate(d, lg_proxies(), oracle_h(), oracle_q(), dose, {0.9}).value;
    const double b = pkdr_estimate(d.permuted_rows(order), lg_proxies(), oracle_h(), oracle_q(), dose, {0.9}).value;
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::fabs(a)));
}

TEST(Pdr, HorvitzThompsonReduction) {
    Eigen::VectorXd a(8), y(8);
    a << 0, 1, 1, 0, 1, 0, 0, 1;
    y << 3, 5, 7, 1, 9, 2, 2, 11;
    const Dataset d = four_columns(a, Eigen::VectorXd::LinSpaced(8, 0, 1), y, Eigen::VectorXd::Zero(8));
    const PointEstimate e = pdr_estimate(d, lg_proxies(), constant(0.0), constant(2.0), Eigen::VectorXd::Ones(1));
    EXPECT_NEAR(e.value, (5.0 + 7.0 + 9.0 + 11.0) / 4.0, 1e-15);
    EXPECT_EQ(e.matched, 4);
    EXPECT_TRUE(e.warning.empty());
}

TEST(Pdr, NoMatchFallsBackToOutcomeBridge) {
    const Dataset d = four_columns(Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(5, 5, 5),
                                   Eigen::Vector3d::Zero());
    const BridgeFn h = [](const Eigen::VectorXd&, const Eigen::VectorXd& w) { return Eigen::VectorXd(2.0 * w); };
    const PointEstimate e = pdr_estimate(d, lg_proxies(), h, constant(1.0), Eigen::VectorXd::Constant(1, 7.0));
    EXPECT_NEAR(e.value, 4.0, 1e-15);
    EXPECT_EQ(e.matched, 0);
    EXPECT_FALSE(e.warning.empty());
}

TEST(Pdr, RegressionAdjustmentOnFiniteSpace) {
    // Counts over (a, w, y) cells with no confounder; h is the exact cell mean.
    const std::vector<std::tuple<int, int, double, int>> cells{
        {0, 0, 0.0, 3}, {0, 0, 1.0, 2}, {0, 1, 3.0, 4}, {0, 1, 1.0, 1},
        {1, 0, 0.0, 1}, {1, 0, 3.0, 5}, {1, 1, 1.0, 2}, {1, 1, 0.0, 6}};
    std::vector<double> av, wv, yv;
    for (const auto& [a, w, y, count] : cells)
        for (int k = 0; k < count; ++k) {
            av.push_back(a);
            wv.push_back(w);
            yv.push_back(y);
        }
    const auto vec = [](const std::vector<double>& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())).eval(); };
    const Dataset d = four_columns(vec(av), vec(wv), vec(yv), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(av.size())));
    std::map<std::pair<int, int>, std::pair<double, int>> tally;
    for (const auto& [a, w, y, count] : cells) {
        tally[{a, w}].first += y * count;
        tally[{a, w}].second += count;
    }
    const BridgeFn h = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& w) {
        return Eigen::VectorXd(w.unaryExpr([&](double wv) {
            const auto& t = tally.at({static_cast<int>(a(0)), static_cast<int>(wv)});
            return t.first / t.second;
        }));
    };
    const double n = static_cast<double>(av.size());
    for (int a = 0; a < 2; ++a) {
        double expected = 0.0;
        for (int w = 0; w < 2; ++w) {
            const double pw = (tally[{0, w}].second + tally[{1, w}].second) / n;
            expected += pw * tally[{a, w}].first / tally[{a, w}].second;
        }
        EXPECT_NEAR(pdr_estimate(d, lg_proxies(), h, constant(1.7), Eigen::VectorXd::Constant(1, a)).value, expected, 1e-10);
    }
}

TEST(Curve, ConstantOutcomeWithFittedBridges) {
    Dataset d = sample(builtin_scenario("linear-gaussian"), 300, 10);
    Eigen::MatrixXd v = d.values();
    v.col(d.index_of("Y")).setConstant(4.25);
    d = Dataset(d.columns(), v);
    const auto p = lg_proxies();
    const BridgeModel h = fit_outcome_bridge(d, p, {0.2, 0.2});
    const BridgeModel q = fit_treatment_bridge(d, p, {0.2, 0.2}, estimate_propensity(d, p.S, p.w));
    const EffectCurve c = effect_curve(d, p, as_function(h), as_function(q), default_grid());
    ASSERT_EQ(c.estimates.size(), 10u);
    for (double e : c.estimates) EXPECT_NEAR(e, 4.25, 1e-8);
    EXPECT_EQ(c.bandwidth.size(), 1u);
    EXPECT_NEAR(c.bandwidth[0], bandwidth_rule(d.column("A")), 1e-15);
    EXPECT_EQ(c.n_used, 300);
}

TEST(Curve, SingletonGridAndJobs) {
    const Dataset d = sample(builtin_scenario("linear-gaussian"), 400, 11);
    const auto one = effect_curve(d, lg_proxies(), oracle_h(), oracle_q(), linear_grid(0.5, 0.5, 1));
    EXPECT_EQ(one.estimates.size(), 1u);
    const auto grid = linear_grid(-1.0, 1.0, 9);
    const auto a = effect_curve(d, lg_proxies(), oracle_h(), oracle_q(), grid, {}, 1);
    const auto b = effect_curve(d, lg_proxies(), oracle_h(), oracle_q(), grid, {}, 3);
    EXPECT_EQ(a.estimates, b.estimates);
    EXPECT_THROW(effect_curve(d, lg_proxies(), oracle_h(), oracle_q(), {}), Error);
}

TEST(Cmae, Examples) {
    const auto a = curve_of({0.0, 1.0}, {0.0, 1.0});
    EXPECT_EQ(cmae(a, a), 0.0);
    EXPECT_NEAR(cmae(curve_of({0.0, 1.0}, {2.5, 3.5}), a), 2.5, 1e-15);
    EXPECT_NEAR(cmae(a, curve_of({0.0, 1.0}, {1.0, 3.0})), 1.5, 1e-15);
    try {
        cmae(a, curve_of({0.0, 0.5}, {0.0, 1.0}));
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
    }
    EXPECT_THROW(cmae(a, curve_of({0.0}, {0.0})), Error);
}

TEST(Output, CsvAndSvg) {
    EffectCurve c = curve_of({0.0, 0.5}, {1.0, 2.0});
    c.std_errors = {0.1, 0.2};
    std::ostringstream out;
    write_curve_csv(out, c);
    EXPECT_EQ(out.str(), "a,estimate,std_error\n0,1,0.10000000000000001\n0.5,2,0.20000000000000001\n");
    const std::string svg = curve_svg(c, &c, "A<3> & Y");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("A&lt;3&gt; &amp; Y"), std::string::npos);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
}
