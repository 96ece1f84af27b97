#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>

namespace oracle {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    // Halving stops at a few ulps of the piece so rounding cannot force full depth.
    const double next = std::max(0.5 * tol, 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(whole));
    return simpson(f, a, m, fa, flm, fm, left, next, depth - 1) + simpson(f, m, b, fm, frm, fb, right, next, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-14) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40);
}

// Chi-square upper tail by quadrature of the unnormalized density after
// t = s^2, normalized by the same quadrature over [0, inf).
inline double chi_square_tail(double x, int k) {
    const auto g = [k](double s) { return std::pow(s, k - 1) * std::exp(-0.5 * s * s); };
    const double top = std::max(std::sqrt(static_cast<double>(k)), std::sqrt(x)) + 40.0;
    double total = 0.0, tail = 0.0;
    const double cut = std::sqrt(x);
    // Integrate on unit pieces so the adaptive rule sees the peak.
    for (double lo = 0.0; lo < top; lo += 1.0) {
        const double hi = lo + 1.0;
        if (hi <= cut) {
            total += integrate(g, lo, hi);
        } else if (lo >= cut) {
            const double piece = integrate(g, lo, hi);
            total += piece;
            tail += piece;
        } else {
            total += integrate(g, lo, cut);
            const double piece = integrate(g, cut, hi);
            total += piece;
            tail += piece;
        }
    }
    return tail / total;
}

// Linear-Gaussian model: U ~ N(0,1), A = U + N(0, va), W = U + N(0, vw),
// Z = U + N(0, vz), Y = 2A + U + N(0, 1).
struct LinearGaussian {
    double va = 9.0, vw = 1.0, vz = 1.0;

    double truth(double a) const { return 2.0 * a; }

    // E[Y - h(A, W) | A, Z] = 0 with E[h(a, W)] = 2a.
    double h(double a, double w) const { return 2.0 * a + w; }

    // p(a | w): A | W = w is N(w / (1 + vw), 1 + va - 1 / (1 + vw)).
    double density(double a, double w) const {
        const double tau2 = 1.0 + va - 1.0 / (1.0 + vw);
        const double m = w / (1.0 + vw);
        return std::exp(-0.5 * (a - m) * (a - m) / tau2) / std::sqrt(2.0 * std::numbers::pi * tau2);
    }

    // q(a, z) = exp(c0 + c1 z + c2 z^2) solving E[q(a, Z) | a, w] = 1 / p(a | w).
    double q(double a, double z) const {
        const double su2 = 1.0 / (1.0 + 1.0 / va + 1.0 / vw);
        const double d = su2 / vw, e = su2 / va;
        const double s2 = su2 + vz;
        const double tau2 = 1.0 + va - 1.0 / (1.0 + vw);
        const double T = 1.0 / (2.0 * tau2 * (1.0 + vw) * (1.0 + vw));
        const double c2 = T / (d * d + 2.0 * s2 * T);
        const double D = 1.0 - 2.0 * c2 * s2;
        const double c1 = (-a * D / (tau2 * (1.0 + vw)) - 2.0 * c2 * e * a * d) / d;
        const double c0 = 0.5 * std::log(2.0 * std::numbers::pi * tau2) + a * a / (2.0 * tau2) -
                          (c1 * e * a + c2 * e * e * a * a + c1 * c1 * s2 / 2.0) / D + 0.5 * std::log(D);
        return std::exp(c0 + c1 * z + c2 * z * z);
    }

    // E[q(a, Z) | A = a, W = w] by quadrature over the Gaussian law of Z.
    double q_given(double a, double w) const {
        const double su2 = 1.0 / (1.0 + 1.0 / va + 1.0 / vw);
        const double mu = su2 * (a / va + w / vw);
        const double sd = std::sqrt(su2 + vz);
        const auto f = [&](double t) {
            return q(a, mu + sd * t) * std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
        };
        return integrate(f, -30.0, 30.0, 1e-12);
    }
};

// Minimizes 0.5 x^T H x - b^T x for symmetric PSD H by conjugate gradients.
inline Eigen::VectorXd conjugate_gradient(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, int max_iter,
                                          double tol) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < max_iter && std::sqrt(rr) > tol; ++it) {
        const Eigen::VectorXd Hp = H * p;
        const double step = rr / p.dot(Hp);
        x += step * p;
        r -= step * Hp;
        const double next = r.squaredNorm();
        p = r + (next / rr) * p;
        rr = next;
        if (it % 50 == 49) {
            // Restart from the true residual to shed rounding drift.
            r = b - H * x;
            p = r;
            rr = r.squaredNorm();
        }
    }
    return x;
}

}  // namespace oracle
