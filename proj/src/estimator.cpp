#include "proxci/estimator.hpp"

#include "proxci/error.hpp"
#include "proxci/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace proxci {

BridgeFn as_function(const BridgeModel& model) {
    return [&model](const Eigen::VectorXd& dose, const Eigen::VectorXd& proxy) { return model.predict_at(dose, proxy); };
}

double bandwidth_rule(const Eigen::Ref<const Eigen::VectorXd>& column) {
    const auto n = column.size();
    require(n >= 2, ErrorKind::Precondition, "bandwidth rule needs at least two samples");
    const double sd = std::sqrt((column.array() - column.mean()).square().sum() / static_cast<double>(n - 1));
    require(sd > 0.0, ErrorKind::DegenerateInput, "treatment column has zero variance");
    return 1.5 * sd * std::pow(static_cast<double>(n), -0.2);
}

namespace {

struct Columns {
    Eigen::MatrixXd dose;
    Eigen::VectorXd y, w, z;
};

Columns columns_for(const Dataset& data, const ProxyAssignment& proxies) {
    std::vector<VariableId> ids;
    for (int s : proxies.S) ids.push_back(VariableId::treatment(s));
    return {data.gather(ids), data.variable(VariableId::outcome(proxies.j)), data.variable(proxies.w),
            data.variable(proxies.z)};
}

PointEstimate mean_with_se(const Eigen::VectorXd& terms) {
    PointEstimate out;
    const auto n = static_cast<double>(terms.size());
    out.value = terms.mean();
    out.std_error = terms.size() > 1 ? std::sqrt((terms.array() - out.value).square().sum() / (n - 1.0) / n) : 0.0;
    return out;
}

PointEstimate doubly_robust(const Columns& c, const BridgeFn& h, const BridgeFn& q, const Eigen::VectorXd& dose,
                            const Eigen::VectorXd& weight) {
    const Eigen::VectorXd hv = h(dose, c.w);
    require(hv.size() == c.y.size(), ErrorKind::DimensionMismatch, "outcome bridge returned wrong length");
    Eigen::VectorXd terms = hv;
    if (q) {
        const Eigen::VectorXd qv = q(dose, c.z);
        require(qv.size() == c.y.size(), ErrorKind::DimensionMismatch, "treatment bridge returned wrong length");
        terms.array() += weight.array() * qv.array() * (c.y - hv).array();
    }
    return mean_with_se(terms);
}

}  // namespace

PointEstimate pkdr_estimate(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h,
                            const BridgeFn& q, const Eigen::VectorXd& dose, const std::vector<double>& bandwidth) {
    require(static_cast<bool>(h), ErrorKind::Precondition, "outcome bridge is required");
    const Columns c = columns_for(data, proxies);
    require(dose.size() == c.dose.cols() && static_cast<Eigen::Index>(bandwidth.size()) == dose.size(),
            ErrorKind::DimensionMismatch, "dose and bandwidth must match the treated set");
    Eigen::VectorXd weight = Eigen::VectorXd::Ones(c.y.size());
    for (Eigen::Index k = 0; k < dose.size(); ++k) {
        const double b = bandwidth[static_cast<std::size_t>(k)];
        require(b > 0.0, ErrorKind::Precondition, "kernel bandwidth must be positive");
        weight.array() *= (-0.5 * ((c.dose.col(k).array() - dose(k)) / b).square()).exp() /
                          (std::sqrt(2.0 * std::numbers::pi) * b);
    }
    PointEstimate out = doubly_robust(c, h, q, dose, weight);
    out.matched = c.y.size();
    return out;
}

PointEstimate pdr_estimate(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h,
                           const BridgeFn& q, const Eigen::VectorXd& dose) {
    require(static_cast<bool>(h), ErrorKind::Precondition, "outcome bridge is required");
    const Columns c = columns_for(data, proxies);
    require(dose.size() == c.dose.cols(), ErrorKind::DimensionMismatch, "dose must match the treated set");
    Eigen::VectorXd weight(c.y.size());
    long matched = 0;
    for (Eigen::Index r = 0; r < c.y.size(); ++r) {
        weight(r) = (c.dose.row(r).transpose().array() == dose.array()).all() ? 1.0 : 0.0;
        matched += weight(r) > 0.0;
    }
    PointEstimate out = doubly_robust(c, h, matched > 0 ? q : BridgeFn{}, dose, weight);
    out.matched = matched;
    if (matched == 0) out.warning = "no sample has the requested dose; returning the outcome-bridge mean";
    return out;
}

EffectCurve effect_curve(const Dataset& data, const ProxyAssignment& proxies, const BridgeFn& h, const BridgeFn& q,
                         const std::vector<Eigen::VectorXd>& grid, std::vector<double> bandwidth, unsigned jobs) {
    require(!grid.empty(), ErrorKind::Precondition, "effect curve grid is empty");
    if (bandwidth.empty()) {
        for (int s : proxies.S) bandwidth.push_back(bandwidth_rule(data.variable(VariableId::treatment(s))));
    }
    EffectCurve curve;
    curve.grid = grid;
    curve.estimates.assign(grid.size(), 0.0);
    curve.std_errors.assign(grid.size(), 0.0);
    curve.n_used = data.rows();
    curve.bandwidth = bandwidth;
    parallel_for(grid.size(), jobs, [&](std::size_t g) {
        const PointEstimate p = pkdr_estimate(data, proxies, h, q, grid[g], bandwidth);
        curve.estimates[g] = p.value;
        curve.std_errors[g] = p.std_error;
    });
    return curve;
}

double cmae(const EffectCurve& estimate, const EffectCurve& truth) {
    require(estimate.grid.size() == truth.grid.size() && !truth.grid.empty() &&
                estimate.estimates.size() == estimate.grid.size() && truth.estimates.size() == truth.grid.size(),
            ErrorKind::GridMismatch, "curves have different grids");
    double total = 0.0;
    for (std::size_t g = 0; g < truth.grid.size(); ++g) {
        require(estimate.grid[g].size() == truth.grid[g].size() &&
                    (estimate.grid[g] - truth.grid[g]).cwiseAbs().maxCoeff() <= 1e-12,
                ErrorKind::GridMismatch, "curves have different grids");
        total += std::fabs(estimate.estimates[g] - truth.estimates[g]);
    }
    return total / static_cast<double>(truth.grid.size());
}

void write_curve_csv(std::ostream& out, const EffectCurve& curve) {
    const Eigen::Index dims = curve.grid.empty() ? 1 : curve.grid.front().size();
    for (Eigen::Index k = 0; k < dims; ++k) out << (dims == 1 ? std::string("a") : "a" + std::to_string(k + 1)) << ',';
    out << "estimate";
    if (!curve.std_errors.empty()) out << ",std_error";
    out << '\n';
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
        for (Eigen::Index k = 0; k < dims; ++k) out << format_double(curve.grid[g](k)) << ',';
        out << format_double(curve.estimates[g]);
        if (!curve.std_errors.empty()) out << ',' << format_double(curve.std_errors[g]);
        out << '\n';
    }
}

namespace {

std::string escaped(const std::string& text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string curve_svg(const EffectCurve& curve, const EffectCurve* truth, const std::string& title) {
    constexpr double width = 480, height = 320, pad = 48;
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    const auto extend = [&](const EffectCurve& c) {
        for (std::size_t g = 0; g < c.grid.size(); ++g) {
            const double x = c.grid[g](0), y = c.estimates[g];
            if (first) {
                xlo = xhi = x;
                ylo = yhi = y;
                first = false;
            }
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    };
    extend(curve);
    if (truth) extend(*truth);
    if (xhi <= xlo) xhi = xlo + 1;
    if (yhi <= ylo) yhi = ylo + 1;
    const auto px = [&](double x) { return pad + (x - xlo) / (xhi - xlo) * (width - 2 * pad); };
    const auto py = [&](double y) { return height - pad - (y - ylo) / (yhi - ylo) * (height - 2 * pad); };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    const auto polyline = [&](const EffectCurve& c, const char* colour) {
        std::string pts;
        for (std::size_t g = 0; g < c.grid.size(); ++g) {
            pts += (g ? " " : "") + num(px(c.grid[g](0))) + "," + num(py(c.estimates[g]));
        }
        return "  <polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts +
               "\"/>\n";
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "  <line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad << "\" y2=\""
        << height - pad << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << height - pad
        << "\" stroke=\"black\"/>\n"
        << "  <text x=\"" << pad << "\" y=\"" << height - pad + 16 << "\" font-size=\"11\">" << num(xlo) << "</text>\n"
        << "  <text x=\"" << width - pad << "\" y=\"" << height - pad + 16 << "\" font-size=\"11\" text-anchor=\"end\">"
        << num(xhi) << "</text>\n"
        << "  <text x=\"" << pad - 4 << "\" y=\"" << height - pad << "\" font-size=\"11\" text-anchor=\"end\">"
        << num(ylo) << "</text>\n"
        << "  <text x=\"" << pad - 4 << "\" y=\"" << pad + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << num(yhi)
        << "</text>\n";
    if (!title.empty()) {
        svg << "  <text x=\"" << width / 2 << "\" y=\"" << pad / 2 << "\" font-size=\"13\" text-anchor=\"middle\">"
            << escaped(title) << "</text>\n";
    }
    if (truth) svg << polyline(*truth, "#888888");
    svg << polyline(curve, "#1f77b4") << "</svg>\n";
    return svg.str();
}

}  // namespace proxci
