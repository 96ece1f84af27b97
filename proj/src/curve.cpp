#include "proxci/curve.hpp"

#include "proxci/error.hpp"

namespace proxci {

std::vector<Eigen::VectorXd> linear_grid(double lo, double hi, int count) {
    require(count >= 1, ErrorKind::Precondition, "grid needs at least one point");
    require(count == 1 || hi > lo, ErrorKind::Precondition, "grid needs lo < hi");
    std::vector<Eigen::VectorXd> grid;
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
        grid.push_back(Eigen::VectorXd::Constant(1, t));
    }
    return grid;
}

std::vector<Eigen::VectorXd> default_grid(int dims) {
    require(dims >= 1, ErrorKind::Precondition, "grid dimension must be positive");
    std::vector<Eigen::VectorXd> grid;
    for (const auto& p : linear_grid(0.0, 1.0, 10)) grid.push_back(Eigen::VectorXd::Constant(dims, p(0)));
    return grid;
}

}  // namespace proxci
