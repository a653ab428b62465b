#include <Eigen/Eigenvalues>
#include <cmath>

#include "chirpctl/errors.hpp"
#include "chirpctl/explorer.hpp"

namespace chirpctl {

void EnsembleModel::validate() const {
    if (!(ratio > 0.0 && ratio <= 2.0)) throw ConfigError("ensemble ratio must lie in (0, 2]");
    if (radial_samples < 32) throw ConfigError("ensemble radial_samples must be >= 32");
}

std::pair<std::vector<double>, std::vector<double>> gauss_laguerre(std::size_t n) {
    // Golub-Welsch on the Laguerre Jacobi matrix.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        jacobi(k, k) = 2.0 * static_cast<double>(i) + 1.0;
        if (i + 1 < n) {
            jacobi(k, k + 1) = static_cast<double>(i + 1);
            jacobi(k + 1, k) = static_cast<double>(i + 1);
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    std::vector<double> nodes(n), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        nodes[i] = eig.eigenvalues()(k);
        const double v0 = eig.eigenvectors()(0, k);
        weights[i] = v0 * v0;
    }
    return {nodes, weights};
}

namespace {

double laguerre_sum(const std::function<double(double)>& pe_of_scale, double decay,
                    std::size_t samples) {
    const auto [nodes, weights] = gauss_laguerre(samples);
    double total = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        total += weights[i] * pe_of_scale(std::exp(-decay * nodes[i]));
    }
    return total;
}

}  // namespace

EnsembleAverage ensemble_average(const std::function<double(double)>& pe_of_scale,
                                 const EnsembleModel& model) {
    model.validate();
    const double r2 = model.ratio * model.ratio;
    const double decay = model.profile == BeamProfile::Field ? r2 : 0.5 * r2;
    EnsembleAverage out;
    out.value = laguerre_sum(pe_of_scale, decay, model.radial_samples);
    out.doubled = out.value;
    if (model.verify) {
        out.doubled = laguerre_sum(pe_of_scale, decay, 2 * model.radial_samples);
        out.converged = std::abs(out.doubled - out.value) <= 1e-4;
    }
    return out;
}

}  // namespace chirpctl
