#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rankarb/core.hpp"

namespace rankarb {

/// Running sums along time: out(i, a) = sum_{j <= a} eps(i, j).
template <typename Derived>
Matrix<typename Derived::Scalar> cumulative_sum(const Eigen::MatrixBase<Derived>& eps) {
    Matrix<typename Derived::Scalar> x(eps.rows(), eps.cols());
    if (eps.cols() > 0) {
        x.col(0) = eps.col(0);
        for (Index a = 1; a < eps.cols(); ++a) {
            x.col(a) = x.col(a - 1) + eps.col(a);
        }
    }
    return x;
}

struct CumulativeTrajectory {
    Date as_of;
    std::string space = "name";
    std::vector<std::string> assets;
    MatrixXd values;  // N x L
    /// Next-day residual returns; only carried for training exports.
    std::optional<VectorXd> r_next;

    Index L() const { return values.cols(); }
};

/// Throws DomainError when the window has fewer than two days.
CumulativeTrajectory cumulative_residuals(const Eigen::Ref<const MatrixXd>& eps_window, Date as_of = {},
                                          std::vector<std::string> assets = {}, std::string space = "name");

struct NormalizedTrajectory {
    Date as_of;
    MatrixXd values;          // rows follow `included`
    VectorXd sigma_hat;       // per included asset
    std::vector<Index> included;
    std::vector<Index> excluded;  // residual std at or below 1e-12
    std::vector<std::string> warnings;
};

/// values(i, a-1) = x(i, a-1) / (sigma_hat_i * sqrt(a)), sigma_hat the (n-1) std of eps over the window.
NormalizedTrajectory normalize_cumulative(const CumulativeTrajectory& x, const Eigen::Ref<const MatrixXd>& eps_window);

/// JSONL: a header record, then one record per trajectory.
void export_training_set(const std::vector<CumulativeTrajectory>& trajectories, const std::filesystem::path& path);
std::vector<CumulativeTrajectory> read_training_set(const std::filesystem::path& path);

}  // namespace rankarb
