#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankarb/core.hpp"

namespace rankarb {

/// AR(1) fit x_a = a + b x_{a-1} + xi mapped onto OU parameters. When b is outside (0, 1)
/// the fit is flagged and kappa, tau_days, m, sigma are NaN.
struct OUFit {
    double a = 0.0;
    double b = 0.0;
    double kappa = 0.0;     // 1/year
    double tau_days = 0.0;  // 252 / kappa
    double m = 0.0;
    double sigma = 0.0;
    double resid_var = 0.0;
    double r2 = 0.0;
    bool mean_reverting = false;
};

/// Needs at least 3 points; a constant regressor is a DegeneracyError.
OUFit fit_ou(const Eigen::Ref<const VectorXd>& x);

/// (x_terminal - m) / sigma, or nothing when sigma is not positive.
std::optional<double> signal(const OUFit& fit, double x_terminal);

struct ThresholdRule {
    double open = 1.25;
    double close = 0.5;
    double tau_max_days = 30.0;
};

struct PositionState {
    std::vector<int> w_eps;
    std::vector<std::optional<Date>> opened_at;

    static PositionState flat(Index n) {
        return {std::vector<int>(static_cast<std::size_t>(n), 0),
                std::vector<std::optional<Date>>(static_cast<std::size_t>(n))};
    }
};

/// One asset's transition.
int next_position(int prev, std::optional<double> s, double tau_days, const ThresholdRule& rule = {});

PositionState update_positions(const PositionState& prev, std::span<const std::optional<double>> signals,
                               std::span<const OUFit> fits, Date today = {}, const ThresholdRule& rule = {});

struct EquityWeights {
    VectorXd w;
    bool flat = true;
};

/// Phi^T w_eps scaled to unit l1 norm; a flat state (or a vanishing projection) gives zeros.
EquityWeights strategy_weights(const Eigen::Ref<const MatrixXd>& phi, const PositionState& state);

struct FitRow {
    Date date;
    std::string asset;
    OUFit fit;
};

void write_fit_table(std::span<const FitRow> rows, const std::filesystem::path& path, std::string_view preamble = {});

}  // namespace rankarb
