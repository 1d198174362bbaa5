#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/ou_strategy.hpp"

namespace rankarb {

/// Correlation eigenvalues of one window against the Marchenko-Pastur bulk.
///
/// With N assets and T days, q = min(N,T)/max(N,T). When N > T only the top T
/// eigenvalues can be nonzero; they are rescaled by T/N before comparison with
/// the edges, which puts them on the scale of the T x T dual matrix.
struct SpectrumReport {
    Date as_of;
    VectorXd eigenvalues;  // descending, sum = number of kept assets
    double q = 0.0;
    double mp_lower = 0.0;
    double mp_upper = 0.0;
    VectorXd scaled_bulk;  // descending, compared with the edges
    double fraction_outside = 0.0;
    std::vector<Index> dropped;  // zero-variance rows
};

SpectrumReport eigen_spectrum(const Eigen::Ref<const MatrixXd>& returns, Date as_of = {});

struct Histogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<Index> counts;
    Index overflow = 0;

    double center(std::size_t bin) const { return lo + (static_cast<double>(bin) + 0.5) * width; }
};

struct TauDistribution {
    Histogram histogram;
    Index n_mean_reverting = 0;
    Index n_non_mean_reverting = 0;
    double fraction_above_30 = 0.0;  // among mean-reverting fits
    std::optional<double> mode_days;
};

TauDistribution tau_distribution(std::span<const OUFit> fits, double bin_days = 1.0, double max_days = 60.0);

struct DensityGrid {
    double lo = -4.0;
    double hi = 4.0;
    double width = 0.1;

    Index n_bins() const;
};

struct DensityDiff {
    VectorXd centers;
    MatrixXd diff;  // alpha x bin: empirical density minus the standard normal density
    std::vector<Index> pool_sizes;
    std::vector<std::string> warnings;

    double max_abs() const { return diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0; }
};

/// Histogram density of each pool, normalized over the samples inside the grid.
DensityDiff xhat_density_diff(std::span<const VectorXd> pools, const DensityGrid& grid = {});

/// Pools normalized trajectories by window position alpha.
std::vector<VectorXd> pool_by_alpha(std::span<const MatrixXd> normalized);

struct StrategyMapRow {
    Date date;
    std::string asset;
    double deviation = 0.0;
    double tau_days = 0.0;
    double w_eps = 0.0;
};

/// Rows with a defined signal and a mean-reverting fit only.
std::vector<StrategyMapRow> strategy_map(Date date, std::span<const std::string> assets, std::span<const OUFit> fits,
                                         std::span<const std::optional<double>> signals,
                                         const Eigen::Ref<const VectorXd>& w_eps);

struct SwitchingHistogram {
    Histogram histogram;  // gap length in minutes, bins of `width` starting at 1
    Index n_gaps = 0;
    bool empty = true;
    double rate = 0.0;         // 1 / mean gap
    double log_linear_r2 = 0.0;
};

/// Adjacent-rank pairs (k, k+1) for k = 0, stride, 2*stride, ... at each day's opening
/// ranks; gaps are pooled over days and pairs.
SwitchingHistogram switching_time_distribution(std::span<const IntradayPanel> days, Index stride = 25,
                                               double delta = 1e-3, double width = 1.0, double max_gap = 390.0);

void write_spectrum_csv(std::span<const SpectrumReport> reports, const std::filesystem::path& path,
                        std::string_view preamble = {});
void write_histogram_csv(const Histogram& h, std::string_view value_name, const std::filesystem::path& path,
                         std::string_view preamble = {});
void write_density_csv(const DensityDiff& d, const std::filesystem::path& path, std::string_view preamble = {});
void write_strategy_map_csv(std::span<const StrategyMapRow> rows, const std::filesystem::path& path,
                            std::string_view preamble = {});

}  // namespace rankarb
