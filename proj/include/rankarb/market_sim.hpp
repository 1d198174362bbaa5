#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"

namespace rankarb {

/// Daily capitalizations, returns and risk-free rates on a common trading calendar.
///
/// Matrices are asset x date. Entries that are not alive are flagged in the masks and
/// hold NaN; they are never zero-filled. Assets are kept in ascending identifier order,
/// so an asset's index doubles as its tie-break key in rankings.
struct MarketPanel {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    MatrixXd caps;
    MatrixXd returns;
    MaskMatrix cap_valid;
    MaskMatrix return_valid;
    VectorXd risk_free;

    Index n_assets() const { return static_cast<Index>(assets.size()); }
    Index n_dates() const { return static_cast<Index>(dates.size()); }
    bool has_cap(Index i, Index t) const { return cap_valid(i, t); }
    bool has_return(Index i, Index t) const { return return_valid(i, t); }

    std::optional<Index> date_index(const Date& d) const;
    std::optional<Index> asset_index(std::string_view id) const;

    /// Throws DataError if any documented invariant is broken.
    void validate() const;
};

/// One trading day of minute capitalizations. Tick 1 repeats the prior close; the last
/// tick is the day's close.
struct IntradayPanel {
    Date day;
    std::vector<int> minutes;
    std::vector<std::string> assets;
    MatrixXd caps;  // asset x minute

    Index n_assets() const { return caps.rows(); }
    Index n_minutes() const { return caps.cols(); }
};

struct AtlasConfig {
    Index n_assets = 10;
    /// Daily dates including the initial snapshot, which has no return.
    Index n_days = 252;
    Index minutes_per_day = 390;
    /// Per-rank log drift (1/day) and log volatility (1/sqrt(day)); a single entry is
    /// broadcast to every rank.
    std::vector<double> rank_drifts{0.0};
    std::vector<double> rank_vols{0.02};
    /// Loading on a common Brownian factor, in [0, 1).
    double common_loading = 0.0;
    double initial_cap = 1.0e10;
    /// Initial log-cap gap between consecutive assets.
    double initial_log_spacing = 0.1;
    std::uint64_t seed = 1;
    Date start{2000, 1, 3};
    bool keep_intraday = true;
};

/// intraday[t - 1] covers daily.dates[t] for t >= 1.
struct AtlasMarket {
    MarketPanel daily;
    std::vector<IntradayPanel> intraday;
};

AtlasMarket generate_atlas_market(const AtlasConfig& config);

/// Synthetic panel with one common factor plus residuals whose cumulative sums are
/// Ornstein-Uhlenbeck with mean-reversion time tau_days.
struct FactorOUConfig {
    Index n_assets = 30;
    Index n_days = 600;
    double tau_days = 2.5;
    double residual_vol = 0.01;  // stationary std of the cumulative residual
    double factor_vol = 0.01;    // daily std of the common factor
    std::uint64_t seed = 1;
    Date start{2000, 1, 3};
};

MarketPanel generate_factor_ou_panel(const FactorOUConfig& config);

struct LoadWarning {
    std::size_t row = 0;
    std::string message;
};

MarketPanel load_daily_panel(const std::filesystem::path& path, std::vector<LoadWarning>& warnings);
MarketPanel load_daily_panel(const std::filesystem::path& path);

/// Fills panel.risk_free from a `date,rate` file; every panel date must be covered.
void load_risk_free(const std::filesystem::path& path, MarketPanel& panel);

/// All days in an intraday file. When `companion` is given, each day's first tick must
/// match the companion's prior close to 1e-6 relative.
std::vector<IntradayPanel> load_intraday_panels(const std::filesystem::path& path,
                                                const MarketPanel* companion = nullptr);
/// Single-day file.
IntradayPanel load_intraday_panel(const std::filesystem::path& path,
                                  const MarketPanel* companion = nullptr);

void write_daily_csv(const MarketPanel& panel, const std::filesystem::path& path,
                     std::string_view preamble = {});
void write_risk_free_csv(const MarketPanel& panel, const std::filesystem::path& path,
                         std::string_view preamble = {});
void write_intraday_csv(const std::vector<IntradayPanel>& days, const std::filesystem::path& path,
                        std::string_view preamble = {});

struct UniverseSelection {
    Date as_of;
    Index as_of_index = 0;
    /// Asset indices, descending cap at as_of.
    std::vector<Index> members;
};

/// Top-n by capitalization at as_of, then dropping assets without a valid return at
/// as_of + 1. Ties go to the lower asset index.
UniverseSelection select_universe(const MarketPanel& panel, Index as_of, Index n);

}  // namespace rankarb
