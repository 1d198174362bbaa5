#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankarb/diagnostics.hpp"
#include "rankarb/factor_model.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/nn_bridge.hpp"
#include "rankarb/ou_strategy.hpp"
#include "rankarb/pnl_metrics.hpp"
#include "rankarb/residual_panel.hpp"

namespace rankarb {

/// Flat key=value settings shared by every subcommand.
struct Config {
    // inputs and outputs
    std::string daily;
    std::string intraday;
    std::string risk_free;
    std::string weights;
    std::string out_dir = "out";
    std::string strategy = "ou";  // ou | nn
    std::string space = "name";   // name | rank, for decompose/export-train/import-weights
    std::string as_of;

    // synthetic market
    Index sim_assets = 20;
    Index sim_days = 320;
    Index minutes_per_day = 390;
    double sim_drift = 0.0;
    double sim_vol = 0.02;
    double sim_common_loading = 0.3;
    double sim_spacing = 0.05;
    bool sim_write_intraday = true;
    std::uint64_t seed = 1;

    // decomposition and signals
    Index n_universe = 500;
    Index pca_window = 252;
    Index beta_window = 60;
    Index lookback = 60;
    Index k_name = 5;
    Index k_rank = 1;
    double open_threshold = 1.25;
    double close_threshold = 0.5;
    double tau_max_days = 30.0;

    // execution and accounting
    double eta = 2e-4;
    double leverage = 1.0;
    Index interval = 225;
    bool excess_sharpe = true;

    // diagnostics
    double delta = 1e-3;
    Index pair_stride = 25;
    Index spectrum_stride = 21;
    double density_width = 0.1;
    double tau_bin_days = 1.0;

    // sweep
    std::string sweep_eta = "0,0.0002,0.0005";
    std::string sweep_interval = "5,30,225,390";

    static std::vector<std::string> keys();
    /// Throws ConfigError on an unknown key or an unparsable value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    void load_file(const std::filesystem::path& path);
    void validate() const;
    /// FNV-1a over the sorted key=value listing (out_dir excluded), as 16 hex digits.
    std::string hash() const;
    ThresholdRule rule() const { return {open_threshold, close_threshold, tau_max_days}; }
};

std::vector<double> parse_number_list(const std::string& text, const std::string& key);

/// A daily return panel in either space, with the rows the strategy may trade.
struct ReturnSpace {
    std::string space;
    std::vector<std::string> ids;
    std::vector<Date> dates;
    MatrixXd returns;
    MaskMatrix valid;
    VectorXd risk_free;
    Index K = 1;
    /// Rows eligible on date t (before the window-completeness filter).
    std::function<std::vector<Index>(Index t)> universe;
};

ReturnSpace name_space(const MarketPanel& panel, const Config& config);
ReturnSpace rank_space(const MarketPanel& panel, const Config& config);

struct DayModel {
    Index t = 0;
    std::vector<Index> members;
    FactorModel<double> model;
    MatrixXd eps;  // members x lookback
    std::vector<OUFit> fits;
    std::vector<std::optional<double>> signals;
};

struct StrategyRun {
    MatrixXd weights;  // rows x dates, l1-normalized equity weights
    MatrixXd w_eps;    // rows x dates
    std::vector<FitRow> fits;
    std::vector<StrategyMapRow> map;
    std::vector<CumulativeTrajectory> trajectories;
    std::vector<MatrixXd> normalized;
    std::vector<std::string> warnings;
    Index flat_days = 0;
};

struct RunOptions {
    bool keep_fits = false;
    bool keep_trajectories = false;
    bool keep_normalized = false;
    const WeightStream* nn = nullptr;
};

/// Daily loop: universe -> PCA -> residuals -> OU (or imported) residual weights -> equity weights.
StrategyRun run_strategy(const ReturnSpace& rs, const Config& config, const RunOptions& options = {});

/// Decomposition for one date; nothing when the universe is too small.
std::optional<DayModel> decompose_day(const ReturnSpace& rs, const Config& config, Index t);

struct BacktestResult {
    StrategyRun run;
    PnLSeries pnl;
    std::vector<AnnualMetrics> metrics;
    std::optional<AnnualMetrics> overall;
    std::vector<CostLedger> ledgers;
    std::vector<RankDaySummary> days;
};

BacktestResult backtest_name(const MarketPanel& panel, const Config& config, const RunOptions& options = {});
BacktestResult backtest_rank(const MarketPanel& panel, std::span<const IntradayPanel> intraday, const Config& config,
                             const RunOptions& options = {});

/// Loads the configured daily panel and optional risk-free file.
MarketPanel load_market(const Config& config);
std::vector<IntradayPanel> load_intraday(const Config& config, const MarketPanel& panel);

/// Writes a backtest's PnL, metrics and fit tables (plus the ledger in rank space).
void write_backtest(const BacktestResult& result, const std::string& space, const Config& config);

struct DiagnosticsBundle {
    std::vector<SpectrumReport> spectra;
    TauDistribution tau;
    DensityDiff density;
    std::vector<StrategyMapRow> map;
    std::optional<SwitchingHistogram> switching;
};

DiagnosticsBundle run_diagnostics(const MarketPanel& panel, std::span<const IntradayPanel> intraday,
                                  const Config& config);
void write_diagnostics(const DiagnosticsBundle& bundle, const Config& config);

struct SweepRow {
    std::string space;
    double eta = 0.0;
    Index interval = 0;
    double terminal_value = 0.0;
    std::optional<AnnualMetrics> overall;
};

std::vector<SweepRow> sweep(const MarketPanel& panel, std::span<const IntradayPanel> intraday, const Config& config);
void write_sweep(std::span<const SweepRow> rows, const Config& config);

}  // namespace rankarb
