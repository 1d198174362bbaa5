#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/rebalance_engine.hpp"

namespace rankarb {

/// Portfolio value on the panel's date axis, V(0) = 1. Column t of a weight matrix is
/// the book chosen at the close of date t and earns the returns of date t + 1.
struct PnLSeries {
    std::vector<Date> dates;
    VectorXd value;
    double eta = 0.0;
    double leverage = 1.0;
    /// Set when V hit zero or below; the series stops at that date.
    bool bankrupt = false;

    Index size() const { return value.size(); }
    VectorXd daily_returns() const;
};

struct PnLOptions {
    double eta = 2e-4;
    double leverage = 1.0;
};

/// Name-space recursion with turnover cost against the drifted previous book.
PnLSeries pnl_name(const Eigen::Ref<const MatrixXd>& weights, const MarketPanel& panel, const PnLOptions& opt = {});

struct RankDaySummary {
    Date date;
    double total_latency = 0.0;
    double total_spread = 0.0;
    double end_value = 0.0;
};

struct RankPnL {
    PnLSeries series;
    std::vector<CostLedger> ledgers;
    std::vector<RankDaySummary> days;
};

/// Rank-space recursion: weights is ranks x dates. Intraday panels are matched by date and
/// are only required on days that carry a position.
RankPnL pnl_rank(const Eigen::Ref<const MatrixXd>& weights, const MarketPanel& panel,
                 std::span<const IntradayPanel> intraday, Index interval, const PnLOptions& opt = {});

struct AnnualMetrics {
    int year = 0;
    Index n_obs = 0;
    double annual_return = 0.0;
    double annual_vol = 0.0;
    std::optional<double> sharpe;  // empty when vol is zero
};

/// Per calendar year. excess_sharpe subtracts the annualized risk-free rate; otherwise
/// Sharpe is plain return over vol. Years with fewer than two returns are skipped.
std::vector<AnnualMetrics> annual_metrics(const PnLSeries& series, const Eigen::Ref<const VectorXd>& risk_free,
                                          bool excess_sharpe = true);

/// The same statistics over the whole series as one bucket (year = 0).
std::optional<AnnualMetrics> overall_metrics(const PnLSeries& series, const Eigen::Ref<const VectorXd>& risk_free,
                                             bool excess_sharpe = true);

struct NeutralityRow {
    std::optional<double> ratio;  // sum(w) / sum|w|
    double long_mass = 0.0;
    double short_mass = 0.0;
};

/// One row per column of weights.
std::vector<NeutralityRow> dollar_neutrality(const Eigen::Ref<const MatrixXd>& weights);

struct HoldingTime {
    int year = 0;
    double average_days = 0.0;
    Index n_runs = 0;
};

/// Maximal nonzero runs per asset, each counted in the calendar year it starts.
std::vector<HoldingTime> holding_time(const Eigen::Ref<const MatrixXd>& w_eps, std::span<const Date> dates);

void write_pnl_csv(const PnLSeries& series, const std::filesystem::path& path, std::string_view preamble = {});
void write_metrics_csv(std::span<const AnnualMetrics> metrics, std::string_view strategy,
                       const std::filesystem::path& path, std::string_view preamble = {});
void write_day_summary_csv(std::span<const RankDaySummary> days, const std::filesystem::path& path,
                           std::string_view preamble = {});

}  // namespace rankarb
