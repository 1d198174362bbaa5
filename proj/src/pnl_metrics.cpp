#include "rankarb/pnl_metrics.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

#include "csv.hpp"

namespace rankarb {

namespace {

void check_l1(const Eigen::Ref<const VectorXd>& w, const Date& d) {
    if (!w.allFinite()) {
        throw DataError("weights on " + d.str() + " are not finite");
    }
    if (w.lpNorm<1>() > 1.0 + 1e-9) {
        throw DataError("weights on " + d.str() + " exceed unit l1 norm");
    }
}

PnLSeries start_series(const MarketPanel& panel, const PnLOptions& opt) {
    PnLSeries s;
    s.dates = panel.dates;
    s.value = VectorXd::Zero(panel.n_dates());
    s.eta = opt.eta;
    s.leverage = opt.leverage;
    if (panel.n_dates() > 0) {
        s.value[0] = 1.0;
    }
    return s;
}

// Returns false (and truncates) when the new value is not positive.
bool settle(PnLSeries& s, Index t, double v) {
    s.value[t] = v;
    if (v > 0.0) {
        return true;
    }
    s.bankrupt = true;
    s.value.conservativeResize(t + 1);
    s.dates.resize(static_cast<std::size_t>(t + 1));
    return false;
}

struct Moments {
    Index n = 0;
    double growth = 1.0;
    double rf_growth = 1.0;
    std::vector<double> values;
};

std::optional<AnnualMetrics> summarize(int year, const Moments& m, bool excess_sharpe) {
    if (m.n < 2) {
        return std::nullopt;
    }
    AnnualMetrics out;
    out.year = year;
    out.n_obs = m.n;
    const double periods = 252.0 / static_cast<double>(m.n);
    out.annual_return = std::pow(m.growth, periods) - 1.0;
    const double rf_annual = std::pow(m.rf_growth, periods) - 1.0;
    double mean = 0.0;
    for (double r : m.values) {
        mean += r;
    }
    mean /= static_cast<double>(m.n);
    double ss = 0.0;
    for (double r : m.values) {
        ss += (r - mean) * (r - mean);
    }
    out.annual_vol = std::sqrt(252.0) * std::sqrt(ss / static_cast<double>(m.n - 1));
    if (out.annual_vol > 1e-12) {
        out.sharpe = (out.annual_return - (excess_sharpe ? rf_annual : 0.0)) / out.annual_vol;
    }
    return out;
}

void accumulate(Moments& m, double r, double rf) {
    ++m.n;
    m.growth *= 1.0 + r;
    m.rf_growth *= 1.0 + rf;
    m.values.push_back(r);
}

}  // namespace

VectorXd PnLSeries::daily_returns() const {
    if (value.size() < 2) {
        return VectorXd(0);
    }
    return (value.tail(value.size() - 1).array() / value.head(value.size() - 1).array() - 1.0).matrix();
}

PnLSeries pnl_name(const Eigen::Ref<const MatrixXd>& weights, const MarketPanel& panel, const PnLOptions& opt) {
    const Index N = panel.n_assets();
    const Index T = panel.n_dates();
    if (weights.rows() != N || weights.cols() != T) {
        throw DomainError("pnl_name: weights must be assets x dates (" + std::to_string(N) + "x" +
                          std::to_string(T) + ")");
    }
    PnLSeries s = start_series(panel, opt);
    VectorXd drifted = VectorXd::Zero(N);  // previous book carried to the current close
    for (Index t = 0; t + 1 < T; ++t) {
        const Date& today = panel.dates[static_cast<std::size_t>(t)];
        check_l1(weights.col(t), today);
        const double V = s.value[t];
        const VectorXd held = opt.leverage * V * weights.col(t);
        const double tc = opt.eta * (held - drifted).lpNorm<1>();
        double gross = 0.0;
        for (Index i = 0; i < N; ++i) {
            if (held[i] == 0.0) {
                drifted[i] = 0.0;
                continue;
            }
            if (!panel.has_return(i, t + 1)) {
                throw DataError("pnl_name: " + panel.assets[static_cast<std::size_t>(i)] + " held on " +
                                today.str() + " has no return on " + panel.dates[static_cast<std::size_t>(t + 1)].str());
            }
            drifted[i] = held[i] * (1.0 + panel.returns(i, t + 1));
            gross += drifted[i];
        }
        const double v = (1.0 + panel.risk_free[t + 1]) * (V - held.sum() - tc) + gross;
        if (!settle(s, t + 1, v)) {
            break;
        }
    }
    return s;
}

RankPnL pnl_rank(const Eigen::Ref<const MatrixXd>& weights, const MarketPanel& panel,
                 std::span<const IntradayPanel> intraday, Index interval, const PnLOptions& opt) {
    const Index T = panel.n_dates();
    if (weights.cols() != T) {
        throw DomainError("pnl_rank: weights must have one column per date");
    }
    std::map<Date, std::size_t> by_date;
    for (std::size_t d = 0; d < intraday.size(); ++d) {
        by_date[intraday[d].day] = d;
    }
    RankPnL out;
    out.series = start_series(panel, opt);
    PnLSeries& s = out.series;
    std::unordered_map<std::string, double> prev_end;
    for (Index t = 0; t + 1 < T; ++t) {
        const Date& next = panel.dates[static_cast<std::size_t>(t + 1)];
        check_l1(weights.col(t), panel.dates[static_cast<std::size_t>(t)]);
        const double V = s.value[t];
        const VectorXd held = opt.leverage * V * weights.col(t);
        auto found = by_date.find(next);
        if (found == by_date.end()) {
            if (held.isZero(0.0) && prev_end.empty()) {
                if (!settle(s, t + 1, (1.0 + panel.risk_free[t + 1]) * V)) {
                    break;
                }
                continue;
            }
            throw DataError("pnl_rank: missing intraday panel for " + next.str());
        }
        const auto& day = intraday[found->second];

        const IntradayBook opening = open_book(held, day.caps.col(0));
        double open_turnover = 0.0;
        for (Index i = 0; i < day.n_assets(); ++i) {
            auto it = prev_end.find(day.assets[static_cast<std::size_t>(i)]);
            const double before = it == prev_end.end() ? 0.0 : it->second;
            open_turnover += std::abs(opening.name_weights[i] - before);
            if (it != prev_end.end()) {
                prev_end.erase(it);
            }
        }
        for (const auto& [asset, w] : prev_end) {
            if (w != 0.0) {
                throw DataError("pnl_rank: " + asset + " held into " + next.str() + " but absent from its intraday panel");
            }
        }
        DayResult res = simulate_day(held, day, interval, opt.eta);
        const double latency = res.ledger.total_latency();
        const double spread = res.ledger.total_spread();
        const double cash = V - held.sum() - opt.eta * open_turnover - latency - spread;
        const double v = (1.0 + panel.risk_free[t + 1]) * cash + res.book.name_weights.sum();

        prev_end.clear();
        if (!res.book.name_weights.isZero(0.0)) {
            for (Index i = 0; i < day.n_assets(); ++i) {
                prev_end[day.assets[static_cast<std::size_t>(i)]] = res.book.name_weights[i];
            }
        }
        out.days.push_back({next, latency, spread, v});
        out.ledgers.push_back(std::move(res.ledger));
        if (!settle(s, t + 1, v)) {
            break;
        }
    }
    return out;
}

std::vector<AnnualMetrics> annual_metrics(const PnLSeries& series, const Eigen::Ref<const VectorXd>& risk_free,
                                          bool excess_sharpe) {
    if (risk_free.size() < series.size()) {
        throw DomainError("annual_metrics: risk-free series is shorter than the PnL series");
    }
    std::map<int, Moments> years;
    for (Index t = 1; t < series.size(); ++t) {
        const double r = series.value[t] / series.value[t - 1] - 1.0;
        accumulate(years[series.dates[static_cast<std::size_t>(t)].year()], r, risk_free[t]);
    }
    std::vector<AnnualMetrics> out;
    for (const auto& [year, m] : years) {
        if (auto row = summarize(year, m, excess_sharpe)) {
            out.push_back(*row);
        }
    }
    return out;
}

std::optional<AnnualMetrics> overall_metrics(const PnLSeries& series, const Eigen::Ref<const VectorXd>& risk_free,
                                             bool excess_sharpe) {
    if (risk_free.size() < series.size()) {
        throw DomainError("overall_metrics: risk-free series is shorter than the PnL series");
    }
    Moments m;
    for (Index t = 1; t < series.size(); ++t) {
        accumulate(m, series.value[t] / series.value[t - 1] - 1.0, risk_free[t]);
    }
    return summarize(0, m, excess_sharpe);
}

std::vector<NeutralityRow> dollar_neutrality(const Eigen::Ref<const MatrixXd>& weights) {
    std::vector<NeutralityRow> out;
    out.reserve(static_cast<std::size_t>(weights.cols()));
    for (Index t = 0; t < weights.cols(); ++t) {
        NeutralityRow row;
        const auto w = weights.col(t).array();
        row.long_mass = w.max(0.0).sum();
        row.short_mass = w.min(0.0).sum();
        const double gross = w.abs().sum();
        if (gross > 0.0) {
            row.ratio = w.sum() / gross;
        }
        out.push_back(row);
    }
    return out;
}

std::vector<HoldingTime> holding_time(const Eigen::Ref<const MatrixXd>& w_eps, std::span<const Date> dates) {
    if (static_cast<Index>(dates.size()) != w_eps.cols()) {
        throw DomainError("holding_time: weights and dates are not aligned");
    }
    std::map<int, std::pair<double, Index>> per_year;
    for (Index i = 0; i < w_eps.rows(); ++i) {
        Index t = 0;
        while (t < w_eps.cols()) {
            if (w_eps(i, t) == 0.0) {
                ++t;
                continue;
            }
            const Index start = t;
            while (t < w_eps.cols() && w_eps(i, t) != 0.0) {
                ++t;
            }
            auto& [total, count] = per_year[dates[static_cast<std::size_t>(start)].year()];
            total += static_cast<double>(t - start);
            ++count;
        }
    }
    std::vector<HoldingTime> out;
    for (const auto& [year, acc] : per_year) {
        out.push_back({year, acc.first / static_cast<double>(acc.second), acc.second});
    }
    return out;
}

void write_pnl_csv(const PnLSeries& series, const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,value\n";
    for (Index t = 0; t < series.size(); ++t) {
        out << series.dates[static_cast<std::size_t>(t)].str() << ',' << series.value[t] << '\n';
    }
}

void write_metrics_csv(std::span<const AnnualMetrics> metrics, std::string_view strategy,
                       const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "# strategy=" << strategy << '\n';
    out << "year,return,vol,sharpe\n";
    for (const auto& m : metrics) {
        out << m.year << ',' << m.annual_return << ',' << m.annual_vol << ',';
        if (m.sharpe) {
            out << *m.sharpe;
        } else {
            out << "NA";
        }
        out << '\n';
    }
}

void write_day_summary_csv(std::span<const RankDaySummary> days, const std::filesystem::path& path,
                           std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,total_latency,total_spread,end_value\n";
    for (const auto& d : days) {
        out << d.date.str() << ',' << d.total_latency << ',' << d.total_spread << ',' << d.end_value << '\n';
    }
}

}  // namespace rankarb
