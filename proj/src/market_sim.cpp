#include "rankarb/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "csv.hpp"
#include "rankarb/rank_view.hpp"

namespace rankarb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> synthetic_ids(Index n) {
    const int width = std::max(4, static_cast<int>(std::to_string(n).size()));
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        std::string digits = std::to_string(i + 1);
        ids.push_back("A" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    }
    return ids;
}

std::vector<Date> weekday_calendar(Date start, Index n) {
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
        dates.push_back(t == 0 ? start : dates.back().next_weekday());
    }
    return dates;
}

MarketPanel empty_panel(std::vector<std::string> assets, std::vector<Date> dates) {
    MarketPanel p;
    const auto N = static_cast<Index>(assets.size());
    const auto T = static_cast<Index>(dates.size());
    p.assets = std::move(assets);
    p.dates = std::move(dates);
    p.caps = MatrixXd::Constant(N, T, kNaN);
    p.returns = MatrixXd::Constant(N, T, kNaN);
    p.cap_valid = MaskMatrix::Constant(N, T, false);
    p.return_valid = MaskMatrix::Constant(N, T, false);
    p.risk_free = VectorXd::Zero(T);
    return p;
}

std::vector<double> broadcast(const std::vector<double>& v, Index n, const char* what) {
    if (v.size() == 1) {
        return std::vector<double>(static_cast<std::size_t>(n), v.front());
    }
    if (static_cast<Index>(v.size()) != n) {
        throw ConfigError(std::string("atlas: ") + what + " needs 1 or n_assets entries, got " +
                          std::to_string(v.size()));
    }
    return v;
}

}  // namespace

std::optional<Index> MarketPanel::date_index(const Date& d) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    if (it == dates.end() || *it != d) {
        return std::nullopt;
    }
    return static_cast<Index>(it - dates.begin());
}

std::optional<Index> MarketPanel::asset_index(std::string_view id) const {
    auto it = std::lower_bound(assets.begin(), assets.end(), id);
    if (it == assets.end() || *it != id) {
        return std::nullopt;
    }
    return static_cast<Index>(it - assets.begin());
}

void MarketPanel::validate() const {
    const Index N = n_assets();
    const Index T = n_dates();
    if (caps.rows() != N || caps.cols() != T || returns.rows() != N || returns.cols() != T ||
        cap_valid.rows() != N || cap_valid.cols() != T || return_valid.rows() != N ||
        return_valid.cols() != T || risk_free.size() != T) {
        throw DataError("panel: matrix shapes disagree with the date/asset axes");
    }
    for (Index t = 1; t < T; ++t) {
        if (!(dates[static_cast<std::size_t>(t - 1)] < dates[static_cast<std::size_t>(t)])) {
            throw DataError("panel: dates not strictly increasing at " + dates[static_cast<std::size_t>(t)].str());
        }
    }
    for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < N; ++i) {
            if (cap_valid(i, t) && !(caps(i, t) > 0.0 && std::isfinite(caps(i, t)))) {
                throw DataError("panel: non-positive cap for " + assets[static_cast<std::size_t>(i)]);
            }
            if (!cap_valid(i, t) && !std::isnan(caps(i, t))) {
                throw DataError("panel: masked cap holds a value for " + assets[static_cast<std::size_t>(i)]);
            }
            if (return_valid(i, t) && !(std::isfinite(returns(i, t)) && returns(i, t) > -1.0)) {
                throw DataError("panel: invalid return for " + assets[static_cast<std::size_t>(i)]);
            }
        }
    }
}

AtlasMarket generate_atlas_market(const AtlasConfig& config) {
    const Index N = config.n_assets;
    const Index T = config.n_days;
    const Index M = config.minutes_per_day;
    if (N < 2) {
        throw ConfigError("atlas: n_assets must be >= 2");
    }
    if (T < 1) {
        throw ConfigError("atlas: n_days must be >= 1");
    }
    if (M < 2) {
        throw ConfigError("atlas: minutes_per_day must be >= 2");
    }
    const auto drift = broadcast(config.rank_drifts, N, "rank_drifts");
    const auto vol = broadcast(config.rank_vols, N, "rank_vols");
    for (Index k = 0; k < N; ++k) {
        if (!std::isfinite(drift[static_cast<std::size_t>(k)]) || !std::isfinite(vol[static_cast<std::size_t>(k)]) ||
            vol[static_cast<std::size_t>(k)] < 0.0) {
            throw ConfigError("atlas: rank " + std::to_string(k + 1) + " has invalid drift/vol");
        }
    }
    if (!(config.common_loading >= 0.0 && config.common_loading < 1.0)) {
        throw ConfigError("atlas: common_loading must lie in [0, 1)");
    }
    if (!(config.initial_cap > 0.0) || !std::isfinite(config.initial_log_spacing)) {
        throw ConfigError("atlas: invalid initial caps");
    }

    AtlasMarket market;
    market.daily = empty_panel(synthetic_ids(N), weekday_calendar(config.start, T));
    MarketPanel& daily = market.daily;

    VectorXd log_cap(N);
    for (Index i = 0; i < N; ++i) {
        log_cap[i] = std::log(config.initial_cap) - static_cast<double>(i) * config.initial_log_spacing;
    }
    daily.caps.col(0) = log_cap.array().exp().matrix();
    daily.cap_valid.col(0).setConstant(true);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = 1.0 / static_cast<double>(M - 1);
    const double sqrt_dt = std::sqrt(dt);
    const double idio = std::sqrt(1.0 - config.common_loading * config.common_loading);

    // order[k] is the asset at rank k; maintained by insertion sort since ranks move slowly.
    std::vector<Index> order(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    auto ranks_before = [&](Index a, Index b) {
        return log_cap[a] > log_cap[b] || (log_cap[a] == log_cap[b] && a < b);
    };
    std::vector<Index> rank_of(static_cast<std::size_t>(N));
    VectorXd shocks(N);

    if (config.keep_intraday) {
        market.intraday.reserve(static_cast<std::size_t>(T > 0 ? T - 1 : 0));
    }
    for (Index t = 1; t < T; ++t) {
        IntradayPanel day;
        if (config.keep_intraday) {
            day.day = daily.dates[static_cast<std::size_t>(t)];
            day.assets = daily.assets;
            day.minutes.resize(static_cast<std::size_t>(M));
            for (Index m = 0; m < M; ++m) {
                day.minutes[static_cast<std::size_t>(m)] = static_cast<int>(m + 1);
            }
            day.caps.resize(N, M);
            day.caps.col(0) = daily.caps.col(t - 1);
        }
        for (Index m = 1; m < M; ++m) {
            for (std::size_t k = 1; k < order.size(); ++k) {
                Index cur = order[k];
                std::size_t j = k;
                while (j > 0 && ranks_before(cur, order[j - 1])) {
                    order[j] = order[j - 1];
                    --j;
                }
                order[j] = cur;
            }
            for (std::size_t k = 0; k < order.size(); ++k) {
                rank_of[static_cast<std::size_t>(order[k])] = static_cast<Index>(k);
            }
            const double common = normal(rng);
            for (Index i = 0; i < N; ++i) {
                shocks[i] = normal(rng);
            }
            for (Index i = 0; i < N; ++i) {
                const auto k = static_cast<std::size_t>(rank_of[static_cast<std::size_t>(i)]);
                log_cap[i] += drift[k] * dt +
                              vol[k] * sqrt_dt * (idio * shocks[i] + config.common_loading * common);
            }
            if (config.keep_intraday) {
                day.caps.col(m) = log_cap.array().exp().matrix();
            }
        }
        if (config.keep_intraday) {
            daily.caps.col(t) = day.caps.col(M - 1);
            market.intraday.push_back(std::move(day));
        } else {
            daily.caps.col(t) = log_cap.array().exp().matrix();
        }
        daily.cap_valid.col(t).setConstant(true);
        daily.returns.col(t) = (daily.caps.col(t).array() / daily.caps.col(t - 1).array() - 1.0).matrix();
        daily.return_valid.col(t).setConstant(true);
    }
    return market;
}

MarketPanel generate_factor_ou_panel(const FactorOUConfig& config) {
    const Index N = config.n_assets;
    const Index T = config.n_days;
    if (N < 2 || T < 2) {
        throw ConfigError("factor-ou: need n_assets >= 2 and n_days >= 2");
    }
    if (!(config.tau_days > 0.0) || !(config.residual_vol >= 0.0) || !(config.factor_vol >= 0.0)) {
        throw ConfigError("factor-ou: tau_days must be positive and vols non-negative");
    }
    MarketPanel panel = empty_panel(synthetic_ids(N), weekday_calendar(config.start, T));
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.5, 1.5);

    const double b = std::exp(-1.0 / config.tau_days);
    const double noise = config.residual_vol * std::sqrt(1.0 - b * b);
    VectorXd loading(N);
    VectorXd level(N);
    for (Index i = 0; i < N; ++i) {
        loading[i] = uniform(rng);
        level[i] = config.residual_vol * normal(rng);
        panel.caps(i, 0) = 1.0e10 * std::exp(-0.05 * static_cast<double>(i));
    }
    panel.cap_valid.col(0).setConstant(true);
    for (Index t = 1; t < T; ++t) {
        const double factor = config.factor_vol * normal(rng);
        for (Index i = 0; i < N; ++i) {
            const double next = b * level[i] + noise * normal(rng);
            const double r = loading[i] * factor + (next - level[i]);
            level[i] = next;
            panel.returns(i, t) = r;
            panel.caps(i, t) = panel.caps(i, t - 1) * (1.0 + r);
        }
        panel.cap_valid.col(t).setConstant(true);
        panel.return_valid.col(t).setConstant(true);
    }
    panel.validate();
    return panel;
}

MarketPanel load_daily_panel(const std::filesystem::path& path, std::vector<LoadWarning>& warnings) {
    struct Row {
        Date date;
        std::string asset;
        std::optional<double> cap;
        std::optional<double> ret;
        std::size_t line;
    };
    csv::Reader reader(path);
    reader.expect_header("date,asset,cap,return");
    std::vector<Row> rows;
    std::string line;
    while (reader.next(line)) {
        const auto row = reader.line();
        auto f = csv::split(line);
        if (f.size() != 4) {
            throw DataError(csv::at_row(row) + "expected 4 fields, got " + std::to_string(f.size()));
        }
        Date d;
        try {
            d = Date::parse(f[0]);
        } catch (const DataError& e) {
            throw DataError(csv::at_row(row) + e.what());
        }
        if (!rows.empty() && d < rows.back().date) {
            throw DataError(csv::at_row(row) + "non-monotonic date " + d.str());
        }
        if (f[1].empty()) {
            throw DataError(csv::at_row(row) + "empty asset identifier");
        }
        auto cap = csv::parse_optional_double(f[2], row, "cap");
        if (cap && !(*cap > 0.0)) {
            throw DataError(csv::at_row(row) + "non-positive cap " + std::string(f[2]));
        }
        auto ret = csv::parse_optional_double(f[3], row, "return");
        if (ret && !(*ret > -1.0)) {
            throw DataError(csv::at_row(row) + "return must exceed -1, got " + std::string(f[3]));
        }
        rows.push_back({d, std::string(f[1]), cap, ret, row});
    }

    std::set<std::string> asset_set;
    std::vector<Date> dates;
    for (const auto& r : rows) {
        asset_set.insert(r.asset);
        if (dates.empty() || dates.back() != r.date) {
            dates.push_back(r.date);
        }
    }
    MarketPanel panel = empty_panel({asset_set.begin(), asset_set.end()}, std::move(dates));
    Index t = -1;
    Date current;
    for (const auto& r : rows) {
        if (t < 0 || r.date != current) {
            ++t;
            current = r.date;
        }
        const Index i = *panel.asset_index(r.asset);
        if (panel.cap_valid(i, t) || panel.return_valid(i, t)) {
            throw DataError(csv::at_row(r.line) + "duplicate row for " + r.asset + " on " + r.date.str());
        }
        if (r.cap) {
            panel.caps(i, t) = *r.cap;
            panel.cap_valid(i, t) = true;
        }
        if (r.ret) {
            panel.returns(i, t) = *r.ret;
            panel.return_valid(i, t) = true;
        }
    }
    // Returns should match cap ratios unless shares changed; flag disagreements.
    for (const auto& r : rows) {
        const Index i = *panel.asset_index(r.asset);
        const Index tt = *panel.date_index(r.date);
        if (tt == 0 || !r.ret || !panel.cap_valid(i, tt) || !panel.cap_valid(i, tt - 1)) {
            continue;
        }
        const double implied = panel.caps(i, tt) / panel.caps(i, tt - 1) - 1.0;
        if (std::abs(implied - *r.ret) > 1e-9) {
            warnings.push_back({r.line, "return " + std::to_string(*r.ret) + " disagrees with cap ratio " +
                                            std::to_string(implied) + " for " + r.asset});
        }
    }
    panel.validate();
    return panel;
}

MarketPanel load_daily_panel(const std::filesystem::path& path) {
    std::vector<LoadWarning> ignored;
    return load_daily_panel(path, ignored);
}

void load_risk_free(const std::filesystem::path& path, MarketPanel& panel) {
    csv::Reader reader(path);
    reader.expect_header("date,rate");
    std::map<Date, double> rates;
    std::string line;
    while (reader.next(line)) {
        auto f = csv::split(line);
        if (f.size() != 2) {
            throw DataError(csv::at_row(reader.line()) + "expected 2 fields");
        }
        auto rate = csv::parse_optional_double(f[1], reader.line(), "rate");
        if (!rate || !(*rate > -1.0)) {
            throw DataError(csv::at_row(reader.line()) + "missing or invalid rate");
        }
        rates[Date::parse(f[0])] = *rate;
    }
    for (Index t = 0; t < panel.n_dates(); ++t) {
        auto it = rates.find(panel.dates[static_cast<std::size_t>(t)]);
        if (it == rates.end()) {
            throw DataError("risk-free file lacks " + panel.dates[static_cast<std::size_t>(t)].str());
        }
        panel.risk_free[t] = it->second;
    }
}

std::vector<IntradayPanel> load_intraday_panels(const std::filesystem::path& path,
                                                const MarketPanel* companion) {
    csv::Reader reader(path);
    reader.expect_header("date,minute,asset,cap");
    struct DayRows {
        Date day;
        std::map<long, std::map<std::string, double>> ticks;
    };
    std::vector<DayRows> days;
    std::string line;
    while (reader.next(line)) {
        const auto row = reader.line();
        auto f = csv::split(line);
        if (f.size() != 4) {
            throw DataError(csv::at_row(row) + "expected 4 fields, got " + std::to_string(f.size()));
        }
        const Date d = Date::parse(f[0]);
        if (!days.empty() && d < days.back().day) {
            throw DataError(csv::at_row(row) + "non-monotonic date " + d.str());
        }
        if (days.empty() || days.back().day != d) {
            days.push_back({d, {}});
        }
        const long minute = csv::parse_long(f[1], row, "minute");
        if (minute < 1) {
            throw DataError(csv::at_row(row) + "minute must be >= 1");
        }
        auto cap = csv::parse_optional_double(f[3], row, "cap");
        if (!cap || !(*cap > 0.0)) {
            throw DataError(csv::at_row(row) + "missing or non-positive cap");
        }
        if (!days.back().ticks[minute].emplace(std::string(f[2]), *cap).second) {
            throw DataError(csv::at_row(row) + "duplicate tick");
        }
    }

    std::vector<IntradayPanel> out;
    out.reserve(days.size());
    for (const auto& d : days) {
        IntradayPanel p;
        p.day = d.day;
        const auto& first = d.ticks.begin()->second;
        for (const auto& [asset, cap] : first) {
            p.assets.push_back(asset);
        }
        const auto N = static_cast<Index>(p.assets.size());
        const auto M = static_cast<Index>(d.ticks.size());
        p.caps.resize(N, M);
        Index m = 0;
        for (const auto& [minute, snapshot] : d.ticks) {
            if (minute != m + 1) {
                throw DataError("intraday " + d.day.str() + ": minutes must run 1.." + std::to_string(M) +
                                " without gaps");
            }
            if (static_cast<Index>(snapshot.size()) != N) {
                throw DataError("intraday " + d.day.str() + ": minute " + std::to_string(minute) +
                                " does not cover every asset");
            }
            Index i = 0;
            for (const auto& [asset, cap] : snapshot) {
                if (asset != p.assets[static_cast<std::size_t>(i)]) {
                    throw DataError("intraday " + d.day.str() + ": asset set changes within the day");
                }
                p.caps(i++, m) = cap;
            }
            p.minutes.push_back(static_cast<int>(minute));
            ++m;
        }
        if (companion) {
            auto t = companion->date_index(d.day);
            if (!t || *t == 0) {
                throw DataError("intraday " + d.day.str() + ": no prior close in the daily panel");
            }
            for (Index i = 0; i < N; ++i) {
                auto a = companion->asset_index(p.assets[static_cast<std::size_t>(i)]);
                if (!a || !companion->has_cap(*a, *t - 1)) {
                    throw DataError("intraday " + d.day.str() + ": " + p.assets[static_cast<std::size_t>(i)] +
                                    " has no prior close");
                }
                const double prior = companion->caps(*a, *t - 1);
                if (std::abs(p.caps(i, 0) - prior) > 1e-6 * std::abs(prior)) {
                    throw DataError("intraday " + d.day.str() + ": continuity error for " +
                                    p.assets[static_cast<std::size_t>(i)] + " (first tick " +
                                    std::to_string(p.caps(i, 0)) + " vs prior close " +
                                    std::to_string(prior) + ")");
                }
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

IntradayPanel load_intraday_panel(const std::filesystem::path& path, const MarketPanel* companion) {
    auto days = load_intraday_panels(path, companion);
    if (days.size() != 1) {
        throw DataError("'" + path.string() + "' holds " + std::to_string(days.size()) +
                        " days, expected exactly one");
    }
    return std::move(days.front());
}

void write_daily_csv(const MarketPanel& panel, const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,asset,cap,return\n";
    for (Index t = 0; t < panel.n_dates(); ++t) {
        const auto date = panel.dates[static_cast<std::size_t>(t)].str();
        for (Index i = 0; i < panel.n_assets(); ++i) {
            if (!panel.has_cap(i, t) && !panel.has_return(i, t)) {
                continue;
            }
            out << date << ',' << panel.assets[static_cast<std::size_t>(i)] << ',';
            if (panel.has_cap(i, t)) {
                out << panel.caps(i, t);
            }
            out << ',';
            if (panel.has_return(i, t)) {
                out << panel.returns(i, t);
            }
            out << '\n';
        }
    }
}

void write_risk_free_csv(const MarketPanel& panel, const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,rate\n";
    for (Index t = 0; t < panel.n_dates(); ++t) {
        out << panel.dates[static_cast<std::size_t>(t)].str() << ',' << panel.risk_free[t] << '\n';
    }
}

void write_intraday_csv(const std::vector<IntradayPanel>& days, const std::filesystem::path& path,
                        std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,minute,asset,cap\n";
    for (const auto& day : days) {
        const auto date = day.day.str();
        for (Index m = 0; m < day.n_minutes(); ++m) {
            for (Index i = 0; i < day.n_assets(); ++i) {
                out << date << ',' << day.minutes[static_cast<std::size_t>(m)] << ','
                    << day.assets[static_cast<std::size_t>(i)] << ',' << day.caps(i, m) << '\n';
            }
        }
    }
}

UniverseSelection select_universe(const MarketPanel& panel, Index as_of, Index n) {
    if (as_of < 0 || as_of >= panel.n_dates()) {
        throw DomainError("select_universe: date index out of range");
    }
    if (as_of + 1 >= panel.n_dates()) {
        throw DomainError("select_universe: " + panel.dates[static_cast<std::size_t>(as_of)].str() +
                          " is the last date; no next-day returns");
    }
    UniverseSelection sel;
    sel.as_of = panel.dates[static_cast<std::size_t>(as_of)];
    sel.as_of_index = as_of;
    const auto perm = compute_ranks(panel.caps.col(as_of));
    const Index top = std::min(n, perm.n_ranked());
    for (Index k = 0; k < top; ++k) {
        const Index i = perm.name_at[static_cast<std::size_t>(k)];
        if (panel.has_return(i, as_of + 1)) {
            sel.members.push_back(i);
        }
    }
    return sel;
}

}  // namespace rankarb
