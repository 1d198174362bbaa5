#include "rankarb/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "csv.hpp"
#include "rankarb/factor_model.hpp"
#include "rankarb/rank_view.hpp"

namespace rankarb {

namespace {

struct Field {
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    if constexpr (std::is_same_v<T, std::string>) {
        return text;
    } else if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1" || text == "yes") {
            return true;
        }
        if (text == "false" || text == "0" || text == "no") {
            return false;
        }
        throw ConfigError("config: '" + key + "' expects a boolean, got '" + text + "'");
    } else {
        T v{};
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size()) {
            throw ConfigError("config: cannot parse '" + text + "' for '" + key + "'");
        }
        return v;
    }
}

template <typename T>
Field field(T Config::*member) {
    Field f;
    f.set = [member](Config& c, const std::string& text) { c.*member = parse_value<T>("", text); };
    f.get = [member](const Config& c) -> std::string {
        if constexpr (std::is_same_v<T, std::string>) {
            return c.*member;
        } else if constexpr (std::is_same_v<T, bool>) {
            return c.*member ? "true" : "false";
        } else if constexpr (std::is_floating_point_v<T>) {
            return format(c.*member);
        } else {
            return std::to_string(c.*member);
        }
    };
    return f;
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table{
        {"daily", field(&Config::daily)},
        {"intraday", field(&Config::intraday)},
        {"risk_free", field(&Config::risk_free)},
        {"weights", field(&Config::weights)},
        {"out_dir", field(&Config::out_dir)},
        {"strategy", field(&Config::strategy)},
        {"space", field(&Config::space)},
        {"as_of", field(&Config::as_of)},
        {"sim_assets", field(&Config::sim_assets)},
        {"sim_days", field(&Config::sim_days)},
        {"minutes_per_day", field(&Config::minutes_per_day)},
        {"sim_drift", field(&Config::sim_drift)},
        {"sim_vol", field(&Config::sim_vol)},
        {"sim_common_loading", field(&Config::sim_common_loading)},
        {"sim_spacing", field(&Config::sim_spacing)},
        {"sim_write_intraday", field(&Config::sim_write_intraday)},
        {"seed", field(&Config::seed)},
        {"n_universe", field(&Config::n_universe)},
        {"pca_window", field(&Config::pca_window)},
        {"beta_window", field(&Config::beta_window)},
        {"lookback", field(&Config::lookback)},
        {"k_name", field(&Config::k_name)},
        {"k_rank", field(&Config::k_rank)},
        {"open_threshold", field(&Config::open_threshold)},
        {"close_threshold", field(&Config::close_threshold)},
        {"tau_max_days", field(&Config::tau_max_days)},
        {"eta", field(&Config::eta)},
        {"leverage", field(&Config::leverage)},
        {"interval", field(&Config::interval)},
        {"excess_sharpe", field(&Config::excess_sharpe)},
        {"delta", field(&Config::delta)},
        {"pair_stride", field(&Config::pair_stride)},
        {"spectrum_stride", field(&Config::spectrum_stride)},
        {"density_width", field(&Config::density_width)},
        {"tau_bin_days", field(&Config::tau_bin_days)},
        {"sweep_eta", field(&Config::sweep_eta)},
        {"sweep_interval", field(&Config::sweep_interval)},
    };
    return table;
}

std::string preamble(const Config& config) { return "config_hash=" + config.hash(); }

std::filesystem::path out_path(const Config& config, const std::string& name) {
    return std::filesystem::path(config.out_dir) / name;
}

[[noreturn]] void rethrow_tagged(const Error& e, const std::string& stage) {
    throw Error(e.kind(), stage + ": " + e.what());
}

}  // namespace

std::vector<std::string> Config::keys() {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) {
        out.push_back(k);
    }
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = fields().find(key);
    if (it == fields().end()) {
        throw ConfigError("config: unknown key '" + key + "'");
    }
    try {
        it->second.set(*this, value);
    } catch (const ConfigError&) {
        throw ConfigError("config: cannot parse '" + value + "' for '" + key + "'");
    }
}

std::string Config::get(const std::string& key) const {
    auto it = fields().find(key);
    if (it == fields().end()) {
        throw ConfigError("config: unknown key '" + key + "'");
    }
    return it->second.get(*this);
}

void Config::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        auto t = csv::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected key=value");
        }
        set(std::string(csv::trim(t.substr(0, eq))), std::string(csv::trim(t.substr(eq + 1))));
    }
}

void Config::validate() const {
    if (strategy != "ou" && strategy != "nn") {
        throw ConfigError("config: strategy must be 'ou' or 'nn'");
    }
    if (space != "name" && space != "rank") {
        throw ConfigError("config: space must be 'name' or 'rank'");
    }
    if (lookback < 3 || beta_window < 2 || pca_window < lookback || pca_window < beta_window) {
        throw ConfigError("config: need 3 <= lookback <= pca_window and beta_window <= pca_window");
    }
    if (k_name < 0 || k_rank < 0 || k_name >= beta_window || k_rank >= beta_window) {
        throw ConfigError("config: factor counts must be non-negative and below beta_window");
    }
    if (n_universe < 2) {
        throw ConfigError("config: n_universe must be at least 2");
    }
    if (!(eta >= 0.0) || !(leverage > 0.0) || interval < 1) {
        throw ConfigError("config: need eta >= 0, leverage > 0, interval >= 1");
    }
    if (!(open_threshold > 0.0) || !(close_threshold >= 0.0) || close_threshold > open_threshold) {
        throw ConfigError("config: need 0 <= close_threshold <= open_threshold");
    }
    if (!(delta > 0.0) || pair_stride < 1 || spectrum_stride < 1 || !(density_width > 0.0) ||
        !(tau_bin_days > 0.0)) {
        throw ConfigError("config: diagnostic grid settings must be positive");
    }
}

std::string Config::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [key, f] : fields()) {
        if (key == "out_dir") {
            continue;
        }
        const std::string entry = key + "=" + f.get(*this) + "\n";
        for (unsigned char c : entry) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    for (auto f : csv::split(text)) {
        if (f.empty()) {
            continue;
        }
        out.push_back(parse_value<double>(key, std::string(f)));
    }
    if (out.empty()) {
        throw ConfigError("config: '" + key + "' lists no values");
    }
    return out;
}

ReturnSpace name_space(const MarketPanel& panel, const Config& config) {
    ReturnSpace rs;
    rs.space = "name";
    rs.ids = panel.assets;
    rs.dates = panel.dates;
    rs.returns = panel.returns;
    rs.valid = panel.return_valid;
    rs.risk_free = panel.risk_free;
    rs.K = config.k_name;
    const Index n = config.n_universe;
    rs.universe = [&panel, n](Index t) { return select_universe(panel, t, n).members; };
    return rs;
}

ReturnSpace rank_space(const MarketPanel& panel, const Config& config) {
    Index live = panel.n_assets();
    for (Index t = 0; t < panel.n_dates(); ++t) {
        live = std::min<Index>(live, panel.cap_valid.col(t).count());
    }
    const Index n = std::min(config.n_universe, live);
    if (n < 2) {
        throw DataError("rank space: fewer than two assets live on every date");
    }
    auto ranked = rank_return_panel(panel, n);
    ReturnSpace rs;
    rs.space = "rank";
    for (Index k = 0; k < n; ++k) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "rank%03ld", static_cast<long>(k + 1));
        rs.ids.emplace_back(buf);
    }
    rs.dates = panel.dates;
    rs.returns = std::move(ranked.returns);
    rs.valid = std::move(ranked.valid);
    rs.risk_free = panel.risk_free;
    rs.K = config.k_rank;
    auto valid = rs.valid;
    rs.universe = [valid, n](Index t) {
        std::vector<Index> members;
        if (t + 1 < valid.cols()) {
            for (Index k = 0; k < n; ++k) {
                if (valid(k, t + 1)) {
                    members.push_back(k);
                }
            }
        }
        return members;
    };
    return rs;
}

std::optional<DayModel> decompose_day(const ReturnSpace& rs, const Config& config, Index t) {
    const Index W = config.pca_window;
    if (t + 1 < W + 1 || t >= static_cast<Index>(rs.dates.size())) {
        return std::nullopt;
    }
    const Index first = t - W + 1;
    DayModel day;
    day.t = t;
    for (Index i : rs.universe(t)) {
        if (rs.valid.row(i).segment(first, W).all()) {
            day.members.push_back(i);
        }
    }
    const auto n = static_cast<Index>(day.members.size());
    if (n < 2 || n <= rs.K) {
        return std::nullopt;
    }
    MatrixXd window(n, W);
    std::vector<std::string> names;
    for (Index r = 0; r < n; ++r) {
        const Index i = day.members[static_cast<std::size_t>(r)];
        window.row(r) = rs.returns.row(i).segment(first, W) - rs.risk_free.segment(first, W).transpose();
        names.push_back(rs.ids[static_cast<std::size_t>(i)]);
    }
    const std::string stage = "decompose " + rs.space + "@" + rs.dates[static_cast<std::size_t>(t)].str();
    try {
        day.model = fit_factor_model(window, rs.K, config.beta_window, names, rs.dates[static_cast<std::size_t>(t)]);
    } catch (const Error& e) {
        rethrow_tagged(e, stage);
    }
    day.eps = day.model.projector * window.rightCols(config.lookback);
    const MatrixXd x = cumulative_sum(day.eps);
    day.fits.resize(static_cast<std::size_t>(n));
    day.signals.resize(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) {
        const auto e = day.eps.row(r).array();
        const double sd = std::sqrt((e - e.mean()).square().sum() / static_cast<double>(config.lookback - 1));
        OUFit& fit = day.fits[static_cast<std::size_t>(r)];
        fit.mean_reverting = false;
        if (!(sd > 1e-12)) {
            continue;
        }
        try {
            fit = fit_ou(x.row(r).transpose());
        } catch (const DegeneracyError&) {
            continue;
        }
        day.signals[static_cast<std::size_t>(r)] = signal(fit, x(r, config.lookback - 1));
    }
    return day;
}

StrategyRun run_strategy(const ReturnSpace& rs, const Config& config, const RunOptions& options) {
    const auto R = static_cast<Index>(rs.ids.size());
    const auto T = static_cast<Index>(rs.dates.size());
    StrategyRun run;
    run.weights = MatrixXd::Zero(R, T);
    run.w_eps = MatrixXd::Zero(R, T);
    std::vector<int> pos(static_cast<std::size_t>(R), 0);
    std::vector<std::optional<Date>> opened(static_cast<std::size_t>(R));

    std::map<Date, const WeightRecord*> nn;
    if (options.nn) {
        for (const auto& rec : options.nn->records) {
            if (rec.space == rs.space) {
                nn[rec.date] = &rec;
            }
        }
    }
    const ThresholdRule rule = config.rule();
    for (Index t = config.pca_window; t + 1 < T; ++t) {
        const Date& date = rs.dates[static_cast<std::size_t>(t)];
        auto day = decompose_day(rs, config, t);
        if (!day) {
            std::fill(pos.begin(), pos.end(), 0);
            std::fill(opened.begin(), opened.end(), std::nullopt);
            ++run.flat_days;
            continue;
        }
        const auto n = static_cast<Index>(day->members.size());
        std::vector<std::string> names;
        for (Index i : day->members) {
            names.push_back(rs.ids[static_cast<std::size_t>(i)]);
        }

        VectorXd w_eps = VectorXd::Zero(n);
        EquityWeights eq;
        if (options.nn) {
            auto it = nn.find(date);
            if (it == nn.end() || it->second->assets != names) {
                run.warnings.push_back(date.str() + ": no matching " + rs.space + " weight record; flat day");
            } else {
                w_eps = it->second->w_eps;
            }
            eq = nn_equity_weights(day->model.projector, w_eps);
        } else {
            PositionState prev = PositionState::flat(n);
            for (Index r = 0; r < n; ++r) {
                const auto i = static_cast<std::size_t>(day->members[static_cast<std::size_t>(r)]);
                prev.w_eps[static_cast<std::size_t>(r)] = pos[i];
                prev.opened_at[static_cast<std::size_t>(r)] = opened[i];
            }
            const PositionState next = update_positions(prev, day->signals, day->fits, date, rule);
            std::fill(pos.begin(), pos.end(), 0);
            std::fill(opened.begin(), opened.end(), std::nullopt);
            for (Index r = 0; r < n; ++r) {
                const auto i = static_cast<std::size_t>(day->members[static_cast<std::size_t>(r)]);
                pos[i] = next.w_eps[static_cast<std::size_t>(r)];
                opened[i] = next.opened_at[static_cast<std::size_t>(r)];
                w_eps[r] = pos[i];
            }
            eq = strategy_weights(day->model.projector, next);
            if (options.keep_fits) {
                auto rows = strategy_map(date, names, day->fits, day->signals, w_eps);
                run.map.insert(run.map.end(), rows.begin(), rows.end());
            }
        }
        if (eq.flat) {
            ++run.flat_days;
        }
        for (Index r = 0; r < n; ++r) {
            const Index i = day->members[static_cast<std::size_t>(r)];
            run.weights(i, t) = eq.w[r];
            run.w_eps(i, t) = w_eps[r];
        }
        if (options.keep_fits) {
            for (Index r = 0; r < n; ++r) {
                if (day->fits[static_cast<std::size_t>(r)].mean_reverting ||
                    day->signals[static_cast<std::size_t>(r)]) {
                    run.fits.push_back({date, names[static_cast<std::size_t>(r)], day->fits[static_cast<std::size_t>(r)]});
                }
            }
        }
        if (options.keep_trajectories || options.keep_normalized) {
            auto traj = cumulative_residuals(day->eps, date, names, rs.space);
            if (options.keep_normalized) {
                auto norm = normalize_cumulative(traj, day->eps);
                run.normalized.push_back(std::move(norm.values));
            }
            if (options.keep_trajectories) {
                VectorXd next(n);
                for (Index r = 0; r < n; ++r) {
                    next[r] = rs.returns(day->members[static_cast<std::size_t>(r)], t + 1) - rs.risk_free[t + 1];
                }
                traj.r_next = day->model.projector * next;
                run.trajectories.push_back(std::move(traj));
            }
        }
    }
    return run;
}

BacktestResult backtest_name(const MarketPanel& panel, const Config& config, const RunOptions& options) {
    BacktestResult res;
    res.run = run_strategy(name_space(panel, config), config, options);
    try {
        res.pnl = pnl_name(res.run.weights, panel, {config.eta, config.leverage});
    } catch (const Error& e) {
        rethrow_tagged(e, "pnl name");
    }
    res.metrics = annual_metrics(res.pnl, panel.risk_free, config.excess_sharpe);
    res.overall = overall_metrics(res.pnl, panel.risk_free, config.excess_sharpe);
    return res;
}

BacktestResult backtest_rank(const MarketPanel& panel, std::span<const IntradayPanel> intraday, const Config& config,
                             const RunOptions& options) {
    BacktestResult res;
    res.run = run_strategy(rank_space(panel, config), config, options);
    try {
        auto rank = pnl_rank(res.run.weights, panel, intraday, config.interval, {config.eta, config.leverage});
        res.pnl = std::move(rank.series);
        res.ledgers = std::move(rank.ledgers);
        res.days = std::move(rank.days);
    } catch (const Error& e) {
        rethrow_tagged(e, "pnl rank");
    }
    res.metrics = annual_metrics(res.pnl, panel.risk_free, config.excess_sharpe);
    res.overall = overall_metrics(res.pnl, panel.risk_free, config.excess_sharpe);
    return res;
}

MarketPanel load_market(const Config& config) {
    if (config.daily.empty()) {
        throw ConfigError("no daily panel configured (set 'daily')");
    }
    try {
        MarketPanel panel = load_daily_panel(config.daily);
        if (!config.risk_free.empty()) {
            load_risk_free(config.risk_free, panel);
        }
        return panel;
    } catch (const Error& e) {
        rethrow_tagged(e, "load");
    }
}

std::vector<IntradayPanel> load_intraday(const Config& config, const MarketPanel& panel) {
    if (config.intraday.empty()) {
        throw ConfigError("no intraday panel configured (set 'intraday')");
    }
    try {
        return load_intraday_panels(config.intraday, &panel);
    } catch (const Error& e) {
        rethrow_tagged(e, "load intraday");
    }
}

void write_backtest(const BacktestResult& result, const std::string& space, const Config& config) {
    const auto pre = preamble(config);
    write_pnl_csv(result.pnl, out_path(config, space + "_pnl.csv"), pre);
    write_metrics_csv(result.metrics, space + "_" + config.strategy, out_path(config, space + "_metrics.csv"), pre);
    if (!result.run.fits.empty()) {
        write_fit_table(result.run.fits, out_path(config, space + "_fits.csv"), pre);
    }
    if (space == "rank") {
        write_ledger_csv(result.ledgers, out_path(config, "rank_ledger.csv"), pre);
        write_day_summary_csv(result.days, out_path(config, "rank_days.csv"), pre);
    }
}

DiagnosticsBundle run_diagnostics(const MarketPanel& panel, std::span<const IntradayPanel> intraday,
                                  const Config& config) {
    DiagnosticsBundle bundle;
    const ReturnSpace rs = name_space(panel, config);
    const Index W = config.beta_window;
    for (Index t = W; t + 1 < panel.n_dates(); t += config.spectrum_stride) {
        std::vector<Index> members;
        for (Index i : rs.universe(t)) {
            if (rs.valid.row(i).segment(t - W + 1, W).all()) {
                members.push_back(i);
            }
        }
        if (members.size() < 2) {
            continue;
        }
        MatrixXd window(static_cast<Index>(members.size()), W);
        for (std::size_t r = 0; r < members.size(); ++r) {
            window.row(static_cast<Index>(r)) = rs.returns.row(members[r]).segment(t - W + 1, W);
        }
        try {
            bundle.spectra.push_back(eigen_spectrum(window, panel.dates[static_cast<std::size_t>(t)]));
        } catch (const DomainError&) {
        }
    }
    RunOptions opt;
    opt.keep_fits = true;
    opt.keep_normalized = true;
    auto run = run_strategy(rs, config, opt);
    std::vector<OUFit> fits;
    for (const auto& row : run.fits) {
        fits.push_back(row.fit);
    }
    bundle.tau = tau_distribution(fits, config.tau_bin_days);
    DensityGrid grid;
    grid.width = config.density_width;
    bundle.density = xhat_density_diff(pool_by_alpha(run.normalized), grid);
    bundle.map = std::move(run.map);
    if (!intraday.empty()) {
        bundle.switching = switching_time_distribution(intraday, config.pair_stride, config.delta);
    }
    return bundle;
}

void write_diagnostics(const DiagnosticsBundle& bundle, const Config& config) {
    const auto pre = preamble(config);
    write_spectrum_csv(bundle.spectra, out_path(config, "spectrum.csv"), pre);
    write_histogram_csv(bundle.tau.histogram, "tau_days", out_path(config, "tau_hist.csv"),
                        pre + " non_mean_reverting=" + std::to_string(bundle.tau.n_non_mean_reverting) +
                            " fraction_above_30=" + format(bundle.tau.fraction_above_30));
    write_density_csv(bundle.density, out_path(config, "xhat_density_diff.csv"), pre);
    write_strategy_map_csv(bundle.map, out_path(config, "strategy_map.csv"), pre);
    if (bundle.switching) {
        const auto& s = *bundle.switching;
        write_histogram_csv(s.histogram, "gap_minutes", out_path(config, "switching_hist.csv"),
                            pre + (s.empty ? " empty=true" : " rate=" + format(s.rate) + " r2=" + format(s.log_linear_r2)));
    }
}

std::vector<SweepRow> sweep(const MarketPanel& panel, std::span<const IntradayPanel> intraday, const Config& config) {
    const auto etas = parse_number_list(config.sweep_eta, "sweep_eta");
    const auto intervals = parse_number_list(config.sweep_interval, "sweep_interval");
    std::vector<SweepRow> rows;
    const auto name_run = run_strategy(name_space(panel, config), config);
    for (double eta : etas) {
        auto pnl = pnl_name(name_run.weights, panel, {eta, config.leverage});
        rows.push_back({"name", eta, 0, pnl.value[pnl.size() - 1], overall_metrics(pnl, panel.risk_free, config.excess_sharpe)});
    }
    if (!intraday.empty()) {
        const auto rank_run = run_strategy(rank_space(panel, config), config);
        for (double eta : etas) {
            for (double iv : intervals) {
                const auto interval = static_cast<Index>(std::llround(iv));
                if (interval < 1) {
                    throw ConfigError("sweep_interval entries must be positive");
                }
                auto pnl = pnl_rank(rank_run.weights, panel, intraday, interval, {eta, config.leverage}).series;
                rows.push_back({"rank", eta, interval, pnl.value[pnl.size() - 1],
                                overall_metrics(pnl, panel.risk_free, config.excess_sharpe)});
            }
        }
    }
    return rows;
}

void write_sweep(std::span<const SweepRow> rows, const Config& config) {
    auto out = csv::open_out(out_path(config, "sweep.csv"));
    csv::write_preamble(out, preamble(config));
    out << "space,eta,interval,terminal_value,return,vol,sharpe\n";
    for (const auto& r : rows) {
        out << r.space << ',' << r.eta << ',' << r.interval << ',' << r.terminal_value << ',';
        if (r.overall) {
            out << r.overall->annual_return << ',' << r.overall->annual_vol << ',';
            if (r.overall->sharpe) {
                out << *r.overall->sharpe;
            } else {
                out << "NA";
            }
        } else {
            out << "NA,NA,NA";
        }
        out << '\n';
    }
}

}  // namespace rankarb
