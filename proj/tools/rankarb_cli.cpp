#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "rankarb/factor_model.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/nn_bridge.hpp"
#include "rankarb/pipeline.hpp"
#include "rankarb/residual_panel.hpp"

using namespace rankarb;

namespace {

std::filesystem::path out_file(const Config& c, const std::string& name) {
    return std::filesystem::path(c.out_dir) / name;
}

std::string preamble(const Config& c) { return "config_hash=" + c.hash(); }

void simulate(const Config& c) {
    AtlasConfig ac;
    ac.n_assets = c.sim_assets;
    ac.n_days = c.sim_days;
    ac.minutes_per_day = c.minutes_per_day;
    ac.rank_drifts = {c.sim_drift};
    ac.rank_vols = {c.sim_vol};
    ac.common_loading = c.sim_common_loading;
    ac.initial_log_spacing = c.sim_spacing;
    ac.seed = c.seed;
    ac.keep_intraday = c.sim_write_intraday;
    const auto market = generate_atlas_market(ac);
    const auto pre = preamble(c);
    write_daily_csv(market.daily, out_file(c, "daily.csv"), pre);
    write_risk_free_csv(market.daily, out_file(c, "risk_free.csv"), pre);
    if (c.sim_write_intraday) {
        write_intraday_csv(market.intraday, out_file(c, "intraday.csv"), pre);
    }
    std::cout << "simulated " << market.daily.n_assets() << " assets over " << market.daily.n_dates()
              << " days into " << c.out_dir << '\n';
}

ReturnSpace space_of(const MarketPanel& panel, const Config& c) {
    return c.space == "rank" ? rank_space(panel, c) : name_space(panel, c);
}

Index as_of_index(const MarketPanel& panel, const Config& c) {
    if (c.as_of.empty()) {
        return panel.n_dates() - 2;
    }
    auto t = panel.date_index(Date::parse(c.as_of));
    if (!t) {
        throw DataError("as_of " + c.as_of + " is not a panel date");
    }
    return *t;
}

void decompose(const Config& c) {
    const auto panel = load_market(c);
    const auto rs = space_of(panel, c);
    const Index t = as_of_index(panel, c);
    auto day = decompose_day(rs, c, t);
    if (!day) {
        throw DataError("decompose: no complete " + std::to_string(c.pca_window) + "-day window on " +
                        panel.dates[static_cast<std::size_t>(t)].str());
    }
    write_factor_model(day->model, out_file(c, "factor_model_" + c.space + ".json"));
    std::vector<FitRow> rows;
    for (std::size_t r = 0; r < day->members.size(); ++r) {
        rows.push_back({day->model.as_of, day->model.universe[r], day->fits[r]});
    }
    write_fit_table(rows, out_file(c, "fits_" + c.space + ".csv"), preamble(c));
    std::cout << "decomposed " << day->members.size() << " " << c.space << " series on " << day->model.as_of.str()
              << " with K=" << day->model.K << '\n';
}

UniverseLookup engine_universe(const ReturnSpace& rs, const Config& c) {
    return [&rs, &c](const Date& d, const std::string& space) -> std::optional<std::vector<std::string>> {
        if (space != rs.space) {
            return std::nullopt;
        }
        auto it = std::lower_bound(rs.dates.begin(), rs.dates.end(), d);
        if (it == rs.dates.end() || *it != d) {
            return std::nullopt;
        }
        auto day = decompose_day(rs, c, static_cast<Index>(it - rs.dates.begin()));
        if (!day) {
            return std::nullopt;
        }
        return day->model.universe;
    };
}

WeightStream load_stream(const ReturnSpace& rs, const Config& c) {
    if (c.weights.empty()) {
        throw ConfigError("no weight stream configured (set 'weights')");
    }
    auto stream = import_weight_stream(c.weights, engine_universe(rs, c));
    for (const auto& r : stream.rejected) {
        std::cerr << "weights line " << r.line << " rejected: " << r.reason << '\n';
    }
    return stream;
}

void report(const BacktestResult& res, const std::string& space) {
    std::cout << space << " backtest: terminal value " << res.pnl.value[res.pnl.size() - 1];
    if (res.overall && res.overall->sharpe) {
        std::cout << ", sharpe " << *res.overall->sharpe;
    }
    std::cout << ", flat days " << res.run.flat_days << '\n';
}

void backtest(const Config& c, const std::string& space) {
    const auto panel = load_market(c);
    RunOptions opt;
    opt.keep_fits = true;
    WeightStream stream;
    std::vector<IntradayPanel> intraday;
    if (space == "rank") {
        intraday = load_intraday(c, panel);
    }
    if (c.strategy == "nn") {
        const auto rs = space == "rank" ? rank_space(panel, c) : name_space(panel, c);
        stream = load_stream(rs, c);
        opt.nn = &stream;
    }
    const auto res = space == "rank" ? backtest_rank(panel, intraday, c, opt) : backtest_name(panel, c, opt);
    write_backtest(res, space, c);
    report(res, space);
}

void diagnose(const Config& c) {
    const auto panel = load_market(c);
    std::vector<IntradayPanel> intraday;
    if (!c.intraday.empty()) {
        intraday = load_intraday(c, panel);
    }
    const auto bundle = run_diagnostics(panel, intraday, c);
    write_diagnostics(bundle, c);
    std::cout << "diagnostics: " << bundle.spectra.size() << " spectra, " << bundle.tau.n_mean_reverting
              << " mean-reverting fits, " << bundle.map.size() << " strategy-map rows\n";
}

void run_sweep(const Config& c) {
    const auto panel = load_market(c);
    std::vector<IntradayPanel> intraday;
    if (!c.intraday.empty()) {
        intraday = load_intraday(c, panel);
    }
    const auto rows = sweep(panel, intraday, c);
    write_sweep(rows, c);
    std::cout << "sweep: " << rows.size() << " rows\n";
}

void export_train(const Config& c) {
    const auto panel = load_market(c);
    const auto rs = space_of(panel, c);
    RunOptions opt;
    opt.keep_trajectories = true;
    const auto run = run_strategy(rs, c, opt);
    const auto path = out_file(c, "training_" + c.space + ".jsonl");
    export_training_set(run.trajectories, path);
    std::cout << "exported " << run.trajectories.size() << " trajectories to " << path.string() << '\n';
}

void import_weights(const Config& c) {
    const auto panel = load_market(c);
    const auto rs = space_of(panel, c);
    const auto stream = load_stream(rs, c);
    std::ofstream out(out_file(c, "import_rejections.csv"));
    out << "# " << preamble(c) << "\nline,reason\n";
    for (const auto& r : stream.rejected) {
        out << r.line << ",\"" << r.reason << "\"\n";
    }
    std::cout << "imported " << stream.records.size() << " records, rejected " << stream.rejected.size() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-space statistical arbitrage backtester"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("-c,--config", config_path, "key=value config file");
    std::map<std::string, std::string> flags;
    for (const auto& key : Config::keys()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        app.add_option("--" + name, flags[key], "config key '" + key + "'");
    }
    const std::map<std::string, std::function<void(const Config&)>> commands{
        {"simulate", simulate},
        {"decompose", decompose},
        {"backtest-name", [](const Config& c) { backtest(c, "name"); }},
        {"backtest-rank", [](const Config& c) { backtest(c, "rank"); }},
        {"diagnose", diagnose},
        {"sweep", run_sweep},
        {"export-train", export_train},
        {"import-weights", import_weights},
    };
    for (const auto& [name, fn] : commands) {
        app.add_subcommand(name);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code(ErrorKind::config);
    }
    try {
        Config config;
        if (!config_path.empty()) {
            config.load_file(config_path);
        }
        for (const auto& key : Config::keys()) {
            std::string name = key;
            std::replace(name.begin(), name.end(), '_', '-');
            if (app.count("--" + name) > 0) {
                config.set(key, flags[key]);
            }
        }
        config.validate();
        const auto* sub = app.get_subcommands().front();
        commands.at(sub->get_name())(config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
