// One line per acceptance criterion. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "rankarb/diagnostics.hpp"
#include "rankarb/factor_model.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/ou_strategy.hpp"
#include "rankarb/pipeline.hpp"
#include "rankarb/pnl_metrics.hpp"
#include "rankarb/rebalance_engine.hpp"
#include "rankarb/residual_panel.hpp"

using namespace rankarb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

MatrixXd normal_matrix(Index rows, Index cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = z(rng);
        }
    }
    return m;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome projector_identity() {
    constexpr double tol = 1e-8;
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<Index> n_assets(2, 100);
    double worst_beta = 0.0;
    double worst_w = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index N = n_assets(rng);
        const Index K = std::uniform_int_distribution<Index>(1, std::min<Index>(N - 1, 10))(rng);
        const MatrixXd R = normal_matrix(N, K, rng, 1.0) * normal_matrix(K, 60, rng, 0.01) +
                           normal_matrix(N, 60, rng, 0.01);
        const auto model = fit_factor_model(R, K, 60);
        worst_beta = std::max(worst_beta, (model.projector * model.loadings).cwiseAbs().maxCoeff());
        const VectorXd w = normal_matrix(N, 1, rng);
        const VectorXd eq = model.projector.transpose() * w;
        worst_w = std::max(worst_w, (eq.transpose() * model.loadings).cwiseAbs().maxCoeff());
    }
    return {worst_beta <= tol && worst_w <= tol,
            fmt("max|Phi beta|=%.2e max|(Phi^T w)^T beta|=%.2e tol=1e-8", worst_beta, worst_w)};
}

Outcome ou_recovery() {
    constexpr double tol = 0.05;
    constexpr Index L = 10000;
    constexpr double m = 1.0;
    constexpr double sigma = 0.1;
    bool pass = true;
    std::string detail;
    for (double kappa : {10.0, 26.6, 100.0}) {
        const double b = std::exp(-kappa / 252.0);
        std::vector<double> ek, em, es;
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> z(0.0, 1.0);
            VectorXd x(L);
            x[0] = m + sigma * z(rng);
            const double shock = sigma * std::sqrt(1.0 - b * b);
            for (Index k = 1; k < L; ++k) {
                x[k] = m + b * (x[k - 1] - m) + shock * z(rng);
            }
            const auto fit = fit_ou(x);
            const double k_hat = fit.mean_reverting ? fit.kappa : 0.0;
            ek.push_back(std::abs(k_hat - kappa) / kappa);
            em.push_back(fit.mean_reverting ? std::abs(fit.m - m) / m : 1.0);
            es.push_back(fit.mean_reverting ? std::abs(fit.sigma - sigma) / sigma : 1.0);
        }
        const double mk = median(ek), mm = median(em), ms = median(es);
        pass = pass && mk < tol && mm < tol && ms < tol;
        detail += fmt("kappa=%.1f: ", kappa) + fmt("err(kappa)=%.4f err(m)=%.4f err(sigma)=%.4f; ", mk, mm, ms);
    }
    return {pass, detail + "tol=0.05"};
}

int documented_rule(int prev, double s, double tau) {
    if (tau >= 30.0) {
        return 0;
    }
    if (prev == 1) {
        return s < -0.5 ? 1 : 0;
    }
    if (prev == -1) {
        return s > 0.5 ? -1 : 0;
    }
    return s > 1.25 ? -1 : (s < -1.25 ? 1 : 0);
}

Outcome state_machine() {
    const std::vector<double> grid{-2, -1, -0.6, -0.4, 0, 0.4, 0.6, 1, 2};
    int cases = 0;
    int mismatches = 0;
    for (double s : grid) {
        for (int prev : {-1, 0, 1}) {
            for (double tau : {10.0, 40.0}) {
                PositionState st = PositionState::flat(1);
                st.w_eps[0] = prev;
                OUFit fit;
                fit.mean_reverting = true;
                fit.tau_days = tau;
                const std::vector<std::optional<double>> sig{s};
                const std::vector<OUFit> fits{fit};
                const auto next = update_positions(st, sig, fits);
                ++cases;
                mismatches += next.w_eps[0] != documented_rule(prev, s, tau);
            }
        }
    }
    return {mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome ledger_oracle() {
    constexpr double tol = 1e-12;
    const double eta = 2e-4;
    auto book = open_book(VectorXd{{1.0, 0.6}}, VectorXd{{8.0, 4.0}});
    const VectorXd caps{{6.0, 10.0}};
    evolve_rank_weights(book, caps);
    evolve_name_weights(book, caps);
    const VectorXd before = book.name_weights;
    const auto cost = rebalance_step(book, caps, compute_ranks(caps), eta);
    const double trades = (book.name_weights - before).lpNorm<1>();
    const double e1 = std::abs(cost.latency + 0.10);
    const double e2 = std::abs(trades - 0.40);
    const double e3 = std::abs(cost.spread - 0.40 * eta);

    IntradayPanel day;
    day.day = Date(2020, 3, 2);
    day.assets = {"X", "Y"};
    day.caps = MatrixXd{{8, 8, 8, 8, 6, 6, 6, 6}, {4, 4, 4, 4, 10, 10, 10, 10}};
    day.minutes = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto res = simulate_day(VectorXd{{1.0, 0.6}}, day, 2, eta);
    // points at ticks 2, 4, 6, 7; the swap happens at tick 4
    const auto& p = res.ledger.points;
    bool timeline = p.size() == 4;
    if (timeline) {
        timeline = p[0].latency == 0.0 && p[0].spread == 0.0 && std::abs(p[1].latency + 0.10) <= tol &&
                   std::abs(p[1].spread - 0.40 * eta) <= tol && std::abs(p[2].latency) <= tol &&
                   p[2].spread <= tol && std::abs(p[3].latency) <= tol && p[3].spread <= tol &&
                   std::abs(res.ledger.divergence.back()) <= tol;
    }
    return {e1 <= tol && e2 <= tol && e3 <= tol && timeline,
            fmt("|latency+0.10|=%.1e |trades-0.40|=%.1e |spread-0.40eta|=%.1e", e1, e2, e3) +
                (timeline ? " timeline ok" : " timeline mismatch")};
}

Outcome cost_tradeoff() {
    AtlasConfig c;
    c.n_assets = 2;
    c.n_days = 21;
    c.minutes_per_day = 391;
    c.initial_log_spacing = 0.0;
    c.rank_vols = {0.005};
    c.seed = 2024;
    const auto m = generate_atlas_market(c);
    std::vector<double> spread;
    std::vector<double> divergence;
    for (Index interval : {Index(5), Index(30), Index(195)}) {
        double s = 0.0;
        double d = 0.0;
        for (const auto& day : m.intraday) {
            const auto res = simulate_day(VectorXd{{0.5, -0.5}}, day, interval, 2e-4);
            s += res.ledger.total_spread();
            d = std::max(d, res.ledger.max_divergence());
        }
        spread.push_back(s);
        divergence.push_back(d);
    }
    const bool pass = spread[0] >= spread[1] && spread[1] >= spread[2] && divergence[0] <= divergence[1] &&
                      divergence[1] <= divergence[2];
    return {pass, fmt("spread(5,30,195)=%.3e,%.3e,%.3e", spread[0], spread[1], spread[2]) +
                      fmt(" maxdiv=%.3e,%.3e,%.3e", divergence[0], divergence[1], divergence[2])};
}

Outcome pnl_coincidence() {
    constexpr double tol = 1e-10;
    AtlasConfig a;
    a.n_assets = 10;
    a.n_days = 160;
    a.minutes_per_day = 30;
    a.initial_log_spacing = 0.5;
    a.rank_vols = {0.002};
    a.common_loading = 0.5;
    a.seed = 77;
    const auto m = generate_atlas_market(a);
    Config cfg;
    cfg.pca_window = 60;
    cfg.beta_window = 30;
    cfg.lookback = 30;
    cfg.k_rank = 1;
    cfg.n_universe = 10;
    cfg.eta = 0.0;
    cfg.interval = 5;
    const auto rank = backtest_rank(m.daily, m.intraday, cfg);
    MatrixXd w_name = MatrixXd::Zero(m.daily.n_assets(), m.daily.n_dates());
    for (Index t = 0; t < m.daily.n_dates(); ++t) {
        const auto perm = compute_ranks(m.daily.caps.col(t));
        for (Index k = 0; k < rank.run.weights.rows(); ++k) {
            w_name(perm.name_at[static_cast<std::size_t>(k)], t) = rank.run.weights(k, t);
        }
    }
    const auto name = pnl_name(w_name, m.daily, {0.0, 1.0});
    double switches = 0.0;
    for (const auto& d : rank.days) {
        switches += std::abs(d.total_latency);
    }
    const double err = (name.value - rank.pnl.value).cwiseAbs().maxCoeff();
    const bool traded = !rank.run.weights.isZero(0.0);
    return {err <= tol && traded, fmt("max|V_rank-V_name|=%.2e tol=1e-10 latency=%.1e", err, switches) +
                                      (traded ? "" : " (no positions)")};
}

Outcome spectrum_sanity() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        worst = std::max(worst, eigen_spectrum(normal_matrix(500, 60, rng)).fraction_outside);
    }
    return {worst <= 0.05, fmt("max fraction outside (1+-sqrt(0.12))^2 over 20 seeds=%.4f limit=0.05", worst)};
}

Outcome xhat_calibration() {
    constexpr Index n = 100000;
    constexpr Index L = 60;
    std::mt19937_64 rng(5);
    const MatrixXd eps = normal_matrix(n, L, rng, 0.01);
    const auto norm = normalize_cumulative(cumulative_residuals(eps), eps);
    const std::vector<VectorXd> pools{norm.values.col(L - 1)};
    const auto d = xhat_density_diff(pools, DensityGrid{});
    return {d.max_abs() < 0.01, fmt("n=%.0f max|pdf-normal|=%.4f limit=0.01", static_cast<double>(n), d.max_abs())};
}

double strategy_sharpe(double tau, std::uint64_t seed) {
    FactorOUConfig f;
    f.n_assets = 30;
    f.n_days = 600;
    f.tau_days = tau;
    f.seed = seed;
    const auto panel = generate_factor_ou_panel(f);
    Config cfg;
    cfg.k_name = 1;
    cfg.n_universe = 30;
    cfg.eta = 0.0;
    const auto res = backtest_name(panel, cfg);
    return res.overall && res.overall->sharpe ? *res.overall->sharpe : 0.0;
}

Outcome mean_reversion_advantage() {
    std::vector<double> diff;
    double fast = 0.0;
    double slow = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double a = strategy_sharpe(2.5, seed);
        const double b = strategy_sharpe(6.0, seed + 100);
        fast += a / 10.0;
        slow += b / 10.0;
        diff.push_back(a - b);
    }
    double mean = 0.0;
    for (double d : diff) {
        mean += d / 10.0;
    }
    double ss = 0.0;
    for (double d : diff) {
        ss += (d - mean) * (d - mean);
    }
    const double se = std::sqrt(ss / 9.0 / 10.0);
    const double t = se > 0.0 ? mean / se : 0.0;
    const boost::math::students_t dist(9.0);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {mean > 0.0 && p < 0.05,
            fmt("mean sharpe tau2.5=%.3f tau6=%.3f", fast, slow) + fmt(" paired t=%.2f p=%.2e (two-sided)", t, p)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"projector_identity", 10.0, projector_identity},
        {"ou_estimator_recovery", 30.0, ou_recovery},
        {"state_machine_conformance", 1.0, state_machine},
        {"rebalance_ledger_oracle", 1.0, ledger_oracle},
        {"cost_tradeoff", 30.0, cost_tradeoff},
        {"pnl_coincidence", 30.0, pnl_coincidence},
        {"spectrum_sanity", 60.0, spectrum_sanity},
        {"normalized_residual_calibration", 30.0, xhat_calibration},
        {"mean_reversion_advantage", 300.0, mean_reversion_advantage},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %s: %s [%.2fs, limit %.0fs]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                    c.limit_s);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
