#include <doctest.h>

#include <numbers>
#include <random>

#include "rankarb/diagnostics.hpp"
#include "rankarb/rank_view.hpp"
#include "rankarb/residual_panel.hpp"
#include "test_util.hpp"

using namespace rankarb;

namespace {

VectorXd ou_levels(double b, double sd, Index L, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, sd);
    VectorXd x(L);
    x[0] = z(rng) / std::sqrt(1.0 - b * b);
    for (Index k = 1; k < L; ++k) {
        x[k] = b * x[k - 1] + z(rng);
    }
    return x;
}

}  // namespace

TEST_CASE("perfectly correlated panel has one eigenvalue") {
    std::mt19937_64 rng(51);
    const MatrixXd f = random_normal(1, 60, rng);
    const VectorXd scale{{1.0, 2.0, 0.5, 3.0, 1.5}};
    const auto rep = eigen_spectrum(scale * f);
    CHECK(rep.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(rep.eigenvalues.tail(4).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("spectrum trace, ordering and edges") {
    std::mt19937_64 rng(52);
    MatrixXd R = random_normal(30, 60, rng);
    R.row(7).setConstant(0.2);
    const auto rep = eigen_spectrum(R);
    CHECK(rep.dropped == std::vector<Index>{7});
    CHECK(rep.eigenvalues.size() == 29);
    CHECK(std::abs(rep.eigenvalues.sum() - 29.0) <= 1e-6 * 29.0);
    for (Index k = 0; k + 1 < rep.eigenvalues.size(); ++k) {
        CHECK(rep.eigenvalues[k] >= rep.eigenvalues[k + 1]);
    }
    CHECK(rep.mp_lower >= 0.0);
    CHECK(rep.mp_lower < rep.mp_upper);
    CHECK_THROWS_AS(eigen_spectrum(MatrixXd(0, 5)), DomainError);
    CHECK_THROWS_AS(eigen_spectrum(MatrixXd::Ones(3, 1)), DomainError);
}

TEST_CASE("iid panels stay near the bulk edge") {
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto rep = eigen_spectrum(random_normal(500, 60, rng));
        CHECK(rep.q == doctest::Approx(0.12));
        CHECK(rep.mp_upper == doctest::Approx(std::pow(1.0 + std::sqrt(0.12), 2)));
        within += rep.scaled_bulk[0] <= 1.25 * rep.mp_upper;
    }
    CHECK(within >= 19);
}

TEST_CASE("identical tau fits fill a single bin") {
    OUFit f;
    f.mean_reverting = true;
    f.tau_days = 5.0;
    const std::vector<OUFit> fits(20, f);
    const auto d = tau_distribution(fits);
    CHECK(d.histogram.counts[5] == 20);
    Index total = 0;
    for (auto c : d.histogram.counts) {
        total += c;
    }
    CHECK(total == 20);
    CHECK(d.fraction_above_30 == 0.0);
    CHECK(*d.mode_days == 5.5);
}

TEST_CASE("short mean-reversion pools peak between two and three days") {
    std::mt19937_64 rng(53);
    const double b = std::exp(-1.0 / 2.5);
    std::vector<OUFit> fits;
    for (int k = 0; k < 500; ++k) {
        fits.push_back(fit_ou(ou_levels(b, 0.01, 252, rng)));
    }
    const auto d = tau_distribution(fits);
    REQUIRE(d.mode_days.has_value());
    CHECK(*d.mode_days >= 2.0);
    CHECK(*d.mode_days <= 3.0);
}

TEST_CASE("random-walk pools are mostly untradeable") {
    std::mt19937_64 rng(54);
    std::normal_distribution<double> z(0.0, 0.01);
    std::vector<OUFit> fits;
    for (int k = 0; k < 500; ++k) {
        VectorXd x(252);
        x[0] = 0.0;
        for (Index a = 1; a < 252; ++a) {
            x[a] = x[a - 1] + z(rng);
        }
        fits.push_back(fit_ou(x));
    }
    const auto d = tau_distribution(fits);
    const double above = d.fraction_above_30 * static_cast<double>(d.n_mean_reverting);
    CHECK(static_cast<double>(d.n_non_mean_reverting) + above > 250.0);
    CHECK(d.fraction_above_30 > 0.5);
}

TEST_CASE("degenerate normalized values spike at zero") {
    const std::vector<VectorXd> pools{VectorXd::Zero(500)};
    const auto d = xhat_density_diff(pools);
    const Index zero_bin = 40;
    CHECK(d.centers[zero_bin] == doctest::Approx(0.05));
    CHECK(d.diff(0, zero_bin) > 5.0);
    for (Index b = 0; b < d.diff.cols(); ++b) {
        if (b != zero_bin) {
            CHECK(d.diff(0, b) <= 0.0);
        }
    }
    CHECK(d.warnings.empty());
    CHECK(xhat_density_diff(std::vector<VectorXd>{VectorXd::Zero(10)}).warnings.size() == 1);
}

TEST_CASE("empirical densities integrate to one") {
    std::mt19937_64 rng(55);
    const std::vector<VectorXd> pools{random_normal(5000, 1, rng), random_normal(300, 1, rng, 2.0)};
    const DensityGrid grid;
    const auto d = xhat_density_diff(pools, grid);
    for (Index a = 0; a < 2; ++a) {
        double integral = 0.0;
        for (Index b = 0; b < d.diff.cols(); ++b) {
            const double c = d.centers[b];
            integral += (d.diff(a, b) + std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi)) * grid.width;
        }
        CHECK(std::abs(integral - 1.0) <= 1e-6);
    }
}

TEST_CASE("mean-reverting residuals concentrate at late window positions") {
    std::mt19937_64 rng(56);
    const Index N = 4000;
    const Index L = 60;
    MatrixXd eps(N, L);
    const double b = std::exp(-1.0 / 2.5);
    for (Index i = 0; i < N; ++i) {
        const VectorXd level = ou_levels(b, 0.01, L + 1, rng);
        eps.row(i) = (level.tail(L) - level.head(L)).transpose();
    }
    const auto norm = normalize_cumulative(cumulative_residuals(eps), eps);
    const std::vector<MatrixXd> mats{norm.values};
    const auto pools = pool_by_alpha(mats);
    REQUIRE(pools.size() == 60);
    CHECK(pools[59].size() == N);
    const auto d = xhat_density_diff(pools);
    CHECK(d.diff(59, 39) > 0.1);
    CHECK(d.diff(59, 40) > 0.1);
}

TEST_CASE("strategy map keeps the state machine's open conditions") {
    std::mt19937_64 rng(57);
    std::normal_distribution<double> s(0.0, 1.5);
    std::uniform_real_distribution<double> tau(0.5, 50.0);
    const Index n = 400;
    std::vector<std::string> assets;
    std::vector<OUFit> fits;
    std::vector<std::optional<double>> signals;
    VectorXd w(n);
    for (Index i = 0; i < n; ++i) {
        assets.push_back("S" + std::to_string(i));
        OUFit f;
        f.mean_reverting = i % 7 != 0;
        f.tau_days = tau(rng);
        fits.push_back(f);
        signals.push_back(i % 11 == 0 ? std::nullopt : std::optional<double>(s(rng)));
        w[i] = next_position(0, signals.back(), f.mean_reverting ? f.tau_days : INFINITY);
    }
    const auto rows = strategy_map(Date(2021, 5, 3), assets, fits, signals, w);
    CHECK(!rows.empty());
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.deviation));
        CHECK(std::isfinite(r.tau_days));
        if (r.w_eps == -1.0) {
            CHECK(r.deviation > 1.25);
            CHECK(r.tau_days < 30.0);
        }
        if (r.w_eps == 1.0) {
            CHECK(r.deviation < -1.25);
            CHECK(r.tau_days < 30.0);
        }
    }
    const auto flat = strategy_map(Date(2021, 5, 3), assets, fits, signals, VectorXd::Zero(n));
    for (const auto& r : flat) {
        CHECK(r.w_eps == 0.0);
    }
}

TEST_CASE("alternating contacts every ten minutes give a point mass") {
    IntradayPanel day;
    day.day = Date(2020, 6, 1);
    day.assets = {"A", "B"};
    day.caps.resize(2, 391);
    for (Index m = 0; m < 391; ++m) {
        day.caps(0, m) = 5.0;
        day.caps(1, m) = m % 10 == 0 ? 5.0 : (m / 10 % 2 == 0 ? 6.0 : 4.0);
        day.minutes.push_back(static_cast<int>(m + 1));
    }
    const std::vector<IntradayPanel> days{day};
    const auto h = switching_time_distribution(days, 1);
    CHECK_FALSE(h.empty);
    CHECK(h.n_gaps == 39);
    CHECK(h.histogram.counts[9] == 39);
    CHECK(h.rate == doctest::Approx(0.1));
}

TEST_CASE("separated caps give the empty marker") {
    IntradayPanel day;
    day.day = Date(2020, 6, 1);
    day.assets = {"A", "B"};
    day.caps = MatrixXd{{10, 10, 10}, {5, 5, 5}};
    day.minutes = {1, 2, 3};
    const std::vector<IntradayPanel> days{day};
    const auto h = switching_time_distribution(days);
    CHECK(h.empty);
    CHECK(h.n_gaps == 0);
}

TEST_CASE("brownian pair gaps decrease and the fit statistics match their histogram") {
    AtlasConfig c;
    c.n_assets = 2;
    c.n_days = 1001;
    c.minutes_per_day = 390;
    c.initial_log_spacing = 0.0;
    c.rank_vols = {0.01};
    c.seed = 17;
    const auto m = generate_atlas_market(c);
    const auto h = switching_time_distribution(m.intraday, 1, 1e-3, 1.0, 30.0);
    REQUIRE_FALSE(h.empty);
    for (std::size_t b = 0; b + 1 < 4; ++b) {
        CHECK(h.histogram.counts[b] > h.histogram.counts[b + 1]);
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t b = 0; b < h.histogram.counts.size(); ++b) {
        if (h.histogram.counts[b] > 0) {
            xs.push_back(1.5 + static_cast<double>(b));
            ys.push_back(std::log(static_cast<double>(h.histogram.counts[b])));
        }
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        syy += ys[k] * ys[k];
        sxy += xs[k] * ys[k];
    }
    const double cov = sxy - sx * sy / n;
    const double r2 = cov * cov / ((sxx - sx * sx / n) * (syy - sy * sy / n));
    CHECK(h.log_linear_r2 == doctest::Approx(r2).epsilon(1e-10));
    CHECK(h.log_linear_r2 > 0.5);

    double total = 0.0;
    Index gaps = 0;
    for (const auto& day : m.intraday) {
        const auto perm = compute_ranks(day.caps.col(0));
        const auto rec = local_crossing_time(std::span<const IntradayPanel>(&day, 1), perm.name_at[0], perm.name_at[1], 1e-3);
        for (long g : rec.gaps) {
            total += static_cast<double>(g);
            ++gaps;
        }
    }
    CHECK(h.n_gaps == gaps);
    CHECK(h.rate == doctest::Approx(static_cast<double>(gaps) / total).epsilon(1e-12));
}

TEST_CASE("diagnostic csv headers") {
    TempDir dir;
    std::mt19937_64 rng(58);
    const std::vector<SpectrumReport> reps{eigen_spectrum(random_normal(3, 10, rng), Date(2020, 1, 2))};
    write_spectrum_csv(reps, dir.path / "s.csv");
    std::ifstream in(dir.path / "s.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "date,index,eigenvalue,scaled,mp_lower,mp_upper");
}
