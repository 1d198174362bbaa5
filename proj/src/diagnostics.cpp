#include "rankarb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "csv.hpp"
#include "rankarb/rank_view.hpp"

namespace rankarb {

namespace {

void add(Histogram& h, double v) {
    const double pos = (v - h.lo) / h.width;
    if (pos < 0.0) {
        return;
    }
    const auto bin = static_cast<std::size_t>(pos);
    if (bin >= h.counts.size()) {
        ++h.overflow;
        return;
    }
    ++h.counts[bin];
}

Histogram make_histogram(double lo, double hi, double width) {
    if (!(width > 0.0) || !(hi > lo)) {
        throw ConfigError("histogram grid needs positive width and hi > lo");
    }
    Histogram h;
    h.lo = lo;
    h.width = width;
    h.counts.assign(static_cast<std::size_t>(std::llround(std::ceil((hi - lo) / width - 1e-9))), 0);
    return h;
}

}  // namespace

SpectrumReport eigen_spectrum(const Eigen::Ref<const MatrixXd>& returns, Date as_of) {
    const Index T = returns.cols();
    if (returns.rows() == 0) {
        throw DomainError("eigen_spectrum: no assets");
    }
    if (T < 2) {
        throw DomainError("eigen_spectrum: need at least two days");
    }
    if (!returns.allFinite()) {
        throw DomainError("eigen_spectrum: window contains masked entries");
    }
    SpectrumReport rep;
    rep.as_of = as_of;
    std::vector<Index> kept;
    for (Index i = 0; i < returns.rows(); ++i) {
        const double mean = returns.row(i).mean();
        const double spread = (returns.row(i).array() - mean).abs().maxCoeff();
        if (spread <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(mean)) {
            rep.dropped.push_back(i);
        } else {
            kept.push_back(i);
        }
    }
    const auto N = static_cast<Index>(kept.size());
    if (N == 0) {
        throw DomainError("eigen_spectrum: every asset has zero variance");
    }
    MatrixXd z(N, T);
    for (Index r = 0; r < N; ++r) {
        const auto row = returns.row(kept[static_cast<std::size_t>(r)]).array();
        const double mean = row.mean();
        const double sd = std::sqrt((row - mean).square().sum() / static_cast<double>(T - 1));
        z.row(r) = (row - mean) / sd;
    }
    MatrixXd corr = MatrixXd::Zero(N, N);
    corr.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0 / static_cast<double>(T - 1));
    corr.triangularView<Eigen::StrictlyUpper>() = corr.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(corr, Eigen::EigenvaluesOnly);
    rep.eigenvalues = solver.eigenvalues().reverse();

    const double n = static_cast<double>(N);
    const double t = static_cast<double>(T);
    rep.q = std::min(n, t) / std::max(n, t);
    rep.mp_lower = std::pow(1.0 - std::sqrt(rep.q), 2);
    rep.mp_upper = std::pow(1.0 + std::sqrt(rep.q), 2);
    const Index m = std::min(N, T);
    rep.scaled_bulk = rep.eigenvalues.head(m) * (N > T ? t / n : 1.0);
    Index outside = 0;
    for (Index k = 0; k < m; ++k) {
        if (rep.scaled_bulk[k] < rep.mp_lower || rep.scaled_bulk[k] > rep.mp_upper) {
            ++outside;
        }
    }
    rep.fraction_outside = static_cast<double>(outside) / static_cast<double>(m);
    return rep;
}

TauDistribution tau_distribution(std::span<const OUFit> fits, double bin_days, double max_days) {
    TauDistribution out;
    out.histogram = make_histogram(0.0, max_days, bin_days);
    Index above = 0;
    for (const auto& f : fits) {
        if (!f.mean_reverting) {
            ++out.n_non_mean_reverting;
            continue;
        }
        ++out.n_mean_reverting;
        add(out.histogram, f.tau_days);
        if (f.tau_days > 30.0) {
            ++above;
        }
    }
    if (out.n_mean_reverting > 0) {
        out.fraction_above_30 = static_cast<double>(above) / static_cast<double>(out.n_mean_reverting);
        const auto& c = out.histogram.counts;
        auto it = std::max_element(c.begin(), c.end());
        if (it != c.end() && *it > 0) {
            out.mode_days = out.histogram.center(static_cast<std::size_t>(it - c.begin()));
        }
    }
    return out;
}

Index DensityGrid::n_bins() const {
    return static_cast<Index>(std::llround(std::ceil((hi - lo) / width - 1e-9)));
}

DensityDiff xhat_density_diff(std::span<const VectorXd> pools, const DensityGrid& grid) {
    const Index B = grid.n_bins();
    if (B < 1) {
        throw ConfigError("xhat_density_diff: empty grid");
    }
    DensityDiff out;
    out.centers.resize(B);
    VectorXd normal(B);
    for (Index b = 0; b < B; ++b) {
        out.centers[b] = grid.lo + (static_cast<double>(b) + 0.5) * grid.width;
        normal[b] = std::exp(-0.5 * out.centers[b] * out.centers[b]) / std::sqrt(2.0 * std::numbers::pi);
    }
    out.diff.resize(static_cast<Index>(pools.size()), B);
    for (std::size_t a = 0; a < pools.size(); ++a) {
        const auto& pool = pools[a];
        out.pool_sizes.push_back(pool.size());
        if (pool.size() < 100) {
            out.warnings.push_back("alpha " + std::to_string(a + 1) + ": pool of " + std::to_string(pool.size()) +
                                   " is below 100 samples");
        }
        VectorXd counts = VectorXd::Zero(B);
        Index inside = 0;
        for (Index k = 0; k < pool.size(); ++k) {
            const double pos = (pool[k] - grid.lo) / grid.width;
            if (!(pos >= 0.0) || pos >= static_cast<double>(B)) {
                continue;
            }
            counts[static_cast<Index>(pos)] += 1.0;
            ++inside;
        }
        VectorXd density = inside > 0 ? VectorXd(counts / (static_cast<double>(inside) * grid.width))
                                      : VectorXd(VectorXd::Zero(B));
        out.diff.row(static_cast<Index>(a)) = (density - normal).transpose();
    }
    return out;
}

std::vector<VectorXd> pool_by_alpha(std::span<const MatrixXd> normalized) {
    Index L = 0;
    Index rows = 0;
    for (const auto& m : normalized) {
        if (L == 0) {
            L = m.cols();
        } else if (m.cols() != L) {
            throw DomainError("pool_by_alpha: trajectories have different window lengths");
        }
        rows += m.rows();
    }
    std::vector<VectorXd> pools(static_cast<std::size_t>(L), VectorXd(rows));
    Index offset = 0;
    for (const auto& m : normalized) {
        for (Index a = 0; a < L; ++a) {
            pools[static_cast<std::size_t>(a)].segment(offset, m.rows()) = m.col(a);
        }
        offset += m.rows();
    }
    return pools;
}

std::vector<StrategyMapRow> strategy_map(Date date, std::span<const std::string> assets, std::span<const OUFit> fits,
                                         std::span<const std::optional<double>> signals,
                                         const Eigen::Ref<const VectorXd>& w_eps) {
    const std::size_t n = assets.size();
    if (fits.size() != n || signals.size() != n || static_cast<std::size_t>(w_eps.size()) != n) {
        throw DomainError("strategy_map: inputs are not aligned");
    }
    std::vector<StrategyMapRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        if (!signals[i] || !fits[i].mean_reverting || !std::isfinite(*signals[i])) {
            continue;
        }
        rows.push_back({date, assets[i], *signals[i], fits[i].tau_days, w_eps[static_cast<Index>(i)]});
    }
    return rows;
}

SwitchingHistogram switching_time_distribution(std::span<const IntradayPanel> days, Index stride, double delta,
                                               double width, double max_gap) {
    if (stride < 1) {
        throw ConfigError("switching_time_distribution: stride must be positive");
    }
    SwitchingHistogram out;
    out.histogram = make_histogram(1.0, max_gap + 1.0, width);
    double total = 0.0;
    for (std::size_t d = 0; d < days.size(); ++d) {
        const auto perm = compute_ranks(days[d].caps.col(0));
        for (Index k = 0; k + 1 < perm.n_ranked(); k += stride) {
            const auto rec = local_crossing_time(days.subspan(d, 1), perm.name_at[static_cast<std::size_t>(k)],
                                                 perm.name_at[static_cast<std::size_t>(k + 1)], delta);
            for (long g : rec.gaps) {
                add(out.histogram, static_cast<double>(g));
                total += static_cast<double>(g);
                ++out.n_gaps;
            }
        }
    }
    out.empty = out.n_gaps == 0;
    if (out.empty) {
        return out;
    }
    out.rate = static_cast<double>(out.n_gaps) / total;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t b = 0; b < out.histogram.counts.size(); ++b) {
        if (out.histogram.counts[b] > 0) {
            xs.push_back(out.histogram.center(b));
            ys.push_back(std::log(static_cast<double>(out.histogram.counts[b])));
        }
    }
    if (xs.size() >= 3) {
        const Eigen::Map<const VectorXd> x(xs.data(), static_cast<Index>(xs.size()));
        const Eigen::Map<const VectorXd> y(ys.data(), static_cast<Index>(ys.size()));
        const double mx = x.mean();
        const double my = y.mean();
        const double sxx = (x.array() - mx).square().sum();
        const double syy = (y.array() - my).square().sum();
        const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
        out.log_linear_r2 = sxx > 0.0 && syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
    }
    return out;
}

void write_spectrum_csv(std::span<const SpectrumReport> reports, const std::filesystem::path& path,
                        std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,index,eigenvalue,scaled,mp_lower,mp_upper\n";
    for (const auto& r : reports) {
        for (Index k = 0; k < r.eigenvalues.size(); ++k) {
            out << r.as_of.str() << ',' << k + 1 << ',' << r.eigenvalues[k] << ',';
            if (k < r.scaled_bulk.size()) {
                out << r.scaled_bulk[k];
            }
            out << ',' << r.mp_lower << ',' << r.mp_upper << '\n';
        }
    }
}

void write_histogram_csv(const Histogram& h, std::string_view value_name, const std::filesystem::path& path,
                         std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "# overflow=" << h.overflow << '\n';
    out << value_name << "_lo," << value_name << "_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double lo = h.lo + static_cast<double>(b) * h.width;
        out << lo << ',' << lo + h.width << ',' << h.counts[b] << '\n';
    }
}

void write_density_csv(const DensityDiff& d, const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "alpha,center,diff\n";
    for (Index a = 0; a < d.diff.rows(); ++a) {
        for (Index b = 0; b < d.diff.cols(); ++b) {
            out << a + 1 << ',' << d.centers[b] << ',' << d.diff(a, b) << '\n';
        }
    }
}

void write_strategy_map_csv(std::span<const StrategyMapRow> rows, const std::filesystem::path& path,
                            std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,asset,deviation,tau_days,w_eps\n";
    for (const auto& r : rows) {
        out << r.date.str() << ',' << r.asset << ',' << r.deviation << ',' << r.tau_days << ',' << r.w_eps << '\n';
    }
}

}  // namespace rankarb
