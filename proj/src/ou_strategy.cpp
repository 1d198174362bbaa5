#include "rankarb/ou_strategy.hpp"

#include <cmath>
#include <limits>

#include "csv.hpp"

namespace rankarb {

OUFit fit_ou(const Eigen::Ref<const VectorXd>& x) {
    const Index L = x.size();
    if (L < 3) {
        throw DomainError("fit_ou: need at least 3 points, got " + std::to_string(L));
    }
    if (!x.allFinite()) {
        throw DomainError("fit_ou: path has non-finite entries");
    }
    const Index n = L - 1;
    auto prev = x.head(n).array();
    auto next = x.tail(n).array();
    const double mx = prev.mean();
    const double my = next.mean();
    const double sxx = (prev - mx).square().sum();
    if (!(sxx > 0.0)) {
        throw DegeneracyError("fit_ou: constant regressor");
    }
    const double sxy = ((prev - mx) * (next - my)).sum();
    const double syy = (next - my).square().sum();

    OUFit fit;
    fit.b = sxy / sxx;
    fit.a = my - fit.b * mx;
    const double ssr = (next - fit.a - fit.b * prev).square().sum();
    fit.resid_var = ssr / static_cast<double>(n);
    fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.mean_reverting = fit.b > 0.0 && fit.b < 1.0;
    if (fit.mean_reverting) {
        fit.kappa = -std::log(fit.b) * 252.0;
        fit.tau_days = 252.0 / fit.kappa;
        fit.m = fit.a / (1.0 - fit.b);
        fit.sigma = std::sqrt(fit.resid_var / (1.0 - fit.b * fit.b));
    } else {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        fit.kappa = fit.tau_days = fit.m = fit.sigma = nan;
    }
    return fit;
}

std::optional<double> signal(const OUFit& fit, double x_terminal) {
    if (!(fit.sigma > 0.0) || !std::isfinite(fit.m)) {
        return std::nullopt;
    }
    return (x_terminal - fit.m) / fit.sigma;
}

int next_position(int prev, std::optional<double> s, double tau_days, const ThresholdRule& rule) {
    if (!s || !std::isfinite(*s) || !(tau_days < rule.tau_max_days)) {
        return 0;
    }
    switch (prev) {
    case 1:
        return *s < -rule.close ? 1 : 0;
    case -1:
        return *s > rule.close ? -1 : 0;
    default:
        if (*s > rule.open) {
            return -1;
        }
        if (*s < -rule.open) {
            return 1;
        }
        return 0;
    }
}

PositionState update_positions(const PositionState& prev, std::span<const std::optional<double>> signals,
                               std::span<const OUFit> fits, Date today, const ThresholdRule& rule) {
    const std::size_t n = prev.w_eps.size();
    if (signals.size() != n || fits.size() != n || prev.opened_at.size() != n) {
        throw DomainError("update_positions: signals, fits and state are not aligned");
    }
    PositionState next = PositionState::flat(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = fits[i].mean_reverting ? fits[i].tau_days : std::numeric_limits<double>::infinity();
        next.w_eps[i] = next_position(prev.w_eps[i], signals[i], tau, rule);
        if (next.w_eps[i] != 0) {
            next.opened_at[i] = next.w_eps[i] == prev.w_eps[i] ? prev.opened_at[i] : std::optional<Date>(today);
        }
    }
    return next;
}

EquityWeights strategy_weights(const Eigen::Ref<const MatrixXd>& phi, const PositionState& state) {
    const auto n = static_cast<Index>(state.w_eps.size());
    if (phi.rows() != n || phi.cols() != n) {
        throw DomainError("strategy_weights: projector does not match the state size");
    }
    EquityWeights out{VectorXd::Zero(n), true};
    VectorXd w_eps(n);
    for (Index i = 0; i < n; ++i) {
        w_eps[i] = state.w_eps[static_cast<std::size_t>(i)];
    }
    if (w_eps.isZero(0.0)) {
        return out;
    }
    VectorXd w = phi.transpose() * w_eps;
    const double norm = w.lpNorm<1>();
    if (!(norm > 1e-12)) {
        return out;
    }
    out.w = w / norm;
    out.flat = false;
    return out;
}

void write_fit_table(std::span<const FitRow> rows, const std::filesystem::path& path, std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,asset,a,b,kappa,tau_days,m,sigma,r2,flag\n";
    for (const auto& r : rows) {
        const auto& f = r.fit;
        out << r.date.str() << ',' << r.asset << ',' << f.a << ',' << f.b << ',' << f.kappa << ',' << f.tau_days
            << ',' << f.m << ',' << f.sigma << ',' << f.r2 << ',' << (f.mean_reverting ? "ok" : "non_mean_reverting")
            << '\n';
    }
}

}  // namespace rankarb
