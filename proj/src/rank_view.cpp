#include "rankarb/rank_view.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv.hpp"

namespace rankarb {

RankPermutation compute_ranks(const Eigen::Ref<const VectorXd>& caps) {
    if (caps.size() == 0) {
        throw DomainError("compute_ranks: empty snapshot");
    }
    RankPermutation perm;
    perm.rank_of.assign(static_cast<std::size_t>(caps.size()), -1);
    perm.name_at.reserve(static_cast<std::size_t>(caps.size()));
    for (Index i = 0; i < caps.size(); ++i) {
        if (std::isnan(caps[i])) {
            continue;
        }
        if (!(caps[i] > 0.0) || !std::isfinite(caps[i])) {
            throw DomainError("compute_ranks: non-positive cap at asset " + std::to_string(i));
        }
        perm.name_at.push_back(i);
    }
    if (perm.name_at.empty()) {
        throw DomainError("compute_ranks: no live assets");
    }
    std::stable_sort(perm.name_at.begin(), perm.name_at.end(),
                     [&](Index a, Index b) { return caps[a] > caps[b]; });
    for (std::size_t k = 0; k < perm.name_at.size(); ++k) {
        perm.rank_of[static_cast<std::size_t>(perm.name_at[k])] = static_cast<Index>(k);
    }
    return perm;
}

VectorXd caps_by_rank(const Eigen::Ref<const VectorXd>& caps) {
    std::vector<double> live;
    live.reserve(static_cast<std::size_t>(caps.size()));
    for (Index i = 0; i < caps.size(); ++i) {
        if (!std::isnan(caps[i])) {
            live.push_back(caps[i]);
        }
    }
    std::sort(live.begin(), live.end(), std::greater<>());
    return Eigen::Map<VectorXd>(live.data(), static_cast<Index>(live.size()));
}

VectorXd rank_returns(const Eigen::Ref<const VectorXd>& caps_prev,
                      const Eigen::Ref<const VectorXd>& caps_now) {
    if (caps_prev.size() != caps_now.size()) {
        throw DomainError("rank_returns: snapshot sizes differ (" + std::to_string(caps_prev.size()) +
                          " vs " + std::to_string(caps_now.size()) + ")");
    }
    VectorXd prev = caps_by_rank(caps_prev);
    VectorXd now = caps_by_rank(caps_now);
    if (prev.size() != now.size()) {
        throw DomainError("rank_returns: live asset counts differ");
    }
    return (now.array() / prev.array() - 1.0).matrix();
}

VectorXd rank_returns(const MarketPanel& panel, Index t, std::optional<Index> n_ranks) {
    if (t < 1 || t >= panel.n_dates()) {
        throw DomainError("rank_returns: date index " + std::to_string(t) + " has no predecessor");
    }
    VectorXd prev = caps_by_rank(panel.caps.col(t - 1));
    VectorXd now = caps_by_rank(panel.caps.col(t));
    Index n = n_ranks.value_or(std::min(prev.size(), now.size()));
    if (n > prev.size() || n > now.size()) {
        throw DomainError("rank_returns: fewer than " + std::to_string(n) + " live assets around " +
                          panel.dates[static_cast<std::size_t>(t)].str());
    }
    return (now.head(n).array() / prev.head(n).array() - 1.0).matrix();
}

RankReturnPanel rank_return_panel(const MarketPanel& panel, Index n_ranks) {
    const Index T = panel.n_dates();
    RankReturnPanel out{MatrixXd::Constant(n_ranks, T, std::nan("")),
                        MaskMatrix::Constant(n_ranks, T, false)};
    if (T == 0) {
        return out;
    }
    VectorXd prev = caps_by_rank(panel.caps.col(0));
    for (Index t = 1; t < T; ++t) {
        VectorXd now = caps_by_rank(panel.caps.col(t));
        if (prev.size() >= n_ranks && now.size() >= n_ranks) {
            out.returns.col(t) = (now.head(n_ranks).array() / prev.head(n_ranks).array() - 1.0).matrix();
            out.valid.col(t).setConstant(true);
        }
        prev = std::move(now);
    }
    return out;
}

CrossingRecord local_crossing_time(std::span<const IntradayPanel> days, Index first, Index second,
                                   double delta) {
    if (!(delta > 0.0)) {
        throw DomainError("local_crossing_time: delta must be positive");
    }
    CrossingRecord rec;
    if (!days.empty()) {
        const auto& assets = days.front().assets;
        auto name = [&](Index i) {
            return i >= 0 && static_cast<std::size_t>(i) < assets.size() ? assets[static_cast<std::size_t>(i)]
                                                                          : std::to_string(i);
        };
        rec.pair = name(first) + "|" + name(second);
    }
    long minute = 0;
    double lambda = 0.0;
    bool first_day = true;
    for (const auto& day : days) {
        if (first >= day.n_assets() || second >= day.n_assets() || first < 0 || second < 0) {
            throw DomainError("local_crossing_time: asset index out of range on " + day.day.str());
        }
        for (Index m = first_day ? 0 : 1; m < day.n_minutes(); ++m, ++minute) {
            const double c1 = day.caps(first, m);
            const double c2 = day.caps(second, m);
            if (std::abs(c1 - c2) <= delta * std::max(c1, c2)) {
                lambda += 1.0;
                if (!rec.contact_minutes.empty()) {
                    rec.gaps.push_back(minute - rec.contact_minutes.back());
                }
                rec.contact_minutes.push_back(minute);
            }
            rec.local_time.push_back(lambda);
        }
        first_day = false;
    }
    return rec;
}

void write_crossing_csv(std::span<const CrossingRecord> records, const std::filesystem::path& path,
                        std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "pair,minute,lambda_gap\n";
    for (const auto& rec : records) {
        for (std::size_t g = 0; g < rec.gaps.size(); ++g) {
            out << rec.pair << ',' << rec.contact_minutes[g + 1] << ',' << rec.gaps[g] << '\n';
        }
    }
}

}  // namespace rankarb
