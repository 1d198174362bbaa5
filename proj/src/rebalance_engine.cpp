#include "rankarb/rebalance_engine.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"

namespace rankarb {

namespace {

VectorXd padded_ranks(const Eigen::Ref<const VectorXd>& rank_weights, Index n) {
    if (rank_weights.size() > n) {
        throw DomainError("rank book: " + std::to_string(rank_weights.size()) + " rank weights for " +
                          std::to_string(n) + " live assets");
    }
    VectorXd w = VectorXd::Zero(n);
    w.head(rank_weights.size()) = rank_weights;
    return w;
}

void check_caps(const IntradayBook& book, const Eigen::Ref<const VectorXd>& caps) {
    if (caps.size() != book.name_anchor.size()) {
        throw DomainError("rank book: cap snapshot size differs from the book");
    }
    if (!(caps.array() > 0.0).all()) {
        throw DomainError("rank book: caps must be positive");
    }
}

}  // namespace

IntradayBook open_book(const Eigen::Ref<const VectorXd>& rank_weights, const Eigen::Ref<const VectorXd>& caps) {
    const auto perm = compute_ranks(caps);
    if (perm.n_ranked() != caps.size()) {
        throw DomainError("open_book: every asset must be live intraday");
    }
    IntradayBook book;
    book.rank_weights = padded_ranks(rank_weights, caps.size());
    book.name_weights.resize(caps.size());
    for (Index k = 0; k < caps.size(); ++k) {
        book.name_weights[perm.name_at[static_cast<std::size_t>(k)]] = book.rank_weights[k];
    }
    book.rank_base = book.rank_weights;
    book.name_base = book.name_weights;
    book.rank_anchor = caps_by_rank(caps);
    book.name_anchor = caps;
    return book;
}

void evolve_rank_weights(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps) {
    check_caps(book, caps);
    book.rank_weights = (book.rank_base.array() * caps_by_rank(caps).array() / book.rank_anchor.array()).matrix();
}

void evolve_name_weights(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps) {
    check_caps(book, caps);
    book.name_weights = (book.name_base.array() * caps.array() / book.name_anchor.array()).matrix();
}

RebalanceCost rebalance_step(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps,
                             const RankPermutation& perm, double eta) {
    check_caps(book, caps);
    if (perm.n_ranked() != caps.size()) {
        throw DomainError("rebalance_step: permutation does not cover the book");
    }
    RebalanceCost cost;
    cost.latency = book.rank_weights.sum() - book.name_weights.sum();
    VectorXd after(caps.size());
    for (Index k = 0; k < caps.size(); ++k) {
        after[perm.name_at[static_cast<std::size_t>(k)]] = book.rank_weights[k];
    }
    cost.spread = eta * (after - book.name_weights).lpNorm<1>();
    book.name_weights = std::move(after);
    book.rank_base = book.rank_weights;
    book.name_base = book.name_weights;
    book.rank_anchor = caps_by_rank(caps);
    book.name_anchor = caps;
    return cost;
}

double CostLedger::total_latency() const {
    double s = 0.0;
    for (const auto& p : points) {
        s += p.latency;
    }
    return s;
}

double CostLedger::total_spread() const {
    double s = 0.0;
    for (const auto& p : points) {
        s += p.spread;
    }
    return s;
}

double CostLedger::max_divergence() const {
    double m = 0.0;
    for (double d : divergence) {
        m = std::max(m, std::abs(d));
    }
    return m;
}

DayResult simulate_day(const Eigen::Ref<const VectorXd>& w_rank_open, const IntradayPanel& day, Index interval,
                       double eta) {
    if (interval < 1) {
        throw DomainError("simulate_day: rebalance interval must be at least one minute");
    }
    if (day.n_minutes() < 1) {
        throw DataError("simulate_day: " + day.day.str() + " has no ticks");
    }
    DayResult res{open_book(w_rank_open, day.caps.col(0)), {}};
    auto& book = res.book;
    auto& ledger = res.ledger;
    ledger.day = day.day;
    ledger.eta = eta;
    ledger.interval = interval;
    ledger.divergence.reserve(static_cast<std::size_t>(day.n_minutes()));
    ledger.divergence.push_back(0.0);
    const Index last = day.n_minutes() - 1;
    for (Index m = 1; m <= last; ++m) {
        const auto caps = day.caps.col(m);
        evolve_rank_weights(book, caps);
        evolve_name_weights(book, caps);
        book.minute = m;
        ledger.divergence.push_back(book.rank_weights.sum() - book.name_weights.sum());
        if (m % interval == 0 || m == last) {
            const auto cost = rebalance_step(book, caps, compute_ranks(caps), eta);
            ledger.points.push_back({day.minutes[static_cast<std::size_t>(m)], cost.latency, cost.spread});
        }
    }
    return res;
}

void write_ledger_csv(std::span<const CostLedger> ledgers, const std::filesystem::path& path,
                      std::string_view preamble) {
    auto out = csv::open_out(path);
    csv::write_preamble(out, preamble);
    out << "date,minute,latency_cost,spread_cost\n";
    for (const auto& ledger : ledgers) {
        for (const auto& p : ledger.points) {
            out << ledger.day.str() << ',' << p.minute << ',' << p.latency << ',' << p.spread << '\n';
        }
    }
}

}  // namespace rankarb
