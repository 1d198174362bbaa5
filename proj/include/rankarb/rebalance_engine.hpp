#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"
#include "rankarb/market_sim.hpp"
#include "rankarb/rank_view.hpp"

namespace rankarb {

/// Dollar weights held in rank space and in name space during one trading day.
/// Both sides evolve by cap ratios against anchors that reset at each rebalance point.
struct IntradayBook {
    VectorXd rank_weights;  // per rank
    VectorXd name_weights;  // per asset
    VectorXd rank_base;     // rank weights at the last rebalance
    VectorXd name_base;
    VectorXd rank_anchor;   // k-th largest cap at the last rebalance
    VectorXd name_anchor;   // asset caps at the last rebalance
    Index minute = 0;       // tick index within the day
};

/// Book aligned to the rank map of `caps`: name_weights[name_at[k]] = rank_weights[k].
/// Ranks beyond rank_weights.size() carry zero weight.
IntradayBook open_book(const Eigen::Ref<const VectorXd>& rank_weights, const Eigen::Ref<const VectorXd>& caps);

void evolve_rank_weights(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps);
void evolve_name_weights(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps);

struct RebalanceCost {
    double latency = 0.0;  // sum(rank) - sum(name), before trading
    double spread = 0.0;   // eta * sum |name_after - name_before|
};

/// Re-aligns name weights to rank weights under `perm` and resets the anchors to `caps`.
RebalanceCost rebalance_step(IntradayBook& book, const Eigen::Ref<const VectorXd>& caps,
                             const RankPermutation& perm, double eta);

struct LedgerPoint {
    int minute = 0;
    double latency = 0.0;
    double spread = 0.0;
};

struct CostLedger {
    Date day;
    double eta = 0.0;
    Index interval = 0;
    std::vector<LedgerPoint> points;
    /// sum(rank) - sum(name) at every tick, before any trade at that tick.
    std::vector<double> divergence;

    double total_latency() const;
    double total_spread() const;
    double max_divergence() const;
};

struct DayResult {
    IntradayBook book;
    CostLedger ledger;
};

/// Evolves the opening rank book through the day, rebalancing every `interval` ticks
/// and at the close.
DayResult simulate_day(const Eigen::Ref<const VectorXd>& w_rank_open, const IntradayPanel& day, Index interval,
                       double eta);

void write_ledger_csv(std::span<const CostLedger> ledgers, const std::filesystem::path& path,
                      std::string_view preamble = {});

}  // namespace rankarb
