#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"
#include "rankarb/market_sim.hpp"

namespace rankarb {

/// Rank <-> name correspondence for one snapshot. Rank 0 is the largest cap.
/// Dead assets (NaN caps) carry rank -1 and do not appear in name_at.
struct RankPermutation {
    std::vector<Index> rank_of;
    std::vector<Index> name_at;

    Index n_ranked() const { return static_cast<Index>(name_at.size()); }
};

/// Ranks live assets by descending cap, ties to the lower index. NaN marks a dead asset.
RankPermutation compute_ranks(const Eigen::Ref<const VectorXd>& caps);

/// Live caps sorted descending (NaNs dropped).
VectorXd caps_by_rank(const Eigen::Ref<const VectorXd>& caps);

/// out[k] = c_(k),now / c_(k),prev - 1 with each snapshot ranked independently.
VectorXd rank_returns(const Eigen::Ref<const VectorXd>& caps_prev,
                      const Eigen::Ref<const VectorXd>& caps_now);

/// Rank returns between dates t-1 and t of a panel, over the top n_ranks (default: all
/// ranks live on both days).
VectorXd rank_returns(const MarketPanel& panel, Index t, std::optional<Index> n_ranks = {});

/// Rank-return panel (rank x date). Column t is valid when both t-1 and t have at least
/// n_ranks live assets; column 0 is never valid.
struct RankReturnPanel {
    MatrixXd returns;
    MaskMatrix valid;
};

RankReturnPanel rank_return_panel(const MarketPanel& panel, Index n_ranks);

/// Proximity statistics for one pair of assets. Minutes are counted along the
/// concatenated intraday ticks, skipping each later day's opening tick (it repeats the
/// prior close).
struct CrossingRecord {
    std::string pair;
    std::vector<double> local_time;    // cumulative contact minutes, one per tick
    std::vector<long> contact_minutes; // ticks that contributed to local_time
    std::vector<long> gaps;            // differences of successive contact ticks
};

/// A tick contributes when |c1 - c2| <= delta * max(c1, c2).
CrossingRecord local_crossing_time(std::span<const IntradayPanel> days, Index first, Index second,
                                   double delta = 1e-3);

void write_crossing_csv(std::span<const CrossingRecord> records, const std::filesystem::path& path,
                        std::string_view preamble = {});

}  // namespace rankarb
