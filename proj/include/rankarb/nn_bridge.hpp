#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rankarb/core.hpp"
#include "rankarb/ou_strategy.hpp"

namespace rankarb {

struct WeightRecord {
    Date date;
    std::string space = "name";
    std::vector<std::string> assets;
    VectorXd w_eps;
};

struct Rejection {
    std::size_t line = 0;
    std::string reason;
};

struct WeightStream {
    std::vector<WeightRecord> records;
    std::vector<Rejection> rejected;
};

/// Engine-side universe for (date, space); an empty result means the date is unknown.
using UniverseLookup = std::function<std::optional<std::vector<std::string>>(const Date&, const std::string&)>;

/// Malformed JSON is a DataError carrying the line number. Well-formed records that
/// disagree with `universe` (or carry non-finite weights) are rejected individually.
WeightStream import_weight_stream(const std::filesystem::path& path, const UniverseLookup& universe = {});

void export_weight_stream(const std::vector<WeightRecord>& records, const std::filesystem::path& path);

/// Phi^T w / ||Phi^T w||_1, flagged flat when the norm is at or below 1e-12.
EquityWeights nn_equity_weights(const Eigen::Ref<const MatrixXd>& phi, const Eigen::Ref<const VectorXd>& w_eps);

}  // namespace rankarb
