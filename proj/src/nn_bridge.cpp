#include "rankarb/nn_bridge.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace rankarb {

using nlohmann::json;

WeightStream import_weight_stream(const std::filesystem::path& path, const UniverseLookup& universe) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    WeightStream stream;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json rec;
        WeightRecord r;
        try {
            rec = json::parse(line);
            if (rec.contains("kind")) {
                continue;
            }
            r.date = Date::parse(rec.at("date").get<std::string>());
            r.space = rec.at("space").get<std::string>();
            r.assets = rec.at("assets").get<std::vector<std::string>>();
            const auto& w = rec.at("w_eps");
            if (!w.is_array()) {
                throw DataError("w_eps is not an array");
            }
            r.w_eps.resize(static_cast<Index>(w.size()));
            for (std::size_t k = 0; k < w.size(); ++k) {
                r.w_eps[static_cast<Index>(k)] = w[k].is_number() ? w[k].get<double>() : std::nan("");
            }
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(row) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(row) + ": " + e.what());
        }
        if (r.space != "name" && r.space != "rank") {
            stream.rejected.push_back({row, "unknown space '" + r.space + "'"});
            continue;
        }
        if (static_cast<Index>(r.assets.size()) != r.w_eps.size()) {
            stream.rejected.push_back({row, "assets and w_eps differ in length"});
            continue;
        }
        if (!r.w_eps.allFinite()) {
            stream.rejected.push_back({row, "non-finite weight"});
            continue;
        }
        if (universe) {
            const auto expected = universe(r.date, r.space);
            if (!expected) {
                stream.rejected.push_back({row, "no engine universe on " + r.date.str()});
                continue;
            }
            if (*expected != r.assets) {
                stream.rejected.push_back({row, "universe mismatch on " + r.date.str() + " (" +
                                                    std::to_string(r.assets.size()) + " assets vs " +
                                                    std::to_string(expected->size()) + " expected)"});
                continue;
            }
        }
        stream.records.push_back(std::move(r));
    }
    return stream;
}

void export_weight_stream(const std::vector<WeightRecord>& records, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    for (const auto& r : records) {
        json rec{{"date", r.date.str()},
                 {"space", r.space},
                 {"assets", r.assets},
                 {"w_eps", std::vector<double>(r.w_eps.begin(), r.w_eps.end())}};
        out << rec.dump() << '\n';
    }
}

EquityWeights nn_equity_weights(const Eigen::Ref<const MatrixXd>& phi, const Eigen::Ref<const VectorXd>& w_eps) {
    if (phi.rows() != w_eps.size()) {
        throw DomainError("nn_equity_weights: projector and weights are not conformable");
    }
    EquityWeights out{VectorXd::Zero(phi.cols()), true};
    VectorXd w = phi.transpose() * w_eps;
    const double norm = w.lpNorm<1>();
    if (norm > 1e-12) {
        out.w = w / norm;
        out.flat = false;
    }
    return out;
}

}  // namespace rankarb
