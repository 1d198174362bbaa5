#include "rankarb/residual_panel.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace rankarb {

using nlohmann::json;

CumulativeTrajectory cumulative_residuals(const Eigen::Ref<const MatrixXd>& eps_window, Date as_of,
                                          std::vector<std::string> assets, std::string space) {
    if (eps_window.cols() < 2) {
        throw DomainError("cumulative_residuals: window length L=" + std::to_string(eps_window.cols()) +
                          " is below 2");
    }
    if (!eps_window.allFinite()) {
        throw DomainError("cumulative_residuals: window contains masked entries");
    }
    if (!assets.empty() && static_cast<Index>(assets.size()) != eps_window.rows()) {
        throw DomainError("cumulative_residuals: asset list does not match window rows");
    }
    CumulativeTrajectory traj;
    traj.as_of = as_of;
    traj.space = std::move(space);
    traj.assets = std::move(assets);
    traj.values = cumulative_sum(eps_window);
    return traj;
}

NormalizedTrajectory normalize_cumulative(const CumulativeTrajectory& x, const Eigen::Ref<const MatrixXd>& eps_window) {
    if (eps_window.rows() != x.values.rows() || eps_window.cols() != x.values.cols()) {
        throw DomainError("normalize_cumulative: trajectory and residual window shapes differ");
    }
    const Index N = x.values.rows();
    const Index L = x.values.cols();
    NormalizedTrajectory out;
    out.as_of = x.as_of;
    std::vector<double> sigmas;
    for (Index i = 0; i < N; ++i) {
        const double mean = eps_window.row(i).mean();
        const double var = (eps_window.row(i).array() - mean).square().sum() / static_cast<double>(L - 1);
        const double sigma = std::sqrt(var);
        if (!(sigma > 1e-12)) {
            out.excluded.push_back(i);
            const std::string who = static_cast<std::size_t>(i) < x.assets.size()
                                        ? x.assets[static_cast<std::size_t>(i)]
                                        : "#" + std::to_string(i);
            out.warnings.push_back("asset " + who + " excluded: residual std " + std::to_string(sigma));
            continue;
        }
        out.included.push_back(i);
        sigmas.push_back(sigma);
    }
    const auto n = static_cast<Index>(out.included.size());
    out.sigma_hat = Eigen::Map<VectorXd>(sigmas.data(), n);
    const VectorXd root_alpha = VectorXd::LinSpaced(L, 1.0, static_cast<double>(L)).cwiseSqrt();
    out.values.resize(n, L);
    for (Index r = 0; r < n; ++r) {
        out.values.row(r) = x.values.row(out.included[static_cast<std::size_t>(r)]).array() /
                            (out.sigma_hat[r] * root_alpha.transpose().array());
    }
    return out;
}

void export_training_set(const std::vector<CumulativeTrajectory>& trajectories, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << json{{"kind", "training_set"}, {"version", 1}, {"records", trajectories.size()}}.dump() << '\n';
    for (const auto& traj : trajectories) {
        json x = json::array();
        for (Index i = 0; i < traj.values.rows(); ++i) {
            x.push_back(std::vector<double>(traj.values.row(i).begin(), traj.values.row(i).end()));
        }
        json rec{{"date", traj.as_of.str()}, {"space", traj.space}, {"assets", traj.assets},
                 {"L", traj.L()}, {"x", std::move(x)}};
        if (traj.r_next) {
            rec["r_next"] = std::vector<double>(traj.r_next->begin(), traj.r_next->end());
        }
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

std::vector<CumulativeTrajectory> read_training_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::vector<CumulativeTrajectory> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json rec = json::parse(line);
            if (rec.contains("kind")) {
                continue;
            }
            CumulativeTrajectory traj;
            traj.as_of = Date::parse(rec.at("date").get<std::string>());
            traj.space = rec.at("space").get<std::string>();
            traj.assets = rec.at("assets").get<std::vector<std::string>>();
            const auto L = rec.at("L").get<Index>();
            const auto& x = rec.at("x");
            const auto N = static_cast<Index>(x.size());
            traj.values.resize(N, L);
            for (Index i = 0; i < N; ++i) {
                const auto values = x[static_cast<std::size_t>(i)].get<std::vector<double>>();
                if (static_cast<Index>(values.size()) != L) {
                    throw DataError("line " + std::to_string(row) + ": trajectory length differs from L");
                }
                traj.values.row(i) = Eigen::Map<const RowVector<double>>(values.data(), L);
            }
            if (rec.contains("r_next")) {
                const auto r = rec["r_next"].get<std::vector<double>>();
                traj.r_next = Eigen::Map<const VectorXd>(r.data(), static_cast<Index>(r.size()));
            }
            out.push_back(std::move(traj));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(row) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace rankarb
