#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "rankarb/market_sim.hpp"

namespace rankarb {

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("rankarb_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        std::ofstream(path / name) << content;
        return path / name;
    }
};

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

template <typename A, typename B>
double max_rel_diff(const A& a, const B& b) {
    return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
}

/// Panel from date-major lists: caps[t][i], returns[t][i]. NaN marks a missing entry.
inline MarketPanel make_panel(const std::vector<std::vector<double>>& caps,
                              const std::vector<std::vector<double>>& returns) {
    MarketPanel p;
    const auto T = static_cast<Index>(caps.size());
    const auto N = static_cast<Index>(caps.front().size());
    for (Index i = 0; i < N; ++i) {
        p.assets.push_back(std::string(1, static_cast<char>('A' + i)));
    }
    Date d(2020, 1, 2);
    for (Index t = 0; t < T; ++t) {
        p.dates.push_back(d);
        d = d.next_weekday();
    }
    p.caps.resize(N, T);
    p.returns.resize(N, T);
    p.cap_valid.resize(N, T);
    p.return_valid.resize(N, T);
    p.risk_free = VectorXd::Zero(T);
    for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < N; ++i) {
            p.caps(i, t) = caps[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            p.returns(i, t) = returns[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            p.cap_valid(i, t) = !std::isnan(p.caps(i, t));
            p.return_valid(i, t) = !std::isnan(p.returns(i, t));
        }
    }
    return p;
}

inline MatrixXd random_normal(Index rows, Index cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = z(rng);
        }
    }
    return m;
}

}  // namespace rankarb
