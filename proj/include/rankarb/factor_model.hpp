#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rankarb/core.hpp"

namespace rankarb {

/// Top-K principal directions of an N x T excess-return window (no demeaning).
/// factors is K x T (rows = right-singular vectors), weights is K x N with
/// weights = Sigma_K^{-1} U_K^T, so factors = weights * window.
template <typename Scalar>
struct FactorFit {
    Matrix<Scalar> factors;
    Matrix<Scalar> weights;
    Vector<Scalar> singular_values;
};

namespace detail {

inline std::string row_name(std::span<const std::string> names, Index i) {
    return static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                      : "#" + std::to_string(i);
}

}  // namespace detail

template <typename Derived>
FactorFit<typename Derived::Scalar> fit_factors(const Eigen::MatrixBase<Derived>& window, Index K,
                                                std::span<const std::string> names = {}) {
    using Scalar = typename Derived::Scalar;
    const Index N = window.rows();
    const Index T = window.cols();
    if (N == 0 || T == 0) {
        throw DomainError("fit_factors: empty window");
    }
    if (K < 0 || K > std::min(N, T)) {
        throw DomainError("fit_factors: K=" + std::to_string(K) + " exceeds window rank bound " +
                          std::to_string(std::min(N, T)));
    }
    if (!window.allFinite()) {
        throw DomainError("fit_factors: window contains masked or non-finite entries");
    }
    for (Index i = 0; i < N; ++i) {
        const Scalar mean = window.row(i).mean();
        const Scalar spread = (window.row(i).array() - mean).abs().maxCoeff();
        if (spread <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::abs(mean)) {
            throw DegeneracyError("fit_factors: zero-variance asset " + detail::row_name(names, i));
        }
    }
    FactorFit<Scalar> fit;
    if (K == 0) {
        fit.factors.resize(0, T);
        fit.weights.resize(0, N);
        return fit;
    }
    Eigen::BDCSVD<Matrix<Scalar>> svd(window, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix<Scalar> U = svd.matrixU().leftCols(K);
    Matrix<Scalar> V = svd.matrixV().leftCols(K);
    fit.singular_values = svd.singularValues().head(K);
    const Scalar floor = std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(std::max(N, T)) *
                         svd.singularValues()[0];
    if (fit.singular_values[K - 1] <= floor) {
        throw DegeneracyError("fit_factors: window has rank below K=" + std::to_string(K));
    }
    for (Index k = 0; k < K; ++k) {
        Index at = 0;
        V.col(k).cwiseAbs().maxCoeff(&at);
        if (V(at, k) < Scalar(0)) {
            V.col(k) = -V.col(k);
            U.col(k) = -U.col(k);
        }
    }
    fit.factors = V.transpose();
    fit.weights = fit.singular_values.cwiseInverse().asDiagonal() * U.transpose();
    return fit;
}

/// Least-squares loadings of an N x T window on K x T factors: window ~ beta * factors.
template <typename DerivedR, typename DerivedF>
Matrix<typename DerivedR::Scalar> fit_loadings(const Eigen::MatrixBase<DerivedR>& window,
                                               const Eigen::MatrixBase<DerivedF>& factors) {
    using Scalar = typename DerivedR::Scalar;
    const Index K = factors.rows();
    if (factors.cols() != window.cols()) {
        throw DomainError("fit_loadings: window and factors cover different spans");
    }
    if (K == 0) {
        return Matrix<Scalar>::Zero(window.rows(), 0);
    }
    if (window.cols() < K) {
        throw DomainError("fit_loadings: window length " + std::to_string(window.cols()) + " below K=" +
                          std::to_string(K));
    }
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(factors.transpose());
    if (qr.rank() < K) {
        throw DegeneracyError("fit_loadings: singular factor regressors (rank " + std::to_string(qr.rank()) +
                              " < " + std::to_string(K) + ")");
    }
    return qr.solve(window.transpose()).transpose();
}

/// Phi = I - beta * omega. Empty beta/omega (K = 0) gives the identity.
template <typename DerivedB, typename DerivedW>
Matrix<typename DerivedB::Scalar> build_projector(const Eigen::MatrixBase<DerivedB>& beta,
                                                  const Eigen::MatrixBase<DerivedW>& omega) {
    using Scalar = typename DerivedB::Scalar;
    if (beta.cols() != omega.rows() || beta.rows() != omega.cols()) {
        throw DomainError("build_projector: beta is " + std::to_string(beta.rows()) + "x" +
                          std::to_string(beta.cols()) + " but omega is " + std::to_string(omega.rows()) +
                          "x" + std::to_string(omega.cols()));
    }
    const Index N = beta.rows();
    Matrix<Scalar> phi = Matrix<Scalar>::Identity(N, N);
    if (beta.cols() > 0) {
        phi.noalias() -= beta * omega;
    }
    return phi;
}

template <typename DerivedP, typename DerivedR>
auto residuals(const Eigen::MatrixBase<DerivedP>& phi, const Eigen::MatrixBase<DerivedR>& excess) {
    if (phi.cols() != excess.rows()) {
        throw DomainError("residuals: projector and returns are not conformable");
    }
    return Matrix<typename DerivedP::Scalar>(phi * excess);
}

/// w_R = Phi^T w_eps, optionally scaled to unit l1 norm.
template <typename DerivedP, typename DerivedW>
Vector<typename DerivedP::Scalar> weights_to_equity(const Eigen::MatrixBase<DerivedP>& phi,
                                                    const Eigen::MatrixBase<DerivedW>& w_eps,
                                                    bool normalize = true) {
    using Scalar = typename DerivedP::Scalar;
    if (phi.rows() != w_eps.size()) {
        throw DomainError("weights_to_equity: projector and weights are not conformable");
    }
    Vector<Scalar> w = phi.transpose() * w_eps;
    if (normalize) {
        const Scalar norm = w.template lpNorm<1>();
        if (!(norm > Scalar(1e-12))) {
            throw DegeneracyError("weights_to_equity: l1 norm of Phi^T w vanishes");
        }
        w /= norm;
    }
    return w;
}

template <typename Scalar>
struct FactorModel {
    Date as_of;
    std::vector<std::string> universe;
    Index K = 0;
    Matrix<Scalar> factor_weights;  // K x N
    Matrix<Scalar> loadings;        // N x K
    Matrix<Scalar> projector;       // N x N
};

/// Factors on the whole window, loadings on its last beta_window columns.
template <typename Derived>
FactorModel<typename Derived::Scalar> fit_factor_model(const Eigen::MatrixBase<Derived>& window, Index K,
                                                       Index beta_window,
                                                       std::vector<std::string> universe = {},
                                                       Date as_of = {}) {
    using Scalar = typename Derived::Scalar;
    if (beta_window < 1 || beta_window > window.cols()) {
        throw DomainError("fit_factor_model: beta window " + std::to_string(beta_window) +
                          " outside the PCA window of " + std::to_string(window.cols()));
    }
    auto fit = fit_factors(window, K, universe);
    auto recent = window.rightCols(beta_window);
    Matrix<Scalar> recent_factors = fit.weights * recent;
    FactorModel<Scalar> model;
    model.as_of = as_of;
    model.universe = std::move(universe);
    model.K = K;
    model.loadings = fit_loadings(recent, recent_factors);
    model.factor_weights = std::move(fit.weights);
    model.projector = build_projector(model.loadings, model.factor_weights);
    return model;
}

std::string to_json(const FactorModel<double>& model);
FactorModel<double> factor_model_from_json(std::string_view text);
void write_factor_model(const FactorModel<double>& model, const std::filesystem::path& path);

}  // namespace rankarb
