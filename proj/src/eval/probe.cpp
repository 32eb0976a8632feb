// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <cmath>

#include "lit/eval/eval.hpp"

namespace lit::eval {

template <Scalar T>
ProbeResult fewshot_probe(const Tensor<T>& embeddings, const std::vector<std::int32_t>& labels, std::size_t classes,
                          std::size_t shots, double lambda) {
    if (embeddings.rank() != 2 || embeddings.rows() != labels.size()) {
        fail(Errc::BatchMismatch, "embedding count differs from label count");
    }
    if (classes < 2 || shots == 0) fail(Errc::InsufficientShots, "probe needs two classes and at least one shot");
    if (!(lambda >= 0.0)) fail(Errc::InvalidConfig, "ridge lambda must be non-negative");

    std::vector<std::size_t> seen(classes, 0);
    std::vector<std::size_t> fit, held;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = labels[i];
        if (c < 0 || static_cast<std::size_t>(c) >= classes) fail(Errc::InvalidConfig, "label out of range");
        if (seen[static_cast<std::size_t>(c)]++ < shots) fit.push_back(i);
        else held.push_back(i);
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (seen[c] < shots) {
            fail(Errc::InsufficientShots, "class " + std::to_string(c) + " has " + std::to_string(seen[c]) +
                                              " examples, need " + std::to_string(shots));
        }
    }
    if (held.empty()) fail(Errc::InsufficientShots, "no held-out examples remain after fitting");

    const auto d = static_cast<Eigen::Index>(embeddings.cols());
    const auto n = static_cast<Eigen::Index>(fit.size());
    const auto k = static_cast<Eigen::Index>(classes);
    Eigen::MatrixXd X(n, d);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = embeddings.row(fit[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < d; ++c) X(r, c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
        Y(r, labels[fit[static_cast<std::size_t>(r)]]) = 1.0;
    }
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const Eigen::RowVectorXd y_mean = Y.colwise().mean();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, k);
    if (std::isfinite(lambda)) {
        const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
        const Eigen::MatrixXd Yc = Y.rowwise() - y_mean;
        Eigen::MatrixXd A = Xc.transpose() * Xc;
        A.diagonal().array() += lambda;
        W = A.ldlt().solve(Xc.transpose() * Yc);
    }
    const Eigen::RowVectorXd bias = y_mean - x_mean * W;

    std::size_t correct = 0;
    Eigen::RowVectorXd x(d);
    for (auto i : held) {
        const auto row = embeddings.row(i);
        for (Eigen::Index c = 0; c < d; ++c) x(c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
        const Eigen::RowVectorXd scores = x * W + bias;
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < k; ++c) {
            if (scores(c) > scores(best)) best = c;
        }
        correct += best == labels[i] ? 1 : 0;
    }
    ProbeResult out;
    out.fitted = fit.size();
    out.held_out = held.size();
    out.accuracy = static_cast<double>(correct) / static_cast<double>(held.size());
    return out;
}

template ProbeResult fewshot_probe(const Tensor<float>&, const std::vector<std::int32_t>&, std::size_t, std::size_t,
                                   double);
template ProbeResult fewshot_probe(const Tensor<double>&, const std::vector<std::int32_t>&, std::size_t, std::size_t,
                                   double);

}  // namespace lit::eval
