#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written as plain loops so it shares no code path
// with the library beyond the data types.

#include "eegda/losses.hpp"
#include "eegda/net.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using eegda::Labels;
using eegda::Matrix;
using eegda::Vector;

// O(N^2) periodogram, |sum_n x[n] e^{-2 pi i k n / N}|^2 / N.
inline Vector direct_psd(const Vector& x) {
    const auto n = x.size();
    Vector out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
            acc += x(t) * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out(k) = std::norm(acc) / static_cast<double>(n);
    }
    return out;
}

inline double dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return std::sqrt(s);
}

inline double l_comp(const Matrix& f, const Labels& y, const Matrix& centroids) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < centroids.rows(); ++k)
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == k) s += dist(f, static_cast<Eigen::Index>(i), centroids, k);
    return s;
}

inline double l_sep(const Matrix& c, double t_m) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < c.rows(); ++k)
        for (Eigen::Index l = 0; l < c.rows(); ++l)
            if (k != l) s += std::max(t_m - dist(c, l, c, k), 0.0);
    return s;
}

inline double l_cd(const Matrix& s, const Matrix& t) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < s.rows(); ++k) acc += dist(s, k, t, k);
    return acc;
}

struct ClassStats {
    Matrix centroids;
    Vector mean;
    Vector sigma;
};

// Per-class centroid, mean distance to it and population std of that distance.
inline ClassStats class_stats(const Matrix& f, const Labels& y, int classes) {
    ClassStats out{Matrix::Zero(classes, f.cols()), Vector::Zero(classes), Vector::Zero(classes)};
    for (int k = 0; k < classes; ++k) {
        int n = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] != k) continue;
            ++n;
            for (Eigen::Index c = 0; c < f.cols(); ++c) out.centroids(k, c) += f(static_cast<Eigen::Index>(i), c);
        }
        for (Eigen::Index c = 0; c < f.cols(); ++c) out.centroids(k, c) /= n;
        double sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == k) sum += dist(f, static_cast<Eigen::Index>(i), out.centroids, k);
        out.mean(k) = sum / n;
        double sq = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == k) {
                const double d = dist(f, static_cast<Eigen::Index>(i), out.centroids, k) - out.mean(k);
                sq += d * d;
            }
        out.sigma(k) = std::sqrt(sq / n);
    }
    return out;
}

inline double mean_discrepancy(const Matrix& p1, const Matrix& p2) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p1.rows(); ++i) s += dist(p1, i, p2, i);
    return s / static_cast<double>(p1.rows());
}

struct Confusion {
    std::vector<std::vector<long long>> counts;
    double accuracy = 0.0;
    std::vector<double> se, ppv, f1;
};

inline Confusion confusion(const Labels& truth, const Labels& pred, int classes) {
    Confusion c;
    c.counts.assign(static_cast<std::size_t>(classes), std::vector<long long>(static_cast<std::size_t>(classes), 0));
    long long correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        c.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])] += 1;
        if (truth[i] == pred[i]) ++correct;
    }
    c.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
    for (int k = 0; k < classes; ++k) {
        long long tp = 0, fn = 0, fp = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == k && pred[i] == k) ++tp;
            if (truth[i] == k && pred[i] != k) ++fn;
            if (truth[i] != k && pred[i] == k) ++fp;
        }
        const double se = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double ppv = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        c.se.push_back(se);
        c.ppv.push_back(ppv);
        c.f1.push_back(se + ppv > 0.0 ? 2.0 * se * ppv / (se + ppv) : 0.0);
    }
    return c;
}

// Central finite differences over every trainable scalar.
// Returns the largest relative error |a - n| / max(|a|, |n|, floor).
inline double gradient_check(eegda::net::ModelParams params, const eegda::net::ModelParams& analytic,
                             const std::function<double(const eegda::net::ModelParams&)>& loss, double h = 1e-4,
                             double floor = 1e-6) {
    auto slots = params.trainable();
    const auto grads = analytic.trainable();
    double worst = 0.0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        Matrix& m = *slots[s];
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double keep = m.data()[i];
            m.data()[i] = keep + h;
            const double up = loss(params);
            m.data()[i] = keep - h;
            const double down = loss(params);
            m.data()[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double a = grads[s]->data()[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

}  // namespace oracle
