#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/geometry.hpp"
#include "spectrack/rng.hpp"
#include "spectrack/similarity.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

enum class EmbedMethod { mds, tsne };

inline std::string to_string(EmbedMethod m) { return m == EmbedMethod::mds ? "mds" : "tsne"; }

/// 2D image of a set of high-dimensional vectors, index-aligned with the
/// input order.
struct Embedding2D {
    std::vector<Point2> points;
    EmbedMethod method = EmbedMethod::mds;
    std::map<std::string, double> diagnostics;
};

namespace detail {

/// Cyclic Jacobi eigensolver for a dense symmetric matrix (row-major).
/// Rotations zero one off-diagonal pair at a time; sweeps repeat until
/// the off-diagonal Frobenius norm falls below tol relative to the full
/// norm. Eigenvectors come back as columns of V.
struct JacobiResult {
    std::vector<double> eigenvalues;  // unsorted, a[i][i] after convergence
    std::vector<double> eigenvectors; // column k = eigenvector of eigenvalues[k]
};

inline JacobiResult jacobi_eigen(std::vector<double> a, std::size_t n, int max_sweeps = 100,
                                 double tol = 1e-12) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    auto off_norm_sq = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
        return s;
    };
    double total_sq = 0.0;
    for (double x : a) total_sq += x * x;
    const double threshold_sq = tol * tol * (total_sq > 0.0 ? total_sq : 1.0);

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (off_norm_sq() <= threshold_sq) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double arp = a[r * n + p];
                        const double arq = a[r * n + q];
                        a[r * n + p] = a[p * n + r] = arp - s * (arq + tau * arp);
                        a[r * n + q] = a[q * n + r] = arq + s * (arp - tau * arq);
                    }
                    const double vrp = v[r * n + p];
                    const double vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    const double residual = std::sqrt(off_norm_sq());
    if (residual * residual > threshold_sq)
        throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                               " sweeps (off-diagonal norm " + fmt_double(residual) + ")",
                           residual);

    JacobiResult out;
    out.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a[i * n + i];
    out.eigenvectors = std::move(v);
    return out;
}

} // namespace detail

/// Classical (Torgerson) multidimensional scaling: double-center the
/// squared distances, take the two largest eigenpairs, scale by sqrt of
/// the eigenvalue. Sign convention: each axis is flipped so that its
/// largest-magnitude coordinate is positive, making the output
/// deterministic.
inline Embedding2D mds_embed(const DistanceMatrix& d) {
    const std::size_t n = d.n_points;
    if (n < 3) throw SizeError("mds_embed: need at least 3 points");

    std::vector<double> b(n * n);
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dij = d.at(i, j);
            const double sq = dij * dij;
            b[i * n + j] = sq;
            row_mean[i] += sq;
        }
        grand += row_mean[i];
        row_mean[i] /= static_cast<double>(n);
    }
    grand /= static_cast<double>(n) * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            b[i * n + j] = -0.5 * (b[i * n + j] - row_mean[i] - row_mean[j] + grand);

    auto eig = detail::jacobi_eigen(std::move(b), n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return eig.eigenvalues[x] > eig.eigenvalues[y];
    });

    Embedding2D out;
    out.method = EmbedMethod::mds;
    out.points.resize(n);
    for (int axis = 0; axis < 2; ++axis) {
        const std::size_t col = order[static_cast<std::size_t>(axis)];
        const double lambda = eig.eigenvalues[col];
        const double scale = std::sqrt(lambda > 0.0 ? lambda : 0.0);

        std::size_t i_max = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::abs(eig.eigenvectors[i * n + col]);
            if (mag > best) {
                best = mag;
                i_max = i;
            }
        }
        const double flip = eig.eigenvectors[i_max * n + col] < 0.0 ? -1.0 : 1.0;

        for (std::size_t i = 0; i < n; ++i) {
            const double c = flip * scale * eig.eigenvectors[i * n + col];
            if (axis == 0)
                out.points[i].x = c;
            else
                out.points[i].y = c;
        }
        out.diagnostics["eigenvalue_" + std::to_string(axis + 1)] = lambda;
    }
    return out;
}

/// t-SNE hyperparameters; the reference gradient-descent scheme with
/// early exaggeration and a two-phase momentum schedule.
struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration_factor = 12.0;
    std::size_t early_exaggeration_iters = 250;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch_iter = 250;
    std::uint64_t seed = 0;

    void validate(std::size_t n_points) const {
        if (perplexity <= 0.0) throw ValidationError("TsneConfig: perplexity must be positive");
        if (n_points < 3) throw SizeError("tsne_embed: need at least 3 points");
        if (!(perplexity < (static_cast<double>(n_points) - 1.0) / 3.0))
            throw ValidationError("TsneConfig: perplexity must be < (n_points - 1)/3");
        if (static_cast<double>(n_points) < 3.0 * perplexity)
            throw ValidationError("tsne_embed: n_points must be >= 3 * perplexity");
        if (iterations < early_exaggeration_iters)
            throw ValidationError("TsneConfig: iterations must be >= early_exaggeration_iters");
        if (learning_rate <= 0.0) throw ValidationError("TsneConfig: learning_rate must be positive");
        if (early_exaggeration_factor <= 0.0)
            throw ValidationError("TsneConfig: early_exaggeration_factor must be positive");
    }
};

namespace detail {

constexpr double kAffinityFloor = 1e-12;

/// Conditional Gaussian affinities with per-point bandwidth found by
/// bisection on beta = 1/(2 sigma^2) so that the row entropy matches
/// log2(perplexity) within 1e-5.
inline std::vector<double> conditional_affinities(const DistanceMatrix& d, double perplexity) {
    const std::size_t n = d.n_points;
    std::vector<double> sq(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = d.at(i, j);
            sq[i * n + j] = sq[j * n + i] = dij * dij;
        }

    const double target_entropy = std::log2(perplexity);
    const double tol = 1e-5;
    std::vector<double> p(n * n, 0.0);
    std::vector<double> row(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_lo = -std::numeric_limits<double>::infinity();
        double beta_hi = std::numeric_limits<double>::infinity();
        bool found = false;
        double sum = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * sq[i * n + j]);
                sum += row[j];
            }
            if (sum <= 0.0) sum = std::numeric_limits<double>::min();
            // H = sum_j p log2(1/p) with p = row/sum, expanded to avoid a second pass
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) weighted += beta * sq[i * n + j] * row[j];
            const double entropy = (weighted / sum + std::log(sum)) / std::log(2.0);
            const double diff = entropy - target_entropy;
            if (std::abs(diff) < tol) {
                found = true;
                break;
            }
            if (diff > 0.0) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = std::isinf(beta_lo) ? beta / 2.0 : (beta + beta_lo) / 2.0;
            }
        }
        if (!found)
            throw NumericError("tsne: perplexity bisection failed for point " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
    }
    return p;
}

/// Symmetrize and normalize to a joint distribution summing to 1.
inline std::vector<double> joint_affinities(const std::vector<double>& cond, std::size_t n) {
    std::vector<double> p(n * n, 0.0);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double val = (cond[i * n + j] + cond[j * n + i]) / denom;
            p[i * n + j] = p[j * n + i] = val;
        }
    return p;
}

} // namespace detail

/// KL(P || Q) where Q is the Student-t kernel of the given 2D layout.
/// Both distributions are floored at 1e-12 before the log.
inline double kl_divergence(const std::vector<double>& p_joint, std::span<const Point2> points) {
    const std::size_t n = points.size();
    if (p_joint.size() != n * n) throw SizeError("kl_divergence: P must be n x n");
    double z = 0.0;
    std::vector<double> num(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = points[i].x - points[j].x;
            const double dy = points[i].y - points[j].y;
            const double q = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = num[j * n + i] = q;
            z += 2.0 * q;
        }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double p = std::max(p_joint[i * n + j], detail::kAffinityFloor);
            const double q = std::max(num[i * n + j] / z, detail::kAffinityFloor);
            kl += p_joint[i * n + j] * std::log(p / q);
        }
    return kl;
}

/// Exact (O(n^2)) t-SNE on a precomputed distance matrix.
inline Embedding2D tsne_embed(const DistanceMatrix& d, const TsneConfig& config) {
    const std::size_t n = d.n_points;
    config.validate(n);

    auto p = detail::joint_affinities(detail::conditional_affinities(d, config.perplexity), n);

    Rng rng(config.seed);
    std::vector<Point2> y(n);
    for (auto& pt : y) {
        pt.x = 1e-4 * rng.normal();
        pt.y = 1e-4 * rng.normal();
    }

    std::vector<Point2> grad(n), inc(n, {0.0, 0.0});
    std::vector<Point2> gains(n, {1.0, 1.0});
    std::vector<double> num(n * n, 0.0);

    // exaggerate, then restore after the early phase
    for (auto& v : p) v *= config.early_exaggeration_factor;
    double momentum = config.momentum_initial;
    double kl_after_exaggeration = 0.0;

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y[i].x - y[j].x;
                const double dy = y[i].y - y[j].y;
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = num[j * n + i] = q;
                z += 2.0 * q;
            }

        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = num[i * n + j];
                const double mult = (p[i * n + j] - q / z) * q;
                gx += mult * (y[i].x - y[j].x);
                gy += mult * (y[i].y - y[j].y);
            }
            grad[i] = {4.0 * gx, 4.0 * gy};
        }

        auto sign = [](double v) { return v > 0.0 ? 1 : v < 0.0 ? -1 : 0; };
        auto update_axis = [&](double g, double& gain, double& velocity, double& coord) {
            gain = sign(g) != sign(velocity) ? gain + 0.2 : gain * 0.8;
            if (gain < 0.01) gain = 0.01;
            velocity = momentum * velocity - config.learning_rate * gain * g;
            coord += velocity;
        };
        for (std::size_t i = 0; i < n; ++i) {
            update_axis(grad[i].x, gains[i].x, inc[i].x, y[i].x);
            update_axis(grad[i].y, gains[i].y, inc[i].y, y[i].y);
        }

        Point2 mean{0.0, 0.0};
        for (const auto& pt : y) mean = mean + pt;
        mean = (1.0 / static_cast<double>(n)) * mean;
        for (auto& pt : y) pt = pt - mean;

        if (iter + 1 == config.early_exaggeration_iters) {
            for (auto& v : p) v /= config.early_exaggeration_factor;
            kl_after_exaggeration = kl_divergence(p, y);
        }
        if (iter + 1 == config.momentum_switch_iter) momentum = config.momentum_final;
    }

    Embedding2D out;
    out.method = EmbedMethod::tsne;
    out.points = std::move(y);
    out.diagnostics["kl_final"] = kl_divergence(p, out.points);
    out.diagnostics["kl_after_exaggeration"] = kl_after_exaggeration;
    out.diagnostics["perplexity"] = config.perplexity;
    return out;
}

/// CSV export: one row per embedded point, timestamps aligned by index.
inline std::string embedding_to_csv(const Embedding2D& embedding,
                                    const std::vector<UtcTime>& timestamps) {
    if (timestamps.size() != embedding.points.size())
        throw SizeError("embedding_to_csv: timestamps and points must align");
    std::string out = "index,timestamp,x,y,method\n";
    for (std::size_t i = 0; i < embedding.points.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += timestamps[i].to_iso();
        out += ',';
        out += fmt_double(embedding.points[i].x);
        out += ',';
        out += fmt_double(embedding.points[i].y);
        out += ',';
        out += to_string(embedding.method);
        out += '\n';
    }
    return out;
}

} // namespace spectrack
