#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spectrack/embed.hpp"
#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/geometry.hpp"
#include "spectrack/preprocess.hpp"
#include "spectrack/similarity.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

/// Reference map: early "normal" spectra plus the zero vector O, embedded
/// in 2D and rotated so the ray from O's image to the centroid of the
/// reference images points along the positive x axis.
struct ReferenceMap {
    std::vector<SpectrumVector> ref_vectors; // the early data, O excluded
    std::vector<Point2> coords2d;            // ref images, O's image last
    Point2 o2d{};
    Point2 g2d{};
    std::vector<double> g_hi; // high-dimensional centroid of ref_vectors
    double rotation_applied = 0.0;

    std::size_t dim() const { return ref_vectors.empty() ? 0 : ref_vectors.front().dim(); }

    void validate() const {
        if (ref_vectors.size() < 3)
            throw ValidationError("ReferenceMap: need at least 3 reference vectors");
        if (coords2d.size() != ref_vectors.size() + 1)
            throw ValidationError("ReferenceMap: coords2d must hold one point per reference plus O");
        Point2 mean{0.0, 0.0};
        for (std::size_t i = 0; i < ref_vectors.size(); ++i) mean = mean + coords2d[i];
        mean = (1.0 / static_cast<double>(ref_vectors.size())) * mean;
        const double span = std::max(1.0, dist(mean, o2d));
        if (dist(mean, g2d) > 1e-9 * span)
            throw ValidationError("ReferenceMap: g2d is not the centroid of the reference images");
        const Point2 og = g2d - o2d;
        if (norm(og) > 0.0 && (og.x < 0.0 || std::abs(og.y) > 1e-9 * norm(og)))
            throw ValidationError("ReferenceMap: o2d->g2d ray is not aligned with +x");
    }
};

/// One plotted measurement.
struct TrackedPoint {
    UtcTime timestamp;
    Point2 x2d{};
    double rho = 0.0;
    bool feasible_geometry = true;
};

struct AlertEvent {
    UtcTime timestamp;
    double rho_avg = 0.0;
};

/// Rolling alert bookkeeping. rho values accumulate into non-overlapping
/// blocks of window_size; each full block contributes one rho_avg. The
/// first rho_avg at or above threshold raises an alert, which then
/// latches until reset().
struct AlertState {
    std::size_t window_size = 12;
    double threshold = 2.0;
    std::vector<double> rho_window;
    std::vector<std::pair<UtcTime, double>> rho_avg_history;
    std::vector<AlertEvent> alerts;
    bool latched = false;

    void reset() { latched = false; }

    void validate() const {
        if (window_size == 0) throw ValidationError("AlertState: window_size must be positive");
        if (rho_window.size() > window_size)
            throw ValidationError("AlertState: rho_window exceeds window_size");
    }
};

struct AlertConfig {
    std::size_t window_size = 12;
    double threshold = 2.0;
};

/// Build the reference map from early spectra: append O, embed everything
/// with classical MDS, then rotate about O's image so the centroid of the
/// reference images lies on the positive x axis.
inline ReferenceMap build_reference_map(std::vector<SpectrumVector> reference) {
    if (reference.size() < 3)
        throw SizeError("build_reference_map: need at least 3 reference vectors");
    const std::size_t dim = reference.front().dim();
    if (dim == 0) throw SizeError("build_reference_map: reference vectors must be non-empty");
    for (const auto& v : reference)
        if (v.dim() != dim)
            throw SizeError("build_reference_map: reference vectors must share one dimension");

    const std::size_t n = reference.size();
    std::vector<std::vector<double>> rows;
    rows.reserve(n + 1);
    for (const auto& v : reference) rows.push_back(v.values);
    rows.emplace_back(dim, 0.0); // the zero-data vector O

    auto embedding = mds_embed(distance_matrix(rows));

    ReferenceMap map;
    map.ref_vectors = std::move(reference);
    map.coords2d = std::move(embedding.points);
    map.o2d = map.coords2d.back();

    Point2 g{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) g = g + map.coords2d[i];
    g = (1.0 / static_cast<double>(n)) * g;

    const Point2 og = g - map.o2d;
    double angle = 0.0;
    if (norm(og) > 0.0) angle = -std::atan2(og.y, og.x);
    for (auto& p : map.coords2d) p = rotate_about(p, map.o2d, angle);
    map.rotation_applied = angle;
    map.g2d = rotate_about(g, map.o2d, angle);

    map.g_hi.assign(dim, 0.0);
    for (const auto& v : map.ref_vectors)
        for (std::size_t k = 0; k < dim; ++k) map.g_hi[k] += v.values[k];
    for (double& c : map.g_hi) c /= static_cast<double>(n);
    return map;
}

namespace detail {

inline bool circle_residuals_ok(const Point2& x, const Point2& c1, double r1, const Point2& c2,
                                double r2) {
    const double res1 = std::abs(dist(x, c1) - r1);
    const double res2 = std::abs(dist(x, c2) - r2);
    return res1 <= 1e-6 * std::max(1.0, r1) && res2 <= 1e-6 * std::max(1.0, r2);
}

} // namespace detail

/// Place a new measurement on the map (two-circle construction).
///
/// Z is the nearest reference vector to X in high dimension, Y the one
/// with the largest cosine similarity. x2d preserves the norm of X
/// (circle about o2d) and the distance to Z (circle about z2d); the
/// intersection candidate whose angle at o2d against o2d->y2d is closest
/// to the high-dimensional angle between X and Y wins. When embedding
/// distortion leaves the circles disjoint or nested, the point on the
/// o2d-z2d line minimizing the summed squared circle residuals is used
/// and feasible_geometry is false.
inline TrackedPoint plot_point(const ReferenceMap& map, const SpectrumVector& X) {
    if (map.ref_vectors.empty()) throw SizeError("plot_point: empty reference map");
    if (X.dim() != map.dim()) throw SizeError("plot_point: dimension mismatch with map");

    const std::size_t n = map.ref_vectors.size();

    std::size_t zi = 0;
    double z_dist = distance(X, map.ref_vectors[0]);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = distance(X, map.ref_vectors[i]);
        if (d < z_dist ||
            (d == z_dist && map.ref_vectors[i].timestamp < map.ref_vectors[zi].timestamp)) {
            z_dist = d;
            zi = i;
        }
    }
    const Point2 z2d = map.coords2d[zi];
    const double r1 = X.norm();
    const double r2 = z_dist;

    TrackedPoint out;
    out.timestamp = X.timestamp;

    // point-circle precedence: an exact reference match pins the result
    if (r2 == 0.0) {
        out.x2d = z2d;
        out.feasible_geometry = detail::circle_residuals_ok(out.x2d, map.o2d, r1, z2d, r2);
        return out;
    }
    if (r1 == 0.0) {
        out.x2d = map.o2d;
        out.feasible_geometry = detail::circle_residuals_ok(out.x2d, map.o2d, r1, z2d, r2);
        return out;
    }

    // direction reference Y: largest cosine similarity, zero-norm refs skipped
    std::size_t yi = n;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ref = map.ref_vectors[i];
        double nrm = 0.0, dot_xy = 0.0;
        for (std::size_t k = 0; k < ref.values.size(); ++k) {
            nrm += ref.values[k] * ref.values[k];
            dot_xy += ref.values[k] * X.values[k];
        }
        if (nrm == 0.0) continue;
        const double c = dot_xy / (std::sqrt(nrm) * r1);
        if (c > best_cos ||
            (c == best_cos && yi < n && ref.timestamp < map.ref_vectors[yi].timestamp)) {
            best_cos = c;
            yi = i;
        }
    }
    if (yi == n) throw DegenerateMapError("plot_point: no nonzero reference vector for direction");
    const Point2 y2d = map.coords2d[yi];
    const double target_angle = std::acos(std::clamp(best_cos, -1.0, 1.0));

    const Point2 c1 = map.o2d;
    const Point2 c2 = z2d;
    const double big_d = dist(c1, c2);

    if (big_d == 0.0) {
        if (r1 != r2)
            throw DegenerateMapError("plot_point: coincident circle centers with conflicting radii");
        // every direction solves both circles; take the angle criterion alone
        Point2 ydir = y2d - c1;
        if (norm(ydir) == 0.0)
            throw DegenerateMapError("plot_point: no direction reference at coincident centers");
        ydir = (1.0 / norm(ydir)) * ydir;
        const Point2 cand = c1 + r1 * Point2{std::cos(target_angle) * ydir.x - std::sin(target_angle) * ydir.y,
                                             std::sin(target_angle) * ydir.x + std::cos(target_angle) * ydir.y};
        out.x2d = cand;
        out.feasible_geometry = true;
        return out;
    }

    const Point2 u = (1.0 / big_d) * (c2 - c1);
    const double a = (big_d * big_d + r1 * r1 - r2 * r2) / (2.0 * big_d);
    const double h_sq = r1 * r1 - a * a;

    if (h_sq >= 0.0) {
        const double h = std::sqrt(h_sq);
        const Point2 foot = c1 + a * u;
        const Point2 side = h * perp(u);
        const Point2 cand1 = foot + side;
        const Point2 cand2 = foot - side;

        const Point2 ydir = y2d - c1;
        auto angle_to_y = [&](const Point2& cand) {
            const Point2 dir = cand - c1;
            if (norm(dir) == 0.0 || norm(ydir) == 0.0) return 0.0;
            return angle_between(dir, ydir);
        };
        const double a1 = std::abs(angle_to_y(cand1) - target_angle);
        const double a2 = std::abs(angle_to_y(cand2) - target_angle);
        out.x2d = a1 <= a2 ? cand1 : cand2;
        out.feasible_geometry = true;
        return out;
    }

    // disjoint or nested circles: least-squares compromise on the center line
    auto residual = [&](double t) {
        const double e1 = std::abs(t) - r1;
        const double e2 = std::abs(t - big_d) - r2;
        return e1 * e1 + e2 * e2;
    };
    const double t_between = std::clamp((r1 + big_d - r2) / 2.0, 0.0, big_d);
    const double t_beyond = std::max((r1 + big_d + r2) / 2.0, big_d);
    const double t_before = std::min((big_d - r1 - r2) / 2.0, 0.0);
    double best_t = t_between;
    double best_res = residual(t_between);
    for (double t : {t_beyond, t_before}) {
        const double res = residual(t);
        if (res < best_res) {
            best_res = res;
            best_t = t;
        }
    }
    out.x2d = c1 + best_t * u;
    out.feasible_geometry = false;
    return out;
}

/// Warning factor rho = |g->x| / |g->p| with p the reference image whose
/// offset from g has the largest inner product with g->x.
inline double warning_factor(const ReferenceMap& map, const Point2& x2d) {
    const std::size_t n = map.ref_vectors.size();
    if (n == 0) throw SizeError("warning_factor: empty reference map");

    const Point2 gx = x2d - map.g2d;
    if (gx.x == 0.0 && gx.y == 0.0) return 0.0;

    std::size_t pi = n;
    double best_dot = 0.0, best_norm = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 gp = map.coords2d[i] - map.g2d;
        const double d = dot(gp, gx);
        const double nrm = norm(gp);
        bool take = false;
        if (pi == n || d > best_dot)
            take = true;
        else if (d == best_dot) {
            if (nrm > best_norm)
                take = true;
            else if (nrm == best_norm &&
                     map.ref_vectors[i].timestamp < map.ref_vectors[pi].timestamp)
                take = true;
        }
        if (take) {
            pi = i;
            best_dot = d;
            best_norm = nrm;
        }
    }
    if (best_norm == 0.0)
        throw DegenerateMapError("warning_factor: all reference points coincide with g");
    return norm(gx) / best_norm;
}

/// Fold one rho value into the alert state; returns the alert raised by
/// this value's block, if any.
inline std::optional<AlertEvent> update_alert(AlertState& state, double rho,
                                              const UtcTime& timestamp) {
    state.validate();
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw ValidationError("update_alert: rho must be finite and non-negative");

    state.rho_window.push_back(rho);
    if (state.rho_window.size() < state.window_size) return std::nullopt;

    double sum = 0.0;
    for (double v : state.rho_window) sum += v;
    const double rho_avg = sum / static_cast<double>(state.rho_window.size());
    state.rho_window.clear();
    state.rho_avg_history.emplace_back(timestamp, rho_avg);

    if (!state.latched && rho_avg >= state.threshold) {
        state.latched = true;
        AlertEvent event{timestamp, rho_avg};
        state.alerts.push_back(event);
        return event;
    }
    return std::nullopt;
}

/// Plot, score, and alert over an ordered stream of measurements.
inline std::pair<std::vector<TrackedPoint>, AlertState>
track_stream(const ReferenceMap& map, const std::vector<SpectrumVector>& stream,
             const AlertConfig& config = {}) {
    if (config.window_size == 0)
        throw ValidationError("track_stream: window_size must be positive");

    UtcTime map_latest{};
    bool have_latest = false;
    for (const auto& v : map.ref_vectors) {
        if (!have_latest || map_latest < v.timestamp) {
            map_latest = v.timestamp;
            have_latest = true;
        }
    }

    AlertState state;
    state.window_size = config.window_size;
    state.threshold = config.threshold;

    std::vector<TrackedPoint> tracked;
    tracked.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto& X = stream[i];
        if (have_latest && !(map_latest < X.timestamp))
            throw SequencingError("track_stream: timestamp not later than reference map", i);
        if (i > 0 && !(stream[i - 1].timestamp < X.timestamp))
            throw SequencingError("track_stream: timestamps must be strictly ascending", i);

        TrackedPoint point = plot_point(map, X);
        point.rho = warning_factor(map, point.x2d);
        update_alert(state, point.rho, point.timestamp);
        tracked.push_back(point);
    }
    return {std::move(tracked), std::move(state)};
}

/// CSV artifact: timestamp, x, y, rho, feasible_geometry.
inline std::string tracked_points_to_csv(const std::vector<TrackedPoint>& points) {
    std::string out = "timestamp,x,y,rho,feasible_geometry\n";
    for (const auto& p : points) {
        out += p.timestamp.to_iso();
        out += ',';
        out += fmt_double(p.x2d.x);
        out += ',';
        out += fmt_double(p.x2d.y);
        out += ',';
        out += fmt_double(p.rho);
        out += ',';
        out += p.feasible_geometry ? '1' : '0';
        out += '\n';
    }
    return out;
}

/// CSV artifact: timestamp, rho_avg.
inline std::string rho_avg_history_to_csv(const AlertState& state) {
    std::string out = "timestamp,rho_avg\n";
    for (const auto& [ts, avg] : state.rho_avg_history) {
        out += ts.to_iso();
        out += ',';
        out += fmt_double(avg);
        out += '\n';
    }
    return out;
}

} // namespace spectrack
