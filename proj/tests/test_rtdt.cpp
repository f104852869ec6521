#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spectrack/rtdt.hpp"

using namespace spectrack;

namespace {

SpectrumVector make_vec(std::vector<double> values, std::int64_t epoch) {
    SpectrumVector v;
    v.values = std::move(values);
    v.bin_width = 78.125;
    v.timestamp = UtcTime::from_epoch_seconds(epoch);
    return v;
}

double hi_norm(const SpectrumVector& v) { return v.norm(); }

double hi_dist(const SpectrumVector& a, const SpectrumVector& b) { return distance(a, b); }

/// Orthonormal pair in R^dim used to build exactly planar test data.
struct PlaneBasis {
    std::vector<double> e1, e2;

    explicit PlaneBasis(std::size_t dim) : e1(dim, 0.0), e2(dim, 0.0) {
        e1[0] = 0.6;
        e1[1] = 0.8;
        e2[0] = -0.8;
        e2[1] = 0.6;
    }

    std::vector<double> at(double a, double b) const {
        std::vector<double> v(e1.size(), 0.0);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = a * e1[k] + b * e2[k];
        return v;
    }
};

std::vector<SpectrumVector> planar_refs(const PlaneBasis& basis, std::mt19937_64& rng,
                                        std::size_t count, std::int64_t t0) {
    std::uniform_real_distribution<double> uni(-4.0, 4.0);
    std::vector<SpectrumVector> refs;
    for (std::size_t i = 0; i < count; ++i)
        refs.push_back(make_vec(basis.at(uni(rng), uni(rng)),
                                t0 + static_cast<std::int64_t>(i) * 600));
    return refs;
}

/// Independent re-statement of the rho rule for oracle comparisons.
double rho_oracle(const ReferenceMap& map, Point2 x) {
    const Point2 gx = x - map.g2d;
    if (gx.x == 0.0 && gx.y == 0.0) return 0.0;
    std::size_t best = map.ref_vectors.size();
    double best_dot = 0.0, best_norm = -1.0;
    for (std::size_t i = 0; i < map.ref_vectors.size(); ++i) {
        const Point2 gp = map.coords2d[i] - map.g2d;
        const double d = dot(gp, gx);
        const double nrm = norm(gp);
        bool take = best == map.ref_vectors.size() || d > best_dot;
        if (!take && d == best_dot) {
            take = nrm > best_norm ||
                   (nrm == best_norm &&
                    map.ref_vectors[i].timestamp < map.ref_vectors[best].timestamp);
        }
        if (take) {
            best = i;
            best_dot = d;
            best_norm = nrm;
        }
    }
    REQUIRE(best_norm > 0.0);
    return norm(gx) / best_norm;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

/// Map with hand-placed 2D geometry; only fields used by warning_factor
/// are meaningful.
ReferenceMap hand_map(const std::vector<Point2>& refs, Point2 g) {
    ReferenceMap map;
    for (std::size_t i = 0; i < refs.size(); ++i)
        map.ref_vectors.push_back(make_vec({1.0, 0.0}, static_cast<std::int64_t>(i)));
    map.coords2d = refs;
    map.coords2d.push_back({0.0, 0.0});
    map.g2d = g;
    map.g_hi = {0.0, 0.0};
    return map;
}

} // namespace

TEST_CASE("reference map has one coordinate per reference plus origin") {
    std::mt19937_64 rng(60);
    std::uniform_real_distribution<double> uni(0.5, 2.0);
    std::vector<SpectrumVector> refs;
    for (int i = 0; i < 288; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = uni(rng);
        refs.push_back(make_vec(std::move(v), 1000 + i * 60));
    }
    auto map = build_reference_map(refs);
    CHECK(map.ref_vectors.size() == 288);
    CHECK(map.coords2d.size() == 289);
    CHECK(map.o2d == map.coords2d.back());

    // centroid sits on the +x side of o2d after the rotation
    Point2 g{0.0, 0.0};
    for (std::size_t i = 0; i < 288; ++i) g = g + map.coords2d[i];
    g = (1.0 / 288.0) * g;
    CHECK(std::abs(g.y - map.o2d.y) <= 1e-9 * std::max(1.0, std::abs(g.x)));
    CHECK(g.x - map.o2d.x >= -1e-9);
    CHECK(dist(g, map.g2d) <= 1e-9);
    CHECK_NOTHROW(map.validate());
}

TEST_CASE("identical references coincide at the right distance from origin") {
    std::vector<SpectrumVector> refs;
    for (int i = 0; i < 3; ++i) refs.push_back(make_vec({3.0, 4.0, 0.0, 0.0}, i * 10));
    auto map = build_reference_map(refs);
    for (int i = 1; i < 3; ++i) CHECK(dist(map.coords2d[0], map.coords2d[i]) <= 1e-6);
    for (int i = 0; i < 3; ++i)
        CHECK(dist(map.coords2d[i], map.o2d) == Catch::Approx(5.0).margin(1e-6));
}

TEST_CASE("planar references embed with exact pairwise distances") {
    PlaneBasis basis(16);
    std::mt19937_64 rng(61);
    auto refs = planar_refs(basis, rng, 20, 5000);
    auto map = build_reference_map(refs);

    for (std::size_t i = 0; i < refs.size(); ++i) {
        CHECK(dist(map.coords2d[i], map.o2d) ==
              Catch::Approx(hi_norm(refs[i])).margin(1e-6));
        for (std::size_t j = i + 1; j < refs.size(); ++j)
            CHECK(dist(map.coords2d[i], map.coords2d[j]) ==
                  Catch::Approx(hi_dist(refs[i], refs[j])).margin(1e-6));
    }
}

TEST_CASE("map validation rejects corrupted geometry") {
    PlaneBasis basis(8);
    std::mt19937_64 rng(62);
    auto map = build_reference_map(planar_refs(basis, rng, 10, 0));
    CHECK_NOTHROW(map.validate());

    auto broken = map;
    broken.g2d.y += 1.0;
    CHECK_THROWS_AS(broken.validate(), ValidationError);

    broken = map;
    broken.coords2d.pop_back();
    CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("build_reference_map rejects degenerate input") {
    CHECK_THROWS_AS(build_reference_map({}), SizeError);
    std::vector<SpectrumVector> two{make_vec({1.0}, 0), make_vec({2.0}, 1)};
    CHECK_THROWS_AS(build_reference_map(two), SizeError);
}

TEST_CASE("replaying a reference lands exactly on its map position") {
    PlaneBasis basis(12);
    std::mt19937_64 rng(63);
    auto refs = planar_refs(basis, rng, 15, 0);
    auto map = build_reference_map(refs);

    for (std::size_t k : {std::size_t{0}, std::size_t{7}, std::size_t{14}}) {
        auto tracked = plot_point(map, refs[k]);
        CHECK(tracked.x2d == map.coords2d[k]);
        CHECK(tracked.feasible_geometry);
        CHECK(tracked.timestamp == refs[k].timestamp);
    }
}

TEST_CASE("the zero vector plots onto the origin image") {
    PlaneBasis basis(12);
    std::mt19937_64 rng(64);
    auto map = build_reference_map(planar_refs(basis, rng, 12, 0));
    auto tracked = plot_point(map, make_vec(std::vector<double>(12, 0.0), 99999));
    CHECK(tracked.x2d == map.o2d);
    CHECK(tracked.feasible_geometry);
}

TEST_CASE("planar measurements satisfy both circle constraints") {
    PlaneBasis basis(16);
    std::mt19937_64 rng(65);
    auto refs = planar_refs(basis, rng, 20, 0);
    auto map = build_reference_map(refs);

    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto X = make_vec(basis.at(uni(rng), uni(rng)), 100000 + trial);
        auto tracked = plot_point(map, X);
        CHECK(tracked.feasible_geometry);

        std::size_t zi = 0;
        for (std::size_t i = 1; i < refs.size(); ++i)
            if (hi_dist(X, refs[i]) < hi_dist(X, refs[zi])) zi = i;

        const double r1 = hi_norm(X);
        const double r2 = hi_dist(X, refs[zi]);
        CHECK(dist(tracked.x2d, map.o2d) ==
              Catch::Approx(r1).margin(1e-6 * std::max(1.0, r1)));
        CHECK(dist(tracked.x2d, map.coords2d[zi]) ==
              Catch::Approx(r2).margin(1e-6 * std::max(1.0, r2)));
    }
}

TEST_CASE("plotting is deterministic across identically built maps") {
    PlaneBasis basis(10);
    std::mt19937_64 rng(66);
    auto refs = planar_refs(basis, rng, 12, 0);
    auto map_a = build_reference_map(refs);
    auto map_b = build_reference_map(refs);

    auto X = make_vec(basis.at(1.25, -2.5), 777777);
    auto a = plot_point(map_a, X);
    auto b = plot_point(map_b, X);
    CHECK(a.x2d == b.x2d);
    CHECK(a.feasible_geometry == b.feasible_geometry);
}

TEST_CASE("plot_point rejects bad input") {
    PlaneBasis basis(8);
    std::mt19937_64 rng(67);
    auto map = build_reference_map(planar_refs(basis, rng, 8, 0));
    CHECK_THROWS_AS(plot_point(map, make_vec({1.0, 2.0}, 0)), SizeError);
    CHECK_THROWS_AS(plot_point(ReferenceMap{}, make_vec({1.0}, 0)), SizeError);
}

TEST_CASE("warning factor is zero at the centroid") {
    PlaneBasis basis(8);
    std::mt19937_64 rng(68);
    auto map = build_reference_map(planar_refs(basis, rng, 10, 0));
    CHECK(warning_factor(map, map.g2d) == 0.0);
}

TEST_CASE("warning factor on hand-placed geometry") {
    auto map = hand_map({{2.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -2.0}}, {0.0, 0.0});

    CHECK(warning_factor(map, {2.0, 0.0}) == 1.0);
    CHECK(warning_factor(map, {4.0, 0.0}) == 2.0);
    CHECK(warning_factor(map, {0.0, 3.0}) == 3.0);
    CHECK(warning_factor(map, {-3.0, 0.0}) == 3.0);
    CHECK(warning_factor(map, {0.0, -1.0}) == 0.5);
}

TEST_CASE("warning factor tie on projection prefers the farther reference") {
    auto map = hand_map({{1.0, 1.0}, {2.0, 2.0}}, {0.0, 0.0});
    // both references project to zero along (1,-1)
    CHECK(warning_factor(map, {1.0, -1.0}) == 0.5);
}

TEST_CASE("warning factor matches the oracle on random maps") {
    std::mt19937_64 rng(69);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2> refs(8);
        for (auto& p : refs) p = {uni(rng), uni(rng)};
        const Point2 g{uni(rng), uni(rng)};
        auto map = hand_map(refs, g);
        const Point2 x{uni(rng), uni(rng)};
        CHECK(warning_factor(map, x) == rho_oracle(map, x));
    }
}

TEST_CASE("warning factor is invariant under rotation about the centroid") {
    std::mt19937_64 rng(70);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    std::vector<Point2> refs(8);
    for (auto& p : refs) p = {uni(rng), uni(rng)};
    const Point2 g{0.5, -0.25};
    const Point2 x{2.0, 1.0};
    auto map = hand_map(refs, g);
    const double base = warning_factor(map, x);

    for (double angle : {0.3, 1.1, 2.7, -0.9}) {
        std::vector<Point2> rotated;
        for (const auto& p : refs) rotated.push_back(rotate_about(p, g, angle));
        auto rotated_map = hand_map(rotated, g);
        CHECK(warning_factor(rotated_map, rotate_about(x, g, angle)) ==
              Catch::Approx(base).margin(1e-9));
    }
}

TEST_CASE("warning factor with all references at the centroid is degenerate") {
    auto map = hand_map({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}, {1.0, 1.0});
    CHECK_THROWS_AS(warning_factor(map, {2.0, 2.0}), DegenerateMapError);
}

TEST_CASE("alert blocks average exactly and respect the threshold") {
    AlertState state;
    const auto ts = [](int i) { return UtcTime::from_epoch_seconds(1000 + i); };

    for (int i = 0; i < 11; ++i) {
        CHECK_FALSE(update_alert(state, 1.0, ts(i)).has_value());
        CHECK(state.rho_avg_history.empty());
    }
    auto ev = update_alert(state, 1.0, ts(11));
    CHECK_FALSE(ev.has_value());
    REQUIRE(state.rho_avg_history.size() == 1);
    CHECK(state.rho_avg_history[0].second == 1.0);
    CHECK(state.rho_window.empty());
    CHECK(state.alerts.empty());

    for (int i = 0; i < 11; ++i) update_alert(state, 2.5, ts(100 + i));
    auto raised = update_alert(state, 2.5, ts(111));
    REQUIRE(raised.has_value());
    CHECK(raised->rho_avg == 2.5);
    CHECK(raised->timestamp == ts(111));
    CHECK(state.latched);
    REQUIRE(state.alerts.size() == 1);
}

TEST_CASE("exactly at threshold raises the alert") {
    AlertState state;
    state.window_size = 3;
    state.threshold = 2.0;
    update_alert(state, 1.0, UtcTime::from_epoch_seconds(1));
    update_alert(state, 2.0, UtcTime::from_epoch_seconds(2));
    auto ev = update_alert(state, 3.0, UtcTime::from_epoch_seconds(3));
    REQUIRE(ev.has_value());
    CHECK(ev->rho_avg == 2.0);
}

TEST_CASE("the alert latches until reset") {
    AlertState state;
    state.window_size = 2;
    const auto ts = [](int i) { return UtcTime::from_epoch_seconds(i); };

    update_alert(state, 5.0, ts(0));
    REQUIRE(update_alert(state, 5.0, ts(1)).has_value());

    update_alert(state, 5.0, ts(2));
    CHECK_FALSE(update_alert(state, 5.0, ts(3)).has_value());
    CHECK(state.rho_avg_history.size() == 2);
    CHECK(state.alerts.size() == 1);

    state.reset();
    update_alert(state, 5.0, ts(4));
    REQUIRE(update_alert(state, 5.0, ts(5)).has_value());
    CHECK(state.alerts.size() == 2);
}

TEST_CASE("update_alert validates its inputs") {
    AlertState state;
    CHECK_THROWS_AS(update_alert(state, -0.5, UtcTime{}), ValidationError);
    CHECK_THROWS_AS(update_alert(state, std::nan(""), UtcTime{}), ValidationError);

    AlertState zero;
    zero.window_size = 0;
    CHECK_THROWS_AS(update_alert(zero, 1.0, UtcTime{}), ValidationError);
}

TEST_CASE("track_stream on an empty stream yields nothing") {
    PlaneBasis basis(8);
    std::mt19937_64 rng(71);
    auto map = build_reference_map(planar_refs(basis, rng, 8, 0));
    auto [tracked, state] = track_stream(map, {});
    CHECK(tracked.empty());
    CHECK(state.alerts.empty());
    CHECK(state.rho_avg_history.empty());
}

TEST_CASE("replayed references score at most one") {
    PlaneBasis basis(16);
    std::mt19937_64 rng(72);
    auto refs = planar_refs(basis, rng, 30, 0);
    auto map = build_reference_map(refs);

    std::vector<SpectrumVector> stream;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        auto v = refs[i];
        v.timestamp = UtcTime::from_epoch_seconds(1000000 + static_cast<std::int64_t>(i));
        stream.push_back(std::move(v));
    }
    auto [tracked, state] = track_stream(map, stream);
    REQUIRE(tracked.size() == 30);
    for (const auto& p : tracked) CHECK(p.rho <= 1.0 + 1e-9);
    CHECK(state.alerts.empty());
}

TEST_CASE("a drifting stream raises exactly one alert in the faulty block") {
    PlaneBasis basis(16);
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    std::vector<SpectrumVector> refs;
    for (int i = 0; i < 24; ++i)
        refs.push_back(make_vec(basis.at(4.0 + uni(rng), uni(rng)), i * 600));
    auto map = build_reference_map(refs);

    // first block hovers near the references, second walks away
    std::vector<SpectrumVector> stream;
    for (int i = 0; i < 12; ++i)
        stream.push_back(make_vec(basis.at(4.0 + 0.5 * uni(rng), 0.5 * uni(rng)),
                                  100000 + i * 600));
    for (int i = 0; i < 12; ++i)
        stream.push_back(make_vec(basis.at(4.0 + 3.0 * (i + 1), 0.0), 200000 + i * 600));

    AlertConfig cfg;
    cfg.window_size = 12;
    cfg.threshold = 2.0;
    auto [tracked, state] = track_stream(map, stream, cfg);

    REQUIRE(tracked.size() == 24);
    REQUIRE(state.rho_avg_history.size() == 2);
    REQUIRE(state.alerts.size() == 1);
    CHECK(state.alerts[0].timestamp == stream[23].timestamp);
    CHECK(state.rho_avg_history[0].second < 2.0);
    CHECK(state.rho_avg_history[1].second >= 2.0);

    // block averages equal the brute-force chunk means
    for (std::size_t block = 0; block < 2; ++block) {
        double sum = 0.0;
        for (std::size_t i = 0; i < 12; ++i) sum += tracked[block * 12 + i].rho;
        CHECK(state.rho_avg_history[block].second == Catch::Approx(sum / 12.0).margin(1e-12));
    }
}

TEST_CASE("track_stream enforces time ordering") {
    PlaneBasis basis(8);
    std::mt19937_64 rng(74);
    auto refs = planar_refs(basis, rng, 8, 10000);
    auto map = build_reference_map(refs);

    // not later than the newest reference
    std::vector<SpectrumVector> stale{make_vec(basis.at(1.0, 1.0), 10000)};
    try {
        track_stream(map, stale);
        FAIL("expected SequencingError");
    } catch (const SequencingError& e) {
        CHECK(e.index() == 0);
    }

    // non-ascending inside the stream
    std::vector<SpectrumVector> jumbled{make_vec(basis.at(1.0, 0.0), 200000),
                                        make_vec(basis.at(0.0, 1.0), 200300),
                                        make_vec(basis.at(1.0, 1.0), 200300)};
    try {
        track_stream(map, jumbled);
        FAIL("expected SequencingError");
    } catch (const SequencingError& e) {
        CHECK(e.index() == 2);
    }
}

TEST_CASE("tracking artifacts serialize with stable headers") {
    std::vector<TrackedPoint> pts;
    TrackedPoint p;
    p.timestamp = UtcTime::from_epoch_seconds(1076687559);
    p.x2d = {1.5, -2.25};
    p.rho = 0.75;
    p.feasible_geometry = false;
    pts.push_back(p);

    const auto csv = tracked_points_to_csv(pts);
    auto lines = lines_of(csv);
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "timestamp,x,y,rho,feasible_geometry");
    CHECK(lines[1] == "2004-02-13T15:52:39,1.5,-2.25,0.75,0");

    AlertState state;
    state.rho_avg_history.emplace_back(p.timestamp, 2.5);
    auto rlines = lines_of(rho_avg_history_to_csv(state));
    REQUIRE(rlines.size() >= 2);
    CHECK(rlines[0] == "timestamp,rho_avg");
    CHECK(rlines[1] == "2004-02-13T15:52:39,2.5");
}
