#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/preprocess.hpp"

namespace spectrack {

/// Inner-product form of the Euclidean distance:
/// sqrt(<a,a> + <b,b> - 2<a,b>), radicand clamped at zero so floating
/// cancellation can never produce a NaN for near-identical vectors.
inline double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw SizeError("distance: dimension mismatch " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa += a[i] * a[i];
        bb += b[i] * b[i];
        ab += a[i] * b[i];
    }
    double radicand = aa + bb - 2.0 * ab;
    return std::sqrt(radicand > 0.0 ? radicand : 0.0);
}

inline double distance(const SpectrumVector& a, const SpectrumVector& b) {
    return distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

/// Condensed upper-triangular pairwise distances: entry (i,j), i<j, lives
/// at i*(2n-i-1)/2 + (j-i-1). Symmetry and the zero diagonal hold by
/// representation.
struct DistanceMatrix {
    std::size_t n_points = 0;
    std::vector<double> condensed;

    static std::size_t condensed_size(std::size_t n) { return n * (n - 1) / 2; }

    std::size_t index(std::size_t i, std::size_t j) const {
        if (i == j || i >= n_points || j >= n_points)
            throw SizeError("DistanceMatrix: bad index pair");
        if (i > j) std::swap(i, j);
        return i * (2 * n_points - i - 1) / 2 + (j - i - 1);
    }

    double at(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return condensed[index(i, j)];
    }

    void validate() const {
        if (condensed.size() != condensed_size(n_points))
            throw SizeError("DistanceMatrix: condensed size mismatch");
        for (double d : condensed)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw ValidationError("DistanceMatrix: negative or non-finite entry");
    }
};

template <typename Rows>
DistanceMatrix distance_matrix_of_rows(const Rows& rows) {
    const std::size_t n = rows.size();
    if (n < 2) throw SizeError("distance_matrix: need at least 2 vectors");
    const std::size_t dim = rows[0].size();
    for (std::size_t i = 1; i < n; ++i)
        if (rows[i].size() != dim) throw SizeError("distance_matrix: mixed dimensions");
    DistanceMatrix m;
    m.n_points = n;
    m.condensed.resize(DistanceMatrix::condensed_size(n));
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m.condensed[k++] = distance(std::span<const double>(rows[i].data(), dim),
                                        std::span<const double>(rows[j].data(), dim));
    return m;
}

inline DistanceMatrix distance_matrix(const std::vector<SpectrumVector>& vectors) {
    const std::size_t n = vectors.size();
    if (n < 2) throw SizeError("distance_matrix: need at least 2 vectors");
    std::vector<const std::vector<double>*> rows;
    rows.reserve(n);
    for (const auto& v : vectors) rows.push_back(&v.values);
    struct View {
        const std::vector<const std::vector<double>*>& p;
        std::size_t size() const { return p.size(); }
        const std::vector<double>& operator[](std::size_t i) const { return *p[i]; }
    };
    return distance_matrix_of_rows(View{rows});
}

inline DistanceMatrix distance_matrix(const std::vector<std::vector<double>>& rows) {
    return distance_matrix_of_rows(rows);
}

/// CSV artifact: "n_points,<n>" header, then one condensed entry per line.
inline std::string distance_matrix_to_csv(const DistanceMatrix& m) {
    std::string out = "n_points," + std::to_string(m.n_points) + "\n";
    for (double d : m.condensed) {
        out += fmt_double(d);
        out += '\n';
    }
    return out;
}

inline DistanceMatrix distance_matrix_from_csv(const std::string& text) {
    DistanceMatrix m;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (eol == std::string::npos ? text.size() : eol) - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            auto cells = split_csv_line(line);
            if (cells.size() != 2 || cells[0] != "n_points")
                throw FormatError("distance csv: missing n_points header");
            m.n_points = std::stoul(std::string(cells[1]));
            m.condensed.reserve(DistanceMatrix::condensed_size(m.n_points));
            continue;
        }
        double d = 0.0;
        if (!parse_double(line, d)) throw ParseError("distance csv: bad value", line_no);
        m.condensed.push_back(d);
    }
    m.validate();
    return m;
}

} // namespace spectrack
