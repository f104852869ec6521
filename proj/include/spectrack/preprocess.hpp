#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "spectrack/errors.hpp"
#include "spectrack/fft.hpp"
#include "spectrack/format.hpp"
#include "spectrack/ingest.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

enum class WindowKind { hann, none };

/// Settings for segment -> spectrum-vector conversion.
struct PreprocessConfig {
    std::size_t segment_len = 20480;
    std::size_t transform_len = 32768; // power of two >= segment_len
    std::size_t smoothing_block = 128; // divides transform_len/2
    WindowKind window = WindowKind::hann;

    void validate() const {
        if (segment_len < 2) throw ValidationError("PreprocessConfig: segment_len must be >= 2");
        if (!is_power_of_two(transform_len) || transform_len < segment_len)
            throw ValidationError(
                "PreprocessConfig: transform_len must be a power of two >= segment_len");
        if (smoothing_block < 1 || (transform_len / 2) % smoothing_block != 0)
            throw ValidationError(
                "PreprocessConfig: smoothing_block must divide the positive-bin count");
    }

    std::size_t n_dims() const { return transform_len / (2 * smoothing_block); }
};

/// Smoothed magnitude spectrum of one segment; the high-dimensional
/// feature vector of the pipeline.
struct SpectrumVector {
    std::vector<double> values; // all >= 0, finite
    double bin_width = 0.0;     // Hz per smoothed bin
    UtcTime timestamp;
    std::string source_id;

    std::size_t dim() const { return values.size(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

/// w[k] = x[k] * 0.5 * (1 - cos(2 pi k / (L-1)))
inline std::vector<double> hann_window(std::span<const double> segment) {
    const std::size_t len = segment.size();
    if (len < 2) throw SizeError("hann_window: need at least 2 samples");
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    std::vector<double> out(len);
    const double denom = static_cast<double>(len - 1);
    for (std::size_t k = 0; k < len; ++k)
        out[k] = segment[k] * 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(k) / denom));
    return out;
}

/// Zero-pad to transform_len, FFT, return magnitudes of the positive
/// bins 0 .. transform_len/2 - 1 (DC in, Nyquist out).
inline std::vector<double> dft_magnitude(std::span<const double> segment,
                                         const PreprocessConfig& config) {
    config.validate();
    if (segment.size() > config.transform_len)
        throw SizeError("dft_magnitude: segment longer than transform_len");
    std::vector<std::complex<double>> buf(config.transform_len, {0.0, 0.0});
    for (std::size_t i = 0; i < segment.size(); ++i) buf[i] = {segment[i], 0.0};
    fft_inplace(buf);
    std::vector<double> mag(config.transform_len / 2);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
    return mag;
}

/// Block means: out[j] = mean(spectrum[j*block .. (j+1)*block - 1]).
inline std::vector<double> smooth(std::span<const double> spectrum, std::size_t block) {
    if (block == 0 || spectrum.size() % block != 0)
        throw SizeError("smooth: block must divide the spectrum length");
    std::vector<double> out(spectrum.size() / block);
    for (std::size_t j = 0; j < out.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < block; ++i) acc += spectrum[j * block + i];
        out[j] = acc / static_cast<double>(block);
    }
    return out;
}

/// window -> dft_magnitude -> smooth on one channel of one recording.
inline SpectrumVector preprocess_recording(const RawRecording& rec, std::size_t channel,
                                           const PreprocessConfig& config) {
    config.validate();
    if (channel >= rec.channels.size())
        throw SizeError("preprocess_recording: channel " + std::to_string(channel) +
                        " out of range (have " + std::to_string(rec.channels.size()) + ")");
    const auto& samples = rec.channels[channel];
    if (samples.size() != config.segment_len)
        throw SizeError("preprocess_recording: channel length " + std::to_string(samples.size()) +
                        " != segment_len " + std::to_string(config.segment_len));

    std::vector<double> windowed;
    std::span<const double> input(samples);
    if (config.window == WindowKind::hann) {
        windowed = hann_window(input);
        input = windowed;
    }
    SpectrumVector out;
    out.values = smooth(dft_magnitude(input, config), config.smoothing_block);
    out.bin_width =
        rec.sample_rate / static_cast<double>(config.transform_len) *
        static_cast<double>(config.smoothing_block);
    out.timestamp = rec.timestamp;
    out.source_id = rec.source_id;
    return out;
}

/// Smoothed bin index that contains a given frequency.
inline std::size_t bin_index_of_frequency(double freq_hz, const PreprocessConfig& config,
                                          double sample_rate) {
    const double raw_width = sample_rate / static_cast<double>(config.transform_len);
    auto raw_bin = static_cast<std::size_t>(std::llround(freq_hz / raw_width));
    std::size_t j = raw_bin / config.smoothing_block;
    return j < config.n_dims() ? j : config.n_dims() - 1;
}

/// CSV batch export: header with bin centers in Hz, one vector per row,
/// timestamp and source_id leading.
inline std::string spectra_to_csv(const std::vector<SpectrumVector>& vectors) {
    if (vectors.empty()) throw SizeError("spectra_to_csv: no vectors");
    std::string out = "timestamp,source_id";
    const auto& first = vectors.front();
    for (std::size_t j = 0; j < first.dim(); ++j)
        out += ',' + fmt_double((static_cast<double>(j) + 0.5) * first.bin_width);
    out += '\n';
    for (const auto& v : vectors) {
        if (v.dim() != first.dim()) throw SizeError("spectra_to_csv: mixed dimensions");
        out += v.timestamp.to_iso();
        out += ',';
        out += v.source_id;
        for (double x : v.values) {
            out += ',';
            out += fmt_double(x);
        }
        out += '\n';
    }
    return out;
}

inline std::vector<SpectrumVector> spectra_from_csv(const std::string& text) {
    std::vector<SpectrumVector> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    double bin_width = 0.0;
    std::size_t dims = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (eol == std::string::npos ? text.size() : eol) - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (line_no == 1) {
            if (cells.size() < 3) throw FormatError("spectra csv: header too short");
            dims = cells.size() - 2;
            double c0 = 0.0, c1 = 0.0;
            if (!parse_double(cells[2], c0))
                throw ParseError("spectra csv: bad header center", line_no);
            if (dims >= 2 && parse_double(cells[3], c1))
                bin_width = c1 - c0;
            else
                bin_width = 2.0 * c0;
            continue;
        }
        if (cells.size() != dims + 2)
            throw FormatError("spectra csv: row " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(dims + 2));
        SpectrumVector v;
        auto ts = UtcTime::parse_iso(std::string(cells[0]));
        if (!ts) throw ParseError("spectra csv: bad timestamp", line_no);
        v.timestamp = *ts;
        v.source_id = std::string(cells[1]);
        v.bin_width = bin_width;
        v.values.resize(dims);
        for (std::size_t j = 0; j < dims; ++j)
            if (!parse_double(cells[j + 2], v.values[j]))
                throw ParseError("spectra csv: bad value", line_no);
        out.push_back(std::move(v));
    }
    if (line_no == 0) throw FormatError("spectra csv: empty input");
    return out;
}

} // namespace spectrack
