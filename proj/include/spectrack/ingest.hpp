#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/rng.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

/// One timestamped multi-channel time-domain measurement.
struct RawRecording {
    UtcTime timestamp;
    double sample_rate = 0.0;
    std::vector<std::vector<double>> channels;
    std::string source_id;

    std::size_t n_samples() const { return channels.empty() ? 0 : channels.front().size(); }

    void validate() const {
        if (sample_rate <= 0.0) throw ValidationError("RawRecording: sample_rate must be > 0");
        if (channels.empty()) throw ValidationError("RawRecording: no channels");
        const std::size_t len = channels.front().size();
        if (len < 1) throw ValidationError("RawRecording: empty channel");
        for (const auto& ch : channels) {
            if (ch.size() != len)
                throw ValidationError("RawRecording: channels have unequal length");
            for (double v : ch)
                if (!std::isfinite(v)) throw ValidationError("RawRecording: non-finite sample");
        }
    }
};

/// One test campaign: recordings in strict time order plus source metadata.
struct RecordingSet {
    std::vector<RawRecording> recordings;
    std::map<int, std::string> manifest; // channel index -> bearing label

    void validate() const {
        for (std::size_t i = 0; i < recordings.size(); ++i) {
            recordings[i].validate();
            if (i > 0) {
                if (!(recordings[i - 1].timestamp < recordings[i].timestamp))
                    throw ValidationError("RecordingSet: timestamps not strictly increasing at " +
                                          std::to_string(i));
                if (recordings[i].sample_rate != recordings.front().sample_rate)
                    throw ValidationError("RecordingSet: mixed sample rates");
                if (recordings[i].channels.size() != recordings.front().channels.size())
                    throw ValidationError("RecordingSet: mixed channel counts");
            }
        }
    }
};

/// Parse one IMS-format file: ASCII, rows = samples, columns = channels,
/// whitespace-delimited. The timestamp is NOT in the content; callers set
/// it from the file name (see enumerate_recordings).
inline RawRecording parse_ims_file(std::string_view text,
                                   std::optional<std::size_t> expected_channels = std::nullopt) {
    RawRecording rec;
    std::size_t n_cols = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<double> row;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        row.clear();
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            if (i == start) break;
            double v = 0.0;
            if (!parse_double(line.substr(start, i - start), v) || !std::isfinite(v))
                throw ParseError("malformed number '" + std::string(line.substr(start, i - start)) +
                                     "' at line " + std::to_string(line_no),
                                 line_no);
            row.push_back(v);
        }
        if (row.empty()) continue; // blank line

        if (n_cols == 0) {
            n_cols = row.size();
            rec.channels.assign(n_cols, {});
        } else if (row.size() != n_cols) {
            throw FormatError("inconsistent column count at line " + std::to_string(line_no) +
                              ": expected " + std::to_string(n_cols) + ", got " +
                              std::to_string(row.size()));
        }
        for (std::size_t c = 0; c < n_cols; ++c) rec.channels[c].push_back(row[c]);
    }
    if (n_cols == 0) throw FormatError("empty input: no sample rows");
    if (expected_channels && *expected_channels != n_cols)
        throw FormatError("expected " + std::to_string(*expected_channels) + " channels, got " +
                          std::to_string(n_cols));
    return rec;
}

/// Serialize back to the IMS text layout (tab-separated, 6 decimals).
/// parse_ims_file(serialize_ims(r)) reproduces samples bit-exactly when
/// they sit on the 1e-6 grid, which synth_run_to_failure guarantees.
inline std::string serialize_ims(const RawRecording& rec) {
    std::string out;
    const std::size_t len = rec.n_samples();
    out.reserve(len * rec.channels.size() * 12);
    for (std::size_t s = 0; s < len; ++s) {
        for (std::size_t c = 0; c < rec.channels.size(); ++c) {
            if (c) out += '\t';
            out += fmt_fixed(rec.channels[c][s], 6);
        }
        out += '\n';
    }
    return out;
}

struct EnumeratedRecordings {
    std::vector<std::pair<UtcTime, std::string>> ordered; // strictly ascending
    std::vector<std::string> rejects;                     // names that did not parse
};

/// Order file names of the pattern yyyy.MM.dd.HH.mm.ss by their encoded
/// timestamp. Unparseable names are collected, not dropped silently.
inline EnumeratedRecordings enumerate_recordings(const std::vector<std::string>& file_names) {
    EnumeratedRecordings out;
    for (const auto& name : file_names) {
        if (auto t = UtcTime::parse_dotted(name))
            out.ordered.emplace_back(*t, name);
        else
            out.rejects.push_back(name);
    }
    std::stable_sort(out.ordered.begin(), out.ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < out.ordered.size(); ++i)
        if (out.ordered[i - 1].first == out.ordered[i].first)
            throw FormatError("duplicate timestamp " + out.ordered[i].first.to_dotted() +
                              " (ordering would be ambiguous)");
    return out;
}

/// Generator settings for a deterministic synthetic run-to-failure campaign.
/// Stages: stage_boundaries[k] is the first recording index of stage k+1,
/// so boundaries [a,b,c] split [0,n) into healthy | degradation-1 |
/// degradation-2 | failure.
struct SynthConfig {
    std::uint64_t seed = 1;
    double sample_rate = 8192.0;
    std::size_t segment_len = 2048;
    std::size_t n_recordings = 120;
    std::vector<std::size_t> stage_boundaries = {48, 72, 96};
    double shaft_freq = 60.0;
    double fault_freq = 300.0;
    std::vector<double> fault_gain_per_stage = {0.0, 0.6, 1.5, 4.0};
    double noise_floor = 0.1;
    double amp_jitter = 0.1; // per-recording spread of the shaft-tone amplitude
    std::int64_t interval_seconds = 600;

    std::vector<std::string> violations() const {
        std::vector<std::string> bad;
        if (sample_rate <= 0.0) bad.push_back("sample_rate");
        if (segment_len < 2) bad.push_back("segment_len");
        if (n_recordings < 1) bad.push_back("n_recordings");
        bool increasing = true;
        for (std::size_t i = 1; i < stage_boundaries.size(); ++i)
            if (stage_boundaries[i] <= stage_boundaries[i - 1]) increasing = false;
        if (!increasing || (!stage_boundaries.empty() && stage_boundaries.back() >= n_recordings))
            bad.push_back("stage_boundaries");
        if (fault_gain_per_stage.size() != stage_boundaries.size() + 1)
            bad.push_back("fault_gain_per_stage");
        bool gain_ok = true;
        for (std::size_t i = 0; i < fault_gain_per_stage.size(); ++i) {
            if (fault_gain_per_stage[i] < 0.0) gain_ok = false;
            if (i > 0 && fault_gain_per_stage[i] < fault_gain_per_stage[i - 1]) gain_ok = false;
        }
        if (!gain_ok && fault_gain_per_stage.size() == stage_boundaries.size() + 1)
            bad.push_back("fault_gain_per_stage");
        if (noise_floor < 0.0) bad.push_back("noise_floor");
        if (amp_jitter < 0.0) bad.push_back("amp_jitter");
        if (shaft_freq <= 0.0 || shaft_freq >= sample_rate / 2.0) bad.push_back("shaft_freq");
        if (fault_freq <= 0.0 || fault_freq >= sample_rate / 2.0) bad.push_back("fault_freq");
        if (interval_seconds < 1) bad.push_back("interval_seconds");
        return bad;
    }

    void validate() const {
        auto bad = violations();
        if (!bad.empty()) {
            std::string msg = "invalid SynthConfig:";
            for (const auto& f : bad) msg += " " + f;
            throw ValidationError(msg);
        }
    }

    std::size_t stage_of(std::size_t rec_index) const {
        std::size_t s = 0;
        for (std::size_t b : stage_boundaries)
            if (rec_index >= b) ++s;
        return s;
    }
};

namespace detail {

// Snap to the 1e-6 grid so the serialized text round-trips bit-exactly.
inline double quantize_sample(double v) { return std::round(v * 1e6) / 1e6; }

inline RawRecording synth_recording(const SynthConfig& cfg, std::size_t index) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const std::size_t stage = cfg.stage_of(index);
    const double gain = cfg.fault_gain_per_stage[stage];
    Rng rng(mix_seed(cfg.seed, index));
    const double phase_shaft = rng.uniform(0.0, kTwoPi);
    const double phase_fault = rng.uniform(0.0, kTwoPi);
    const double phase_fault2 = rng.uniform(0.0, kTwoPi);
    const double amp_shaft = 1.0 + cfg.amp_jitter * rng.normal();

    RawRecording rec;
    rec.sample_rate = cfg.sample_rate;
    rec.source_id = "SYNTH";
    static const UtcTime start = {2004, 2, 12, 10, 0, 0};
    rec.timestamp = start.plus_seconds(static_cast<std::int64_t>(index) * cfg.interval_seconds);
    rec.channels.resize(1);
    auto& ch = rec.channels[0];
    ch.resize(cfg.segment_len);
    const double w_shaft = kTwoPi * cfg.shaft_freq / cfg.sample_rate;
    const double w_fault = kTwoPi * cfg.fault_freq / cfg.sample_rate;
    for (std::size_t t = 0; t < cfg.segment_len; ++t) {
        double v = amp_shaft * std::sin(w_shaft * t + phase_shaft);
        v += cfg.noise_floor * rng.normal();
        if (gain > 0.0) {
            v += gain * std::sin(w_fault * t + phase_fault);
            v += 0.5 * gain * std::sin(2.0 * w_fault * t + phase_fault2);
            // band noise: amplitude-modulated carrier at the fault frequency
            v += 0.25 * gain * rng.normal() * std::sin(w_fault * t + phase_fault);
        }
        ch[t] = quantize_sample(v);
    }
    return rec;
}

} // namespace detail

/// Deterministic synthetic run-to-failure campaign: shaft-frequency tone
/// plus white noise, with fault-frequency harmonics and band noise scaled
/// up stage by stage.
inline RecordingSet synth_run_to_failure(const SynthConfig& cfg) {
    cfg.validate();
    RecordingSet set;
    set.recordings.reserve(cfg.n_recordings);
    for (std::size_t i = 0; i < cfg.n_recordings; ++i)
        set.recordings.push_back(detail::synth_recording(cfg, i));
    set.manifest[0] = "synthetic-bearing";
    return set;
}

inline nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
    return nlohmann::json{{"seed", cfg.seed},
                          {"sample_rate", cfg.sample_rate},
                          {"segment_len", cfg.segment_len},
                          {"n_recordings", cfg.n_recordings},
                          {"stage_boundaries", cfg.stage_boundaries},
                          {"shaft_freq", cfg.shaft_freq},
                          {"fault_freq", cfg.fault_freq},
                          {"fault_gain_per_stage", cfg.fault_gain_per_stage},
                          {"noise_floor", cfg.noise_floor},
                          {"amp_jitter", cfg.amp_jitter},
                          {"interval_seconds", cfg.interval_seconds}};
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
    cfg.segment_len = j.value("segment_len", cfg.segment_len);
    cfg.n_recordings = j.value("n_recordings", cfg.n_recordings);
    cfg.stage_boundaries = j.value("stage_boundaries", cfg.stage_boundaries);
    cfg.shaft_freq = j.value("shaft_freq", cfg.shaft_freq);
    cfg.fault_freq = j.value("fault_freq", cfg.fault_freq);
    cfg.fault_gain_per_stage = j.value("fault_gain_per_stage", cfg.fault_gain_per_stage);
    cfg.noise_floor = j.value("noise_floor", cfg.noise_floor);
    cfg.amp_jitter = j.value("amp_jitter", cfg.amp_jitter);
    cfg.interval_seconds = j.value("interval_seconds", cfg.interval_seconds);
    return cfg;
}

/// Write a campaign in the IMS on-disk layout: one dotted-timestamp file
/// per recording plus manifest.json.
inline void write_ims_dataset(const RecordingSet& set, const std::filesystem::path& dir,
                              const SynthConfig* cfg = nullptr) {
    std::filesystem::create_directories(dir);
    for (const auto& rec : set.recordings) {
        std::ofstream f(dir / rec.timestamp.to_dotted(), std::ios::binary);
        if (!f) throw FormatError("cannot write " + (dir / rec.timestamp.to_dotted()).string());
        f << serialize_ims(rec);
    }
    nlohmann::json manifest;
    for (const auto& [ch, label] : set.manifest) manifest["channels"][std::to_string(ch)] = label;
    manifest["n_recordings"] = set.recordings.size();
    if (cfg) {
        manifest["synth"] = synth_config_to_json(*cfg);
        manifest["stage_boundaries"] = cfg->stage_boundaries;
        manifest["seed"] = cfg->seed;
    }
    std::ofstream mf(dir / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
}

/// Load a directory of IMS files into a RecordingSet. Names that do not
/// match the timestamp pattern (manifest.json included) are skipped; the
/// skipped names go to *rejects when provided.
inline RecordingSet load_ims_dataset(const std::filesystem::path& dir, double sample_rate,
                                     std::vector<std::string>* rejects = nullptr) {
    if (!std::filesystem::is_directory(dir))
        throw FormatError("not a dataset directory: " + dir.string());
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    auto enumerated = enumerate_recordings(names);
    if (rejects) *rejects = enumerated.rejects;

    RecordingSet set;
    set.recordings.reserve(enumerated.ordered.size());
    for (const auto& [ts, name] : enumerated.ordered) {
        std::ifstream f(dir / name, std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        RawRecording rec = parse_ims_file(buf.str());
        rec.timestamp = ts;
        rec.sample_rate = sample_rate;
        rec.source_id = name;
        set.recordings.push_back(std::move(rec));
    }
    std::ifstream mf(dir / "manifest.json");
    if (mf) {
        nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
        if (!manifest.is_discarded() && manifest.contains("channels"))
            for (const auto& [k, v] : manifest["channels"].items())
                set.manifest[std::stoi(k)] = v.get<std::string>();
    }
    return set;
}

} // namespace spectrack
