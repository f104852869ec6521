#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spectrack/embed.hpp"
#include "spectrack/errors.hpp"
#include "spectrack/format.hpp"
#include "spectrack/ingest.hpp"
#include "spectrack/preprocess.hpp"
#include "spectrack/render.hpp"
#include "spectrack/rtdt.hpp"
#include "spectrack/similarity.hpp"
#include "spectrack/time.hpp"

namespace spectrack {

/// One run, one config: either a dataset directory to read or a synth
/// spec to generate, plus every knob downstream stages need. Flags
/// override file values field by field.
struct RunConfig {
    std::string input_dir;            // dataset path ("" when synthesizing)
    std::optional<SynthConfig> synth; // generator spec ("synth" command)
    std::size_t channel = 0;
    double sample_rate = 20000.0; // applied to loaded recordings
    PreprocessConfig preprocess;
    EmbedMethod method = EmbedMethod::mds;
    TsneConfig tsne;
    std::size_t reference_count = 288;
    std::size_t m_window = 12;
    double threshold = 2.0;
    std::string out_dir = ".";
    std::uint64_t seed = 1;

    void validate_for_synth() const {
        if (!synth) throw ConfigError("synth command needs a synth spec in the config");
        if (!input_dir.empty())
            throw ConfigError("config must name exactly one input source (synth spec given "
                              "alongside an input path)");
        synth->validate();
    }

    void validate_for_dataset() const {
        if (input_dir.empty()) throw ConfigError("config needs an input dataset path");
        if (synth)
            throw ConfigError("config must name exactly one input source (input path given "
                              "alongside a synth spec)");
        if (!std::filesystem::is_directory(input_dir))
            throw ConfigError("input path is not a directory: " + input_dir);
        preprocess.validate();
        if (m_window == 0) throw ConfigError("m_window must be positive");
        if (sample_rate <= 0.0) throw ConfigError("sample_rate must be positive");
    }
};

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    if (!cfg.input_dir.empty()) j["input"] = cfg.input_dir;
    if (cfg.synth) j["synth"] = synth_config_to_json(*cfg.synth);
    j["channel"] = cfg.channel;
    j["sample_rate"] = cfg.sample_rate;
    j["preprocess"] = {{"segment_len", cfg.preprocess.segment_len},
                       {"transform_len", cfg.preprocess.transform_len},
                       {"smoothing_block", cfg.preprocess.smoothing_block},
                       {"window", cfg.preprocess.window == WindowKind::hann ? "hann" : "none"}};
    j["method"] = to_string(cfg.method);
    j["tsne"] = {{"perplexity", cfg.tsne.perplexity},
                 {"iterations", cfg.tsne.iterations},
                 {"learning_rate", cfg.tsne.learning_rate},
                 {"early_exaggeration_factor", cfg.tsne.early_exaggeration_factor},
                 {"early_exaggeration_iters", cfg.tsne.early_exaggeration_iters},
                 {"momentum_initial", cfg.tsne.momentum_initial},
                 {"momentum_final", cfg.tsne.momentum_final},
                 {"momentum_switch_iter", cfg.tsne.momentum_switch_iter}};
    j["reference_count"] = cfg.reference_count;
    j["m_window"] = cfg.m_window;
    j["threshold"] = cfg.threshold;
    j["out"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    try {
        cfg.input_dir = j.value("input", cfg.input_dir);
        if (j.contains("synth")) cfg.synth = synth_config_from_json(j.at("synth"));
        cfg.channel = j.value("channel", cfg.channel);
        cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
        if (j.contains("preprocess")) {
            const auto& p = j.at("preprocess");
            cfg.preprocess.segment_len = p.value("segment_len", cfg.preprocess.segment_len);
            cfg.preprocess.transform_len = p.value("transform_len", cfg.preprocess.transform_len);
            cfg.preprocess.smoothing_block =
                p.value("smoothing_block", cfg.preprocess.smoothing_block);
            const std::string w = p.value("window", std::string("hann"));
            if (w == "hann")
                cfg.preprocess.window = WindowKind::hann;
            else if (w == "none")
                cfg.preprocess.window = WindowKind::none;
            else
                throw ConfigError("unknown window kind: " + w);
        }
        if (j.contains("method")) {
            const std::string m = j.at("method").get<std::string>();
            if (m == "mds")
                cfg.method = EmbedMethod::mds;
            else if (m == "tsne")
                cfg.method = EmbedMethod::tsne;
            else
                throw ConfigError("unknown embed method: " + m);
        }
        if (j.contains("tsne")) {
            const auto& t = j.at("tsne");
            cfg.tsne.perplexity = t.value("perplexity", cfg.tsne.perplexity);
            cfg.tsne.iterations = t.value("iterations", cfg.tsne.iterations);
            cfg.tsne.learning_rate = t.value("learning_rate", cfg.tsne.learning_rate);
            cfg.tsne.early_exaggeration_factor =
                t.value("early_exaggeration_factor", cfg.tsne.early_exaggeration_factor);
            cfg.tsne.early_exaggeration_iters =
                t.value("early_exaggeration_iters", cfg.tsne.early_exaggeration_iters);
            cfg.tsne.momentum_initial = t.value("momentum_initial", cfg.tsne.momentum_initial);
            cfg.tsne.momentum_final = t.value("momentum_final", cfg.tsne.momentum_final);
            cfg.tsne.momentum_switch_iter =
                t.value("momentum_switch_iter", cfg.tsne.momentum_switch_iter);
        }
        cfg.reference_count = j.value("reference_count", cfg.reference_count);
        cfg.m_window = j.value("m_window", cfg.m_window);
        cfg.threshold = j.value("threshold", cfg.threshold);
        cfg.out_dir = j.value("out", cfg.out_dir);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config document: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) throw ConfigError("cannot read config file: " + file.string());
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + file.string());
    return run_config_from_json(j);
}

namespace detail {

template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string(stage) + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
}

/// Digest of a dataset as parsed: canonical serialization of every
/// recording, folded in time order. Stable across reruns and across
/// cosmetic whitespace differences in the source files.
inline std::string dataset_digest(const RecordingSet& set) {
    std::uint64_t state = 0xcbf29ce484222325ull;
    for (const auto& rec : set.recordings) {
        state = fnv1a64(rec.timestamp.to_dotted(), state);
        state = fnv1a64(std::string_view("\x1f", 1), state);
        state = fnv1a64(serialize_ims(rec), state);
    }
    return "fnv1a64:" + fnv1a64_hex(state);
}

struct PreparedDataset {
    std::vector<SpectrumVector> spectra;
    std::string digest;
};

inline PreparedDataset prepare_dataset(const RunConfig& cfg) {
    RecordingSet set = with_stage("ingest", [&] {
        return load_ims_dataset(cfg.input_dir, cfg.sample_rate);
    });
    if (set.recordings.empty()) throw ConfigError("input dataset is empty: " + cfg.input_dir);

    PreparedDataset out;
    out.digest = dataset_digest(set);
    out.spectra = with_stage("preprocess", [&] {
        std::vector<SpectrumVector> spectra;
        spectra.reserve(set.recordings.size());
        for (const auto& rec : set.recordings)
            spectra.push_back(preprocess_recording(rec, cfg.channel, cfg.preprocess));
        return spectra;
    });
    return out;
}

inline nlohmann::json base_manifest(const char* command, const RunConfig& cfg,
                                    const std::string& digest) {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = run_config_to_json(cfg);
    m["input_digest"] = digest;
    return m;
}

} // namespace detail

struct SynthRunResult {
    std::filesystem::path dataset_dir;
    std::size_t n_recordings = 0;
};

/// `synth`: generate a run-to-failure campaign into out_dir.
inline SynthRunResult run_synth(RunConfig cfg) {
    cfg.validate_for_synth();
    cfg.synth->seed = cfg.seed;

    RecordingSet set = detail::with_stage("synth", [&] { return synth_run_to_failure(*cfg.synth); });
    detail::with_stage("write", [&] {
        write_ims_dataset(set, cfg.out_dir, &*cfg.synth);
        auto manifest = detail::base_manifest(
            "synth", cfg, "fnv1a64:" + fnv1a64_hex(fnv1a64(synth_config_to_json(*cfg.synth).dump())));
        manifest["n_recordings"] = set.recordings.size();
        detail::write_text_file(std::filesystem::path(cfg.out_dir) / "synth_manifest.json",
                                manifest.dump(2) + "\n");
    });
    return {cfg.out_dir, set.recordings.size()};
}

struct MapRunResult {
    Embedding2D embedding;
    std::vector<UtcTime> timestamps;
    std::vector<std::string> artifacts;
};

/// `map`: dataset -> spectra -> distance matrix -> 2D embedding, with CSV
/// and figure artifacts.
inline MapRunResult run_map(RunConfig cfg) {
    cfg.validate_for_dataset();
    cfg.tsne.seed = cfg.seed;

    auto prepared = detail::prepare_dataset(cfg);
    auto dmat = detail::with_stage("similarity", [&] { return distance_matrix(prepared.spectra); });
    auto embedding = detail::with_stage("embed", [&] {
        return cfg.method == EmbedMethod::mds ? mds_embed(dmat) : tsne_embed(dmat, cfg.tsne);
    });

    MapRunResult result;
    result.timestamps.reserve(prepared.spectra.size());
    for (const auto& s : prepared.spectra) result.timestamps.push_back(s.timestamp);

    detail::with_stage("render", [&] {
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path out(cfg.out_dir);

        detail::write_text_file(out / "map_points.csv",
                                embedding_to_csv(embedding, result.timestamps));

        MapFigureSpec fig;
        fig.trajectory = true;
        for (std::size_t i = 0; i < embedding.points.size(); ++i)
            fig.points.push_back({embedding.points[i].x, embedding.points[i].y,
                                  result.timestamps[i]});
        detail::write_text_file(out / "map_figure.svg", render_map(fig));

        auto manifest = detail::base_manifest("map", cfg, prepared.digest);
        manifest["n_points"] = embedding.points.size();
        manifest["diagnostics"] = embedding.diagnostics;
        manifest["artifacts"] = {"map_points.csv", "map_figure.svg"};
        detail::write_text_file(out / "map_manifest.json", manifest.dump(2) + "\n");
    });

    result.embedding = std::move(embedding);
    result.artifacts = {"map_points.csv", "map_figure.svg", "map_manifest.json"};
    return result;
}

struct RtdtRunResult {
    std::vector<TrackedPoint> tracked;
    AlertState alert_state;
    std::vector<std::string> artifacts;
};

/// `rtdt`: reference window -> reference map; remainder -> tracked stream
/// with rho scoring and alerts.
inline RtdtRunResult run_rtdt(RunConfig cfg) {
    cfg.validate_for_dataset();

    auto prepared = detail::prepare_dataset(cfg);
    if (cfg.reference_count < 3)
        throw ConfigError("reference_count must be at least 3");
    if (cfg.reference_count >= prepared.spectra.size())
        throw ConfigError("reference window (" + std::to_string(cfg.reference_count) +
                          ") must be shorter than the dataset (" +
                          std::to_string(prepared.spectra.size()) + " recordings)");

    std::vector<SpectrumVector> reference(prepared.spectra.begin(),
                                          prepared.spectra.begin() +
                                              static_cast<std::ptrdiff_t>(cfg.reference_count));
    std::vector<SpectrumVector> stream(prepared.spectra.begin() +
                                           static_cast<std::ptrdiff_t>(cfg.reference_count),
                                       prepared.spectra.end());

    auto map = detail::with_stage("reference", [&] { return build_reference_map(std::move(reference)); });
    auto [tracked, alert_state] = detail::with_stage("track", [&] {
        return track_stream(map, stream, {cfg.m_window, cfg.threshold});
    });

    detail::with_stage("render", [&] {
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path out(cfg.out_dir);

        detail::write_text_file(out / "rtdt_tracked.csv", tracked_points_to_csv(tracked));
        detail::write_text_file(out / "rtdt_rho_avg.csv", rho_avg_history_to_csv(alert_state));

        MapFigureSpec fig;
        fig.trajectory = true;
        for (std::size_t i = 0; i < map.ref_vectors.size(); ++i) {
            fig.points.push_back({map.coords2d[i].x, map.coords2d[i].y,
                                  map.ref_vectors[i].timestamp});
            fig.highlight.push_back(i);
        }
        for (const auto& t : tracked) fig.points.push_back({t.x2d.x, t.x2d.y, t.timestamp});
        for (const auto& alert : alert_state.alerts)
            for (const auto& t : tracked)
                if (t.timestamp == alert.timestamp) {
                    fig.annotations.push_back({t.x2d.x, t.x2d.y,
                                               "alert " + alert.timestamp.to_iso()});
                    break;
                }
        detail::write_text_file(out / "rtdt_map.svg", render_map(fig));
        detail::write_text_file(out / "rtdt_rho.svg",
                                render_rho_curve(alert_state.rho_avg_history, cfg.threshold,
                                                 alert_state.alerts));

        auto manifest = detail::base_manifest("rtdt", cfg, prepared.digest);
        manifest["n_reference"] = cfg.reference_count;
        manifest["n_tracked"] = tracked.size();
        manifest["alerts"] = nlohmann::json::array();
        for (const auto& alert : alert_state.alerts)
            manifest["alerts"].push_back(
                {{"timestamp", alert.timestamp.to_iso()}, {"rho_avg", alert.rho_avg}});
        manifest["artifacts"] = {"rtdt_tracked.csv", "rtdt_rho_avg.csv", "rtdt_map.svg",
                                 "rtdt_rho.svg"};
        detail::write_text_file(out / "rtdt_manifest.json", manifest.dump(2) + "\n");
    });

    return {std::move(tracked), std::move(alert_state),
            {"rtdt_tracked.csv", "rtdt_rho_avg.csv", "rtdt_map.svg", "rtdt_rho.svg",
             "rtdt_manifest.json"}};
}

} // namespace spectrack
