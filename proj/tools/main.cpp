#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spectrack/spectrack.hpp"

namespace {

struct Flags {
    std::optional<std::string> config_file;
    std::optional<std::string> input;
    std::optional<std::string> out;
    std::optional<std::string> method;
    std::optional<double> perplexity;
    std::optional<std::size_t> reference_count;
    std::optional<std::size_t> m_window;
    std::optional<double> threshold;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> channel;
    std::optional<double> sample_rate;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config_file, "JSON config file (flags override it)");
    cmd->add_option("--input", flags.input, "dataset directory");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--method", flags.method, "embedding engine: mds or tsne")
        ->check(CLI::IsMember({"mds", "tsne"}));
    cmd->add_option("--perplexity", flags.perplexity, "t-SNE perplexity");
    cmd->add_option("--reference-count", flags.reference_count,
                    "recordings in the reference window");
    cmd->add_option("--m-window", flags.m_window, "rho values per rho_avg block");
    cmd->add_option("--threshold", flags.threshold, "rho_avg alert threshold");
    cmd->add_option("--seed", flags.seed, "run seed");
    cmd->add_option("--channel", flags.channel, "recording channel index");
    cmd->add_option("--sample-rate", flags.sample_rate, "sample rate of loaded recordings, Hz");
}

spectrack::RunConfig resolve_config(const Flags& flags, bool synth_default) {
    spectrack::RunConfig cfg;
    if (flags.config_file) cfg = spectrack::load_run_config(*flags.config_file);
    if (synth_default && !cfg.synth && !flags.input) cfg.synth = spectrack::SynthConfig{};
    if (flags.input) cfg.input_dir = *flags.input;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.method)
        cfg.method = *flags.method == "tsne" ? spectrack::EmbedMethod::tsne
                                             : spectrack::EmbedMethod::mds;
    if (flags.perplexity) cfg.tsne.perplexity = *flags.perplexity;
    if (flags.reference_count) cfg.reference_count = *flags.reference_count;
    if (flags.m_window) cfg.m_window = *flags.m_window;
    if (flags.threshold) cfg.threshold = *flags.threshold;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.channel) cfg.channel = *flags.channel;
    if (flags.sample_rate) cfg.sample_rate = *flags.sample_rate;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectrum mapping and real-time failure tracking for vibration recordings"};
    app.require_subcommand(1);

    Flags flags;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic run-to-failure dataset");
    CLI::App* map = app.add_subcommand("map", "embed a whole campaign into a 2D map");
    CLI::App* rtdt = app.add_subcommand("rtdt", "track a stream against a reference map");
    for (CLI::App* cmd : {synth, map, rtdt}) add_common_flags(cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto result = spectrack::run_synth(resolve_config(flags, true));
            std::cout << "wrote " << result.n_recordings << " recordings to "
                      << result.dataset_dir.string() << "\n";
        } else if (map->parsed()) {
            auto result = spectrack::run_map(resolve_config(flags, false));
            std::cout << "embedded " << result.embedding.points.size() << " points ("
                      << spectrack::to_string(result.embedding.method) << ")\n";
        } else if (rtdt->parsed()) {
            auto result = spectrack::run_rtdt(resolve_config(flags, false));
            std::cout << "tracked " << result.tracked.size() << " points, "
                      << result.alert_state.alerts.size() << " alert(s)\n";
            for (const auto& alert : result.alert_state.alerts)
                std::cout << "alert at " << alert.timestamp.to_iso()
                          << " rho_avg=" << alert.rho_avg << "\n";
        }
    } catch (const spectrack::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const spectrack::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
