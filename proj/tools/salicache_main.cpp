// Command-line front end: `run` executes the method comparison and writes a
// report; `synth` writes a synthetic scenario to PPM frames plus a manifest.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "salicache/error.hpp"
#include "salicache/harness.hpp"

namespace {

int exit_code(salicache::ErrorKind kind) { return static_cast<int>(kind); }

}  // namespace

int main(int argc, char** argv) {
    using namespace salicache;

    CLI::App app{"Saliency- and redundancy-aware KV-cache pipeline for video token streams"};
    app.require_subcommand(1);

    RunConfig config;
    std::string manifest;
    std::string scenario = "composite";
    std::string methods = "baseline,sliding,h2o,salicache";
    std::string out_path;
    std::string format = "json";
    bool no_fidelity = false;

    auto* run = app.add_subcommand("run", "Run the method comparison and emit a report");
    auto* input = run->add_option_group("input");
    input->add_option("--frames", manifest, "Frame manifest (JSON)");
    input->add_option("--synthetic", scenario, "Synthetic scenario: static, moving_square, noise, composite");
    input->require_option(0, 1);
    run->add_option("--frames-count", config.input.frame_count, "Synthetic frame count")->check(CLI::PositiveNumber);
    run->add_option("--width", config.input.dims.width, "Synthetic frame width")->check(CLI::PositiveNumber);
    run->add_option("--height", config.input.dims.height, "Synthetic frame height")->check(CLI::PositiveNumber);
    run->add_option("--methods", methods, "Comma-separated subset of baseline,sliding,h2o,salicache");
    run->add_option("--patch-size", config.patch_size, "Patch side length P in pixels");
    run->add_option("--tau-t", config.temporal.tau_t, "Per-patch RMS difference threshold");
    run->add_option("--theta-r", config.temporal.theta_r, "Frame redundancy threshold");
    run->add_option("--tau-high", config.saliency.tau_high, "FP16 tier threshold");
    run->add_option("--tau-med", config.saliency.tau_med, "INT8 tier threshold");
    run->add_option("--tau-low", config.saliency.tau_low, "INT4 tier threshold (at or below prunes)");
    run->add_option("--canny-low", config.saliency.canny_low, "Canny low hysteresis threshold");
    run->add_option("--canny-high", config.saliency.canny_high, "Canny high hysteresis threshold");
    run->add_option("--sigma", config.saliency.gaussian_sigma, "Gaussian blur sigma");
    run->add_option("--var-window", config.saliency.variance_window, "Chromatic variance window (odd)");
    run->add_option("--edge-weight", config.saliency.edge_weight, "Edge weight in saliency fusion; variance gets the rest");
    run->add_option("--budget", config.budget.budget, "Live patch-token budget for sliding and h2o");
    run->add_option("--layers", config.attention.n_layers, "Attention layers");
    run->add_option("--q-heads", config.attention.n_q_heads, "Query heads");
    run->add_option("--kv-heads", config.attention.n_kv_heads, "KV heads");
    run->add_option("--head-dim", config.attention.head_dim, "Head dimension");
    run->add_option("--seed", config.attention.seed, "Seed for projections, probes and synthetic frames");
    run->add_option("--probes", config.probe_count, "Fidelity probe queries");
    run->add_flag("--no-fidelity", no_fidelity, "Skip fidelity even when baseline is selected");
    run->add_option("--out", out_path, "Report path")->required();
    run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    std::string synth_dir;
    int synth_count = 10, synth_w = 64, synth_h = 64, synth_p = 16;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Write a synthetic scenario as PPM frames and a manifest");
    synth->add_option("--scenario", scenario, "static, moving_square, noise, composite");
    synth->add_option("--frames-count", synth_count)->check(CLI::PositiveNumber);
    synth->add_option("--width", synth_w)->check(CLI::PositiveNumber);
    synth->add_option("--height", synth_h)->check(CLI::PositiveNumber);
    synth->add_option("--patch-size", synth_p)->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out-dir", synth_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorKind::Config);
    }

    try {
        if (*run) {
            config.saliency.variance_weight = 1.0 - config.saliency.edge_weight;
            config.methods = parse_methods(methods);
            config.fidelity = config.has(Method::Baseline) && !no_fidelity;
            if (!manifest.empty())
                config.input.manifest = manifest;
            else
                config.input.scenario = parse_scenario(scenario);
            const auto fmt = parse_format(format);
            config.validate();
            const auto frames = load_frames(config);
            const auto report = run_comparison(frames, config);
            emit_report(report, out_path, fmt);
            for (const auto& [m, s] : report.methods)
                std::cout << method_name(m) << ": compression " << s.compression_ratio << "x (payload only "
                          << s.payload_compression_ratio << "x), " << s.per_frame_ms << " ms/frame\n";
        } else {
            const auto frames =
                synth_sequence(parse_scenario(scenario), synth_count, {synth_w, synth_h}, synth_p, synth_seed);
            const std::filesystem::path dir(synth_dir);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
            nlohmann::ordered_json doc{{"patch_size", synth_p}, {"frames", nlohmann::ordered_json::array()}};
            for (const auto& f : frames) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%04d.ppm", f.frame_index);
                save_frame(f, dir / name);
                doc["frames"].push_back(name);
            }
            std::ofstream out(dir / "manifest.json");
            out << doc.dump(2) << '\n';
            if (!out) throw IoError("cannot write manifest in " + dir.string());
            std::cout << "wrote " << frames.size() << " frames to " << dir.string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_code(ErrorKind::Invariant);
    }
    return 0;
}
