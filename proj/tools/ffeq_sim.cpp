// ffeq_sim: BER sweeps, the validation suite and grid derivation.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "ffeq/ffeq.hpp"

namespace {

using namespace ffeq;
using namespace ffeq::harness;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    std::string profile_dir;
};

ExperimentConfig load(const Options& o, bool required) {
    ExperimentConfig cfg;
    if (!o.config.empty())
        cfg = load_config(o.config);
    else if (required)
        throw ConfigError("--config is required");
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output = o.out;
    if (!o.profile_dir.empty()) cfg.profile_dir = o.profile_dir;
    cfg.threads = o.threads;
    return cfg;
}

void print_grid(const ExperimentConfig& cfg, const FrameGrid& g) {
    std::printf("M                  %ld\n", static_cast<long>(g.M));
    std::printf("N                  %ld\n", static_cast<long>(g.N));
    std::printf("bandwidth W        %.6g Hz\n", 1.0 / g.d_r);
    std::printf("subcarrier spacing %.6g Hz\n", g.subcarrier_spacing());
    std::printf("delay resolution   %.6g s\n", g.d_r);
    std::printf("symbol duration T  %.6g s\n", g.short_frame_duration());
    std::printf("doppler resolution %.6g Hz\n", g.f_r);
    std::printf("f_max              %.6g Hz\n", g.f_max);
    std::printf("K_max              %ld\n", static_cast<long>(g.K_max));
    std::printf("d_max              %.6g s\n", g.d_max);
    std::printf("L_max              %ld\n", static_cast<long>(g.L_max));
    std::printf("L_cp               %ld\n", static_cast<long>(g.L_cp));
    const Index k = stripe_half_width(cfg, g);
    std::printf("stripe width       %ld\n", static_cast<long>(2 * k + 1));
    // The solve runs on H H^H + I/gamma, whose stripe is twice as wide.
    if (g.MN() > 4 * k) {
        const auto c = complexity_estimate(g.MN(), 2 * k);
        std::printf("banded solve ops   %.4g  %s\n", static_cast<double>(c.total), c.asymptotic.c_str());
    }
    std::printf("dense ops (MN)^3   %.4g\n", dense_complexity(static_cast<double>(g.MN())));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-domain MMSE equalization experiments for OTFS, OFDM and SC-FDE"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "Experiment configuration (YAML)");
    app.add_option("--seed", o.seed, "Root RNG seed, overrides the config");
    app.add_option("--out", o.out, "CSV output path, overrides the config");
    app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--profile-dir", o.profile_dir, "Directory holding <profile>.yaml channel profiles");

    auto* sweep = app.add_subcommand("sweep", "Run a Monte-Carlo BER sweep and write CSV")->fallthrough();
    auto* validate = app.add_subcommand("validate", "Run the property validation suite")->fallthrough();
    auto* grid = app.add_subcommand("grid", "Print the derived frame grid")->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            const auto cfg = load(o, true);
            const auto t0 = std::chrono::steady_clock::now();
            const auto rep = run_ber_sweep(cfg);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (cfg.output.empty())
                write_csv(rep, std::cout);
            else
                write_csv(rep, std::filesystem::path(cfg.output));
            std::fprintf(stderr, "%zu rows in %.1f s, worst stripe truncation %.3g%s%s\n", rep.rows.size(), secs,
                         rep.max_discarded_fraction, cfg.output.empty() ? "" : ", wrote ", cfg.output.c_str());
            return 0;
        }
        if (validate->parsed()) {
            const auto rep = run_validation(load(o, false));
            rep.print(std::cout);
            return rep.ok() ? 0 : 1;
        }
        if (grid->parsed()) {
            const auto cfg = load(o, true);
            print_grid(cfg, derive_grid(cfg));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
