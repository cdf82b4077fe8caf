#include <catch_amalgamated.hpp>

#include <sstream>

#include "ffeq/ffeq.hpp"

using namespace ffeq;
using namespace ffeq::harness;
using Catch::Approx;

namespace {

std::string csv_of(const BerReport& rep) {
    std::ostringstream o;
    write_csv(rep, o);
    return o.str();
}

double q_ref(double gamma) { return 0.5 * std::erfc(std::sqrt(gamma / 2.0)); }

ExperimentConfig awgn_config(Index m, Index n, double snr_db, Index realizations) {
    ExperimentConfig c;
    c.grid.M = m;
    c.grid.N = n;
    c.grid.d_r_s = 1e-6;
    c.profile = kAwgnProfile;
    c.snr = {snr_db, snr_db, 1.0};
    c.trials.max_realizations = realizations;
    c.trials.min_realizations = realizations;
    c.trials.target_bit_errors = 0;
    c.theory = false;
    return c;
}

ExperimentConfig small_tdl_config() {
    ExperimentConfig c;
    c.grid.M = 16;
    c.grid.N = 8;
    c.grid.subcarrier_spacing_hz = 30e3;
    c.profile = "tdl-d";
    c.f_max_hz = 2.0 * 30e3 / 8.0;
    c.snr = {0.0, 12.0, 6.0};
    c.trials.max_realizations = 12;
    c.trials.min_realizations = 4;
    c.trials.target_bit_errors = 0;
    c.trials.chunk = 4;
    c.equalizer.one_tap_baseline = true;
    c.csi.enabled = true;
    c.theory = true;
    return c;
}

}  // namespace

TEST_CASE("sample configs load and derive", "[harness]") {
    const std::filesystem::path dir = FFEQ_CONFIG_DIR;
    for (const char* name : {"tdl-d-desk.yaml", "tdl-a-desk.yaml", "awgn.yaml", "table1-offline.yaml"}) {
        INFO(name);
        const auto cfg = load_config(dir / name);
        CHECK_NOTHROW(derive_grid(cfg));
    }
    const auto desk = load_config(dir / "tdl-d-desk.yaml");
    CHECK(desk.schemes.size() == 3);
    CHECK(desk.equalizer.one_tap_baseline);
    CHECK(desk.doppler_mode == DopplerMode::OnGrid);
    CHECK(derive_grid(desk).K_max == 2);
}

TEST_CASE("config errors carry line numbers", "[harness]") {
    auto line_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("grid:\n  M: 8\n  bogus: 1\n") == 3);
    CHECK(line_of("seed: 1\nwhatever: true\n") == 2);
    CHECK(line_of("grid:\n  M: 8\n  N: zero\n") == 3);
    CHECK(line_of("grid:\n  M: 0\n") == 2);
    CHECK(line_of("schemes: [otfs, ofdm, otfs]\n") == 1);
    CHECK(line_of("schemes:\n  - otfs\n  - cdma\n") == 3);
    CHECK(line_of("snr_db: {start: 4, stop: 2, step: 1}\n") == 1);
    CHECK(line_of("channel:\n  profile: tdl-d\n  doppler_mode: sideways\n") == 3);
    CHECK(line_of("trials:\n  max_realizations: 5\n  min_realizations: 9\n") == 3);
    CHECK(line_of("equalizer:\n  max_discarded: 2\n") == 2);
    CHECK(line_of("grid: [1, 2\n") > 0);  // YAML syntax error
    try {
        parse_config_text("grid:\n  M: 8\n  bogus: 1\n");
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") == 0);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("derive_grid reproduces the full-scale parameters", "[harness]") {
    ExperimentConfig c;
    c.grid.M = 256;
    c.grid.N = 32;
    c.grid.subcarrier_spacing_hz = 30e3;
    c.v_max_kmh = 500.0;
    c.carrier_hz = 6e9;
    c.profile = "tdl-d";
    const auto g = derive_grid(c);
    CHECK(1.0 / g.d_r == Approx(7.68e6).epsilon(1e-12));
    CHECK(g.d_r == Approx(130.21e-9).epsilon(1e-4));
    CHECK(g.short_frame_duration() == Approx(33.33e-6).epsilon(1e-3));
    CHECK(g.f_r == Approx(937.5).epsilon(1e-12));
    CHECK(g.f_max == Approx(2777.8).epsilon(1e-4));
    CHECK(g.K_max == 3);
    CHECK(g.L_max == 35);
    CHECK(g.L_cp == 35);
    c.profile = "tdl-a";
    CHECK(derive_grid(c).L_max == 27);

    // the same grid, over-specified consistently
    c.grid.bandwidth_hz = 7.68e6;
    c.grid.symbol_duration_s = 33.33e-6;
    c.grid.doppler_resolution_hz = 937.5;
    c.f_max_hz = 2777.8;
    CHECK(derive_grid(c).K_max == 3);
}

TEST_CASE("derive_grid edge cases and conflicts", "[harness]") {
    ExperimentConfig c;
    c.profile = kAwgnProfile;
    c.grid.M = 1;
    c.grid.N = 1;
    c.grid.d_r_s = 2e-6;
    CHECK(derive_grid(c).f_r == Approx(1.0 / 2e-6).epsilon(1e-15));

    c.profile = "tdl-d";
    c.grid.M = 64;
    c.grid.N = 16;
    c.grid.d_r_s.reset();
    c.grid.subcarrier_spacing_hz = 30e3;
    c.v_max_kmh = 500.0;
    c.carrier_hz = 6e9;
    const auto g = derive_grid(c);
    CHECK(g.f_r == Approx(1875.0).epsilon(1e-12));
    CHECK(g.K_max == 2);

    auto conflict = c;
    conflict.grid.bandwidth_hz = 2.0e6;  // 30 kHz * 64 = 1.92 MHz
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.grid.doppler_resolution_hz = 937.5;  // would need N = 32
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.f_max_hz = 3000.0;
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.carrier_hz.reset();
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.grid.subcarrier_spacing_hz.reset();
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.grid.cp = 4;  // below L_max = 9
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);
    conflict = c;
    conflict.profile = "tdl-z";
    CHECK_THROWS_AS(derive_grid(conflict), ConfigError);

    // the conflict is reported at the offending line
    try {
        derive_grid(parse_config_text("grid:\n  M: 64\n  N: 16\n  subcarrier_spacing_hz: 30.0e3\n"
                                      "  bandwidth_hz: 2.0e6\n"));
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 5);
    }
}

TEST_CASE("sweeps are byte-identical for a seed and independent of threads", "[harness]") {
    auto cfg = small_tdl_config();
    const std::string a = csv_of(run_ber_sweep(cfg));
    cfg.threads = 3;
    const std::string b = csv_of(run_ber_sweep(cfg));
    CHECK(a == b);
    cfg.seed = 2;
    CHECK(csv_of(run_ber_sweep(cfg)) != a);
}

TEST_CASE("CSV layout", "[harness]") {
    const auto cfg = small_tdl_config();
    const auto rep = run_ber_sweep(cfg);
    const std::string text = csv_of(rep);
    CHECK(text.find('\r') == std::string::npos);
    std::istringstream in(text);
    std::string first, header, line;
    std::getline(in, first);
    std::getline(in, header);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    CHECK(first == std::string("# ffeq-ber v1 config_hash=") + hash + " seed=1");
    CHECK(header == "scheme,snr_db,ber_simulated,ber_theoretical,bit_errors,bits_total,realizations,ci_95");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    // three schemes x (mmse, one-tap, imperfect) x three SNR points
    CHECK(rows == 27);
    CHECK(rep.find("otfs", 6.0) != nullptr);
    CHECK(rep.find("ofdm/one-tap", 12.0) != nullptr);
    CHECK(rep.find("scfde/imperfect", 0.0) != nullptr);
    for (const auto& r : rep.rows) {
        CHECK(r.ber_simulated == Approx(double(r.bit_errors) / double(r.bits_total)));
        CHECK(r.ber_simulated >= 0.0);
        CHECK(r.ber_simulated <= 1.0);
        const bool has_theory = r.scheme.find('/') == std::string::npos;
        CHECK(std::isnan(r.ber_theoretical) != has_theory);
    }
    // hash ignores seed and output but not the physics
    auto other = cfg;
    other.seed = 99;
    other.output = "x.csv";
    CHECK(config_hash(other) == config_hash(cfg));
    other.snr.stop_db = 14.0;
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("stopping rule", "[harness]") {
    auto cfg = awgn_config(16, 4, 0.0, 64);
    cfg.snr = {0.0, 20.0, 20.0};
    cfg.trials.min_realizations = 4;
    cfg.trials.target_bit_errors = 200;
    cfg.trials.chunk = 4;
    cfg.schemes = {Scheme::Otfs};
    const auto rep = run_ber_sweep(cfg);
    const auto* low = rep.find("otfs", 0.0);
    const auto* high = rep.find("otfs", 20.0);
    REQUIRE(low);
    REQUIRE(high);
    // 128 bits per frame at BER ~0.16: 200 errors after ~10 frames
    CHECK(low->realizations < 64);
    CHECK(low->realizations % 4 == 0);
    CHECK(low->bit_errors >= 200);
    CHECK(high->realizations == 64);
    CHECK(high->bit_errors == 0);
}

TEST_CASE("noise is calibrated to gamma_in", "[harness]") {
    const auto grid = FrameGrid::make(64, 16, 1e-6, 0.0, 0.0, 0);
    const PathSet paths = awgn_paths();
    for (double snr_db : {0.0, 7.0, 15.0}) {
        double signal = 0.0, noise = 0.0;
        std::size_t samples = 0;
        for (auto scheme : {Scheme::Otfs, Scheme::Ofdm, Scheme::Scfde}) {
            const auto ch = prepare_channel(paths, grid, scheme, {0, 1e-3, true, false});
            EqualizerConfig eq;
            eq.gamma_in = std::pow(10.0, snr_db / 10.0);
            for (std::uint64_t f = 0; f < 350; ++f) {
                auto b = make_stream(11, Stream::Bits, {f});
                auto n = make_stream(11, Stream::Noise, {f});
                const auto frame = simulate_frame(paths, grid, ch, ch.blocks, eq, Propagation::Matrix, b, n);
                for (std::size_t k = 0; k < frame.tx.size(); ++k) {
                    signal += frame.tx[k].squaredNorm();
                    noise += frame.noise[k].squaredNorm();
                    samples += static_cast<std::size_t>(frame.tx[k].size());
                }
            }
        }
        REQUIRE(samples >= 1000000);
        const double measured_db = 10.0 * std::log10(signal / noise);
        CHECK(std::abs(measured_db - snr_db) < 0.1);
    }
}

TEST_CASE("noiseless static channel gives zero errors", "[harness]") {
    auto cfg = awgn_config(32, 8, 80.0, 200);
    const auto rep = run_ber_sweep(cfg);
    REQUIRE(rep.rows.size() == 3);
    for (const auto& r : rep.rows) {
        CHECK(r.bits_total >= 100000);
        CHECK(r.bit_errors == 0);
        CHECK(r.ci_95 == 0.0);
    }
}

TEST_CASE("AWGN sweeps cover the analytic BER", "[harness]") {
    // 93% coverage, estimated over ten blocks of 100 independent sweeps
    const double snr_db = 6.0;
    const double p = q_ref(std::pow(10.0, snr_db / 10.0));
    int covered[3] = {0, 0, 0};
    std::string blocks[3];
    for (int block = 0; block < 10; ++block) {
        int in_block[3] = {0, 0, 0};
        for (std::uint64_t s = 0; s < 100; ++s) {
            auto cfg = awgn_config(16, 4, snr_db, 100);
            cfg.seed = 1000 + 100 * static_cast<std::uint64_t>(block) + s;
            const auto rep = run_ber_sweep(cfg);
            for (int k = 0; k < 3; ++k) {
                const auto& r = rep.rows[static_cast<std::size_t>(k)];
                if (std::abs(r.ber_simulated - p) <= r.ci_95) ++in_block[k];
            }
        }
        for (int k = 0; k < 3; ++k) {
            covered[k] += in_block[k];
            blocks[k] += std::to_string(in_block[k]) + ' ';
        }
    }
    for (int k = 0; k < 3; ++k) {
        INFO("scheme " << k << " covered " << covered[k] << "/1000, per block " << blocks[k]);
        CHECK(covered[k] >= 930);
    }
}

TEST_CASE("theory column matches the analytic AWGN BER", "[harness]") {
    auto cfg = awgn_config(8, 4, 5.0, 3);
    cfg.theory = true;
    const auto rep = run_ber_sweep(cfg);
    for (const auto& r : rep.rows) CHECK(r.ber_theoretical == Approx(q_ref(std::pow(10.0, 0.5))).epsilon(1e-9));
}

TEST_CASE("waveform propagation agrees with the matrix model", "[harness]") {
    auto cfg = awgn_config(16, 4, 4.0, 20);
    const std::string matrix = csv_of(run_ber_sweep(cfg));
    cfg.propagation = Propagation::Waveform;
    const std::string wave = csv_of(run_ber_sweep(cfg));
    // identical rows, different config hash
    CHECK(matrix.substr(matrix.find('\n')) == wave.substr(wave.find('\n')));
    CHECK(matrix != wave);
}

TEST_CASE("validation suite", "[harness]") {
    ExperimentConfig cfg;
    const auto ok = run_validation(cfg);
    CHECK(ok.ok());
    CHECK(ok.checks.size() >= 7);

    cfg.equalizer.stripe_k = 0;
    const auto bad = run_validation(cfg);
    CHECK_FALSE(bad.ok());
    bool reported = false;
    for (const auto& c : bad.checks)
        if (!c.passed && c.detail.find("OutOfStripe") != std::string::npos) reported = true;
    CHECK(reported);

    int failures = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        ExperimentConfig fuzz;
        fuzz.seed = 0x9e3779b97f4a7c15ull * (s + 1);
        failures += run_validation(fuzz).ok() ? 0 : 1;
    }
    CHECK(failures == 0);
}

TEST_CASE("imperfect CSI degrades and one-tap fails on long frames", "[harness]") {
    auto cfg = small_tdl_config();
    cfg.theory = false;
    cfg.trials.max_realizations = 24;
    cfg.trials.min_realizations = 24;
    cfg.snr = {6.0, 6.0, 1.0};
    const auto rep = run_ber_sweep(cfg);
    const auto* perfect = rep.find("otfs", 6.0);
    const auto* imperfect = rep.find("otfs/imperfect", 6.0);
    const auto* one_tap = rep.find("otfs/one-tap", 6.0);
    REQUIRE(perfect);
    REQUIRE(imperfect);
    REQUIRE(one_tap);
    CHECK(imperfect->ber_simulated > perfect->ber_simulated);
    CHECK(one_tap->ber_simulated > 2.0 * perfect->ber_simulated);
}
