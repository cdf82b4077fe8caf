#pragma once

// Desk-scale property checks across modules, run by `ffeq_sim validate`.

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ffeq/analysis.hpp"
#include "ffeq/banded.hpp"
#include "ffeq/channel.hpp"
#include "ffeq/equalizer.hpp"
#include "ffeq/harness/config.hpp"
#include "ffeq/harness/rng.hpp"
#include "ffeq/harness/simulate.hpp"
#include "ffeq/modem.hpp"

namespace ffeq::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return !checks.empty();
    }

    void print(std::ostream& out) const {
        for (const auto& c : checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// Random paths: delays in [0, max_tap] samples (tap-aligned when asked),
// Doppler either integer bins in [-k, k] or continuous in (-k, k) bins.
template <class Rng>
PathSet random_paths(Rng& rng, const FrameGrid& g, int count, Index max_tap, Index k, bool on_grid_doppler,
                     bool tap_delays) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<Index> tap(0, max_tap);
    std::uniform_int_distribution<Index> bin(-k, k);
    PathSet p;
    for (int i = 0; i < count; ++i) {
        const double delay = tap_delays ? static_cast<double>(tap(rng)) : u(rng) * static_cast<double>(max_tap);
        const double nu = on_grid_doppler ? static_cast<double>(bin(rng)) : (2.0 * u(rng) - 1.0) * static_cast<double>(k);
        p.add({complex_gaussian(rng, 1.0 / count), delay * g.d_r, nu * g.f_r});
    }
    return p;
}

inline double rel_err(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel_err(const ComplexVector& a, const ComplexVector& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

template <class Body>
CheckResult run_check(const std::string& name, Body body) {
    CheckResult c{name, false, ""};
    try {
        body(c);
    } catch (const OutOfStripeError& e) {
        c.passed = false;
        c.detail = std::string("OutOfStripe: ") + e.what();
    } catch (const std::exception& e) {
        c.passed = false;
        c.detail = std::string("error: ") + e.what();
    }
    return c;
}

}  // namespace detail

/// Runs every check with streams derived from cfg.seed. The stripe check
/// uses cfg.equalizer.stripe_k (auto: K_max) on a channel with K_max = 2.
inline ValidationReport run_validation(const ExperimentConfig& cfg) {
    using detail::fmt;
    using detail::rel_err;
    ValidationReport rep;
    const auto small = FrameGrid::make(8, 4, 1.0, 2.0 / 32.0, 3.0, 3);

    rep.checks.push_back(detail::run_check("frequency-doppler similarity", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {1});
        const auto f = UnitaryOperator::dft(small.MN());
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const PathSet p = detail::random_paths(rng, small, 4, 3, 2, t % 2 == 0, false);
            const DenseMatrix ht = build_Ht(delay_time_samples(p, small));
            const DenseMatrix hnu = freq_doppler_samples(p, small).dense_matrix();
            worst = std::max(worst, rel_err(f.adjoint().apply_right(f.apply(ht)), hnu));
        }
        c.passed = worst <= 1e-9;
        c.detail = fmt("max relative error %.3g over 20 channels", worst);
    }));

    rep.checks.push_back(detail::run_check("time vs frequency MMSE", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {2});
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const PathSet p = detail::random_paths(rng, small, 4, 3, 2, true, false);
            const DenseMatrix ht = build_Ht(delay_time_samples(p, small));
            const auto hnu = build_Hnu(freq_doppler_samples(p, small), small.K_max, 1e-9);
            const ComplexVector r = unit_noise(rng, small.MN());
            const double gamma = std::pow(10.0, static_cast<double>(t % 5));
            const ComplexVector st = mmse_time(ht, r, gamma);
            const ComplexVector sf = idft(mmse_freq(hnu.matrix, dft(r), gamma));
            worst = std::max(worst, rel_err(sf, st));
        }
        c.passed = worst <= 1e-9;
        c.detail = fmt("max relative difference %.3g over 20 channels", worst);
    }));

    rep.checks.push_back(detail::run_check("output SNR direct vs eigen", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {3});
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const PathSet p = detail::random_paths(rng, small, 4, 3, 2, false, false);
            const DenseMatrix ht = build_Ht(delay_time_samples(p, small));
            const double gamma = std::pow(10.0, 0.5 * static_cast<double>(t % 6));
            for (auto s : {Scheme::Otfs, Scheme::Ofdm, Scheme::Scfde}) {
                const auto v = long_frame_operator(s, small.M, small.N);
                const auto d = output_snr_direct(ht, v, gamma).values;
                const auto e = output_snr_eigen(ht, v, gamma).first.values;
                worst = std::max(worst, ((d - e).array().abs() / e.array().abs().max(1e-300)).maxCoeff());
            }
        }
        c.passed = worst <= 1e-8;
        c.detail = fmt("max entrywise relative difference %.3g", worst);
    }));

    rep.checks.push_back(detail::run_check("banded vs dense solve", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {4});
        std::uniform_int_distribution<Index> order(9, 64), band(0, 4);
        double worst = 0.0;
        for (int t = 0; t < 40; ++t) {
            const Index n = order(rng), k = band(rng);
            CircularBandedMatrix a(n, k, k);
            for (Index d = -k; d <= k; ++d)
                for (Index i = 0; i < n; ++i) a.diag(d, i) = complex_gaussian(rng, 1.0);
            for (Index i = 0; i < n; ++i) a.diag(0, i) += static_cast<double>(2 * k + 2);
            const ComplexVector b = unit_noise(rng, n);
            const ComplexVector x = band_solve(a, b);
            const ComplexVector ref = a.dense().partialPivLu().solve(b);
            worst = std::max(worst, rel_err(x, ref));
        }
        c.passed = worst <= 1e-9;
        c.detail = fmt("max relative difference %.3g over 40 systems", worst);
    }));

    rep.checks.push_back(detail::run_check("waveform vs matrix model", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {5});
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const PathSet p = detail::random_paths(rng, small, 4, small.L_max, 2, false, true);
            for (auto s : {Scheme::Otfs, Scheme::Ofdm}) {
                const SchemeChannel ch = prepare_channel(p, small, s, {small.K_max, 1.0, true, false});
                const Bits bits = random_bits(rng, bits_per_frame(small));
                const TxFrames tx = modulate(s, map_bits(bits, small), small.L_cp);
                const auto wave = channel_output(p, small, ch, tx, Propagation::Waveform);
                const auto mat = channel_output(p, small, ch, tx, Propagation::Matrix);
                for (std::size_t b = 0; b < wave.size(); ++b) worst = std::max(worst, rel_err(wave[b], mat[b]));
            }
        }
        c.passed = worst <= 1e-9;
        c.detail = fmt("max relative difference %.3g over 10 channels", worst);
    }));

    rep.checks.push_back(detail::run_check("stripe captures the channel", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {6});
        const auto g = FrameGrid::make(16, 8, 1.0, 2.0 / 128.0, 4.0, 4);
        const Index k = cfg.equalizer.stripe_k < 0 ? g.K_max : cfg.equalizer.stripe_k;
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            PathSet p = detail::random_paths(rng, g, 4, 4, g.K_max, true, false);
            p[0].doppler_hz = static_cast<double>(g.K_max) * g.f_r;  // reach the band edge
            worst = std::max(worst, build_Hnu(freq_doppler_samples(p, g), k, 1e-12).discarded_fraction);
        }
        c.passed = true;
        c.detail = fmt("stripe half-width %.0f on K_max = %.0f channels", static_cast<double>(k),
                       static_cast<double>(g.K_max)) +
                   fmt(", worst discarded fraction %.3g", worst);
    }));

    rep.checks.push_back(detail::run_check("noiseless bit loop", [&](CheckResult& c) {
        auto rng = make_stream(cfg.seed, Stream::Validation, {7});
        std::uint64_t errors = 0, bits = 0;
        for (int t = 0; t < 5; ++t) {
            const PathSet p = detail::random_paths(rng, small, 3, 3, 2, true, false);
            for (auto s : {Scheme::Otfs, Scheme::Ofdm, Scheme::Scfde}) {
                // Short frames always leak outside a narrow stripe; keep them whole here.
                const bool banded = long_frame(s);
                const SchemeChannel ch = prepare_channel(p, small, s, {small.K_max, 1.0, banded, false});
                EqualizerConfig eq;
                eq.gamma_in = 1e10;
                eq.banded = banded;
                auto b_rng = make_stream(cfg.seed, Stream::Bits, {static_cast<std::uint64_t>(t)});
                auto n_rng = make_stream(cfg.seed, Stream::Noise, {static_cast<std::uint64_t>(t)});
                const auto f = simulate_frame(p, small, ch, ch.blocks, eq, Propagation::Matrix, b_rng, n_rng);
                errors += f.bit_errors;
                bits += f.bits.size();
            }
        }
        c.passed = errors == 0;
        c.detail = fmt("%.0f bit errors in %.0f bits at 100 dB", static_cast<double>(errors), static_cast<double>(bits));
    }));
    return rep;
}

}  // namespace ffeq::harness
