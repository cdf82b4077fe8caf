#pragma once

// Tapped-delay-line power-delay profiles, random channel draws and the
// additive channel-estimation error model.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ffeq/banded.hpp"
#include "ffeq/channel.hpp"
#include "ffeq/error.hpp"

namespace ffeq {

struct TdlTap {
    double delay_norm = 0.0;
    double power_db = 0.0;
};

struct TdlProfile {
    std::string name;
    bool los = false;                    // first tap carries a specular component
    std::optional<double> rician_k_db;   // required when los
    double d_max_s = 0.0;
    std::vector<TdlTap> taps;

    /// Sorts taps by delay (stable, the LOS tap stays first) and checks the
    /// profile is usable.
    void finalize() {
        if (taps.empty()) throw ConfigError("profile '" + name + "': no taps");
        if (d_max_s < 0.0) throw ConfigError("profile '" + name + "': d_max_s must be non-negative");
        for (const auto& t : taps)
            if (t.delay_norm < 0.0 || !std::isfinite(t.power_db))
                throw ConfigError("profile '" + name + "': invalid tap");
        if (los) {
            if (!rician_k_db) throw ConfigError("profile '" + name + "': LOS profile needs rician_k_db");
            for (const auto& t : taps)
                if (t.delay_norm < taps.front().delay_norm)
                    throw ConfigError("profile '" + name + "': LOS tap must have the smallest delay");
        }
        std::stable_sort(taps.begin(), taps.end(),
                         [](const TdlTap& a, const TdlTap& b) { return a.delay_norm < b.delay_norm; });
    }

    /// Tap delays in seconds; the largest equals d_max_s.
    std::vector<double> delays_s() const {
        double top = 0.0;
        for (const auto& t : taps) top = std::max(top, t.delay_norm);
        std::vector<double> d;
        for (const auto& t : taps) d.push_back(top > 0.0 ? t.delay_norm / top * d_max_s : 0.0);
        return d;
    }

    /// Linear tap powers scaled to unit sum.
    std::vector<double> powers() const {
        std::vector<double> p;
        double sum = 0.0;
        for (const auto& t : taps) {
            p.push_back(std::pow(10.0, t.power_db / 10.0));
            sum += p.back();
        }
        for (auto& v : p) v /= sum;
        return p;
    }
};

enum class DopplerMode {
    Continuous,  // uniform on [-f_max, f_max] Hz
    OnGrid,      // uniform integer bin in [-K_max, K_max], times f_r
};

/// One random channel draw. Gains are CN(0, p_i); with a LOS profile the
/// first tap is sqrt(p_0 K/(K+1)) plus CN(0, p_0/(K+1)). Each path gets an
/// independent Doppler shift.
template <class Rng>
PathSet tdl_realization(const TdlProfile& profile, const FrameGrid& grid, double f_max, Rng& rng,
                        DopplerMode mode = DopplerMode::Continuous) {
    const auto delays = profile.delays_s();
    const auto powers = profile.powers();
    std::uniform_real_distribution<double> cont(-f_max, f_max);
    std::uniform_int_distribution<Index> bins(-grid.K_max, grid.K_max);

    PathSet out;
    for (std::size_t i = 0; i < powers.size(); ++i) {
        Complex gain;
        if (i == 0 && profile.los) {
            const double k = std::pow(10.0, *profile.rician_k_db / 10.0);
            gain = std::sqrt(powers[0] * k / (k + 1.0)) + complex_gaussian(rng, powers[0] / (k + 1.0));
        } else {
            gain = complex_gaussian(rng, powers[i]);
        }
        double nu = 0.0;
        if (mode == DopplerMode::Continuous)
            nu = f_max > 0.0 ? cont(rng) : 0.0;
        else
            nu = static_cast<double>(bins(rng)) * grid.f_r;
        out.add({gain, delays[i], nu});
    }
    return out;
}

/// Imperfect CSI: adds CN(0, c/gamma_in) to every stored stripe entry.
template <class Rng>
CircularBandedMatrix perturb_channel(const CircularBandedMatrix& h, double gamma_in, double c, Rng& rng) {
    if (c < 0.0) throw Error("perturb_channel: c must be non-negative");
    if (!(gamma_in > 0.0)) throw Error("perturb_channel: gamma_in must be positive");
    CircularBandedMatrix out = h;
    if (c == 0.0) return out;
    const double var = c / gamma_in;
    for (Index d = -h.upper(); d <= h.lower(); ++d)
        for (Index i = 0; i < h.order(); ++i) out.diag(d, i) += complex_gaussian(rng, var);
    return out;
}

/// Imperfect CSI on a dense matrix: only nonzero entries are perturbed.
template <class Rng>
DenseMatrix perturb_channel(const DenseMatrix& h, double gamma_in, double c, Rng& rng) {
    if (c < 0.0) throw Error("perturb_channel: c must be non-negative");
    if (!(gamma_in > 0.0)) throw Error("perturb_channel: gamma_in must be positive");
    DenseMatrix out = h;
    if (c == 0.0) return out;
    const double var = c / gamma_in;
    for (Index j = 0; j < h.cols(); ++j)
        for (Index i = 0; i < h.rows(); ++i)
            if (h(i, j) != Complex{}) out(i, j) += complex_gaussian(rng, var);
    return out;
}

}  // namespace ffeq
