#pragma once

// Sparse delay-Doppler channel model and its discrete delay-time and
// frequency-Doppler representations on an (M, N) frame grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ffeq/banded.hpp"
#include "ffeq/error.hpp"
#include "ffeq/linalg.hpp"

namespace ffeq {

struct ChannelPath {
    Complex gain;       // linear amplitude
    double delay_s;     // >= 0
    double doppler_hz;  // signed
};

class PathSet {
public:
    PathSet() = default;
    PathSet(std::initializer_list<ChannelPath> paths) : paths_(paths) {}
    explicit PathSet(std::vector<ChannelPath> paths) : paths_(std::move(paths)) {}

    void add(const ChannelPath& p) { paths_.push_back(p); }
    std::size_t size() const noexcept { return paths_.size(); }
    bool empty() const noexcept { return paths_.empty(); }
    const ChannelPath& operator[](std::size_t i) const { return paths_[i]; }
    ChannelPath& operator[](std::size_t i) { return paths_[i]; }
    auto begin() const { return paths_.begin(); }
    auto end() const { return paths_.end(); }
    auto begin() { return paths_.begin(); }
    auto end() { return paths_.end(); }

    double total_power() const {
        double s = 0.0;
        for (const auto& p : paths_) s += std::norm(p.gain);
        return s;
    }

    double max_delay() const {
        double d = 0.0;
        for (const auto& p : paths_) d = std::max(d, p.delay_s);
        return d;
    }

    double max_abs_doppler() const {
        double f = 0.0;
        for (const auto& p : paths_) f = std::max(f, std::abs(p.doppler_hz));
        return f;
    }

private:
    std::vector<ChannelPath> paths_;
};

namespace detail {

// ceil() that ignores floating-point fuzz just above an integer.
inline Index ceil_count(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<Index>(r);
    return static_cast<Index>(std::ceil(x));
}

// sin(pi x) with argument reduction, exact zeros at integers.
inline double sin_pi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0) r += 2.0;
    if (r == 0.0 || r == 1.0) return 0.0;
    return std::sin(kPi * r);
}

inline bool near_integer(double x, double tol = 1e-12) { return std::abs(x - std::round(x)) <= tol; }

inline Index floor_mod(Index a, Index n) {
    const Index r = a % n;
    return r < 0 ? r + n : r;
}

}  // namespace detail

/// Discretization parameters of one long frame of M·N samples.
struct FrameGrid {
    Index M = 1;             // samples per short frame
    Index N = 1;             // short frames per long frame
    double d_r = 1.0;        // delay resolution / sampling period [s]
    double f_r = 1.0;        // Doppler resolution 1/(M N d_r) [Hz]
    Index L_cp = 0;          // cyclic prefix length [samples]
    Index K_max = 0;         // resolvable Doppler bins per side
    Index L_max = 0;         // resolvable multipath taps
    double f_max = 0.0;      // maximum Doppler [Hz]
    double d_max = 0.0;      // maximum excess delay [s]

    Index MN() const noexcept { return M * N; }
    double subcarrier_spacing() const noexcept { return 1.0 / (static_cast<double>(M) * d_r); }
    double short_frame_duration() const noexcept { return static_cast<double>(M) * d_r; }

    /// Builds a grid from primary quantities. A negative cp selects L_max.
    static FrameGrid make(Index m, Index n, double d_r, double f_max, double d_max, Index cp = -1) {
        if (m < 1 || n < 1) throw ConfigError("FrameGrid: M and N must be positive");
        if (!(d_r > 0.0)) throw ConfigError("FrameGrid: delay resolution must be positive");
        if (f_max < 0.0 || d_max < 0.0) throw ConfigError("FrameGrid: f_max and d_max must be non-negative");
        FrameGrid g;
        g.M = m;
        g.N = n;
        g.d_r = d_r;
        g.f_r = 1.0 / (static_cast<double>(m * n) * d_r);
        g.f_max = f_max;
        g.d_max = d_max;
        g.K_max = detail::ceil_count(f_max / g.f_r);
        g.L_max = detail::ceil_count(d_max / d_r);
        g.L_cp = cp < 0 ? g.L_max : cp;
        g.validate();
        return g;
    }

    void validate() const {
        if (M < 1 || N < 1) throw ConfigError("FrameGrid: M and N must be positive");
        if (std::abs(f_r * static_cast<double>(MN()) * d_r - 1.0) > 1e-12)
            throw ConfigError("FrameGrid: f_r * MN * d_r must equal 1");
        if (K_max < 0) throw ConfigError("FrameGrid: K_max must be non-negative");
        if (L_cp < L_max)
            throw ConfigError("FrameGrid: cyclic prefix (" + std::to_string(L_cp) + ") shorter than L_max (" +
                              std::to_string(L_max) + ")");
    }
};

/// Band-limited delay kernel D_P(x) = (1/P) sum_{q=-floor(P/2)}^{P-1-floor(P/2)} e^{j2pi q x/P}.
/// Equals the periodic unit impulse at integer x.
inline Complex delay_kernel(double x, Index period) {
    const double p = static_cast<double>(period);
    if (detail::near_integer(x)) {
        const auto xi = static_cast<Index>(std::llround(x));
        return detail::floor_mod(xi, period) == 0 ? Complex(1.0) : Complex(0.0);
    }
    const double q0 = -static_cast<double>(period / 2);
    const double theta = 2.0 * kPi * x / p;
    const double mag = detail::sin_pi(x) / (p * std::sin(kPi * x / p));
    return std::polar(mag, theta * (q0 + (p - 1.0) / 2.0));
}

/// Causal Doppler kernel E_P(x) = (1/P) sum_{a=0}^{P-1} e^{j2pi a x/P}.
inline Complex doppler_kernel(double x, Index period) {
    const double p = static_cast<double>(period);
    if (detail::near_integer(x)) {
        const auto xi = static_cast<Index>(std::llround(x));
        return detail::floor_mod(xi, period) == 0 ? Complex(1.0) : Complex(0.0);
    }
    const double mag = detail::sin_pi(x) / (p * std::sin(kPi * x / p));
    return std::polar(mag, kPi * x * (p - 1.0) / p);
}

/// Signed frequency index of DFT bin f on a P-point band-limited grid.
inline Index signed_bin(Index f, Index period) {
    return f <= period - 1 - period / 2 ? f : f - period;
}

/// Time-frequency transfer function H(f, t) = sum_i h_i e^{-j2pi f tau_i} e^{j2pi nu_i t}.
inline Complex tf_transfer(const PathSet& paths, double f, double t) {
    Complex acc{};
    for (const auto& p : paths)
        acc += p.gain * std::polar(1.0, -2.0 * kPi * f * p.delay_s) * std::polar(1.0, 2.0 * kPi * p.doppler_hz * t);
    return acc;
}

/// Sampling window shared by the delay-time and frequency-Doppler views:
/// `period` samples of spacing d_r, starting `time_offset` samples after the
/// start of the long frame.
struct SampleWindow {
    double d_r = 1.0;
    Index period = 1;
    Index time_offset = 0;

    double freq_spacing() const noexcept { return 1.0 / (static_cast<double>(period) * d_r); }
};

/// Discrete delay-time channel h_t[i, j] (delay i, time j), evaluated lazily
/// from the path list through the band-limited delay kernel.
class DelayTimeChannel {
public:
    DelayTimeChannel(PathSet paths, SampleWindow w) : paths_(std::move(paths)), w_(w) {}

    const PathSet& paths() const noexcept { return paths_; }
    const SampleWindow& window() const noexcept { return w_; }
    Index size() const noexcept { return w_.period; }

    Complex operator()(Index i, Index j) const {
        Complex acc{};
        for (const auto& p : paths_)
            acc += p.gain * time_phase(p, j) * delay_kernel(static_cast<double>(i) - p.delay_s / w_.d_r, w_.period);
        return acc;
    }

    /// Dense samples S(i, j) = h_t[i, j].
    DenseMatrix samples() const {
        const Index n = w_.period;
        DenseMatrix s = DenseMatrix::Zero(n, n);
        for (const auto& p : paths_) {
            const ComplexVector k = kernel_column(p);
            for (Index j = 0; j < n; ++j) s.col(j) += (p.gain * time_phase(p, j)) * k;
        }
        return s;
    }

    /// r = H_t s without forming H_t: each path is a band-limited circular
    /// delay followed by its Doppler phase ramp.
    ComplexVector apply(const ComplexVector& s) const {
        const Index n = w_.period;
        if (s.size() != n) throw DimensionError("DelayTimeChannel::apply: dimension mismatch");
        ComplexVector r = ComplexVector::Zero(n);
        ComplexVector spectrum;
        std::map<double, ComplexVector> delayed;
        for (const auto& p : paths_) {
            auto it = delayed.find(p.delay_s);
            if (it == delayed.end()) {
                const double x = p.delay_s / w_.d_r;
                ComplexVector d(n);
                if (detail::near_integer(x)) {
                    const Index shift = static_cast<Index>(std::llround(x));
                    for (Index m = 0; m < n; ++m) d[m] = s[detail::floor_mod(m - shift, n)];
                } else {
                    if (spectrum.size() == 0) spectrum = dft(s);
                    ComplexVector t(n);
                    for (Index f = 0; f < n; ++f)
                        t[f] = spectrum[f] * std::polar(1.0, -2.0 * kPi * static_cast<double>(signed_bin(f, n)) * x /
                                                                  static_cast<double>(n));
                    d = idft(t);
                }
                it = delayed.emplace(p.delay_s, std::move(d)).first;
            }
            for (Index m = 0; m < n; ++m) r[m] += p.gain * time_phase(p, m) * it->second[m];
        }
        return r;
    }

    Complex time_phase(const ChannelPath& p, Index j) const {
        return std::polar(1.0, 2.0 * kPi * p.doppler_hz * static_cast<double>(j + w_.time_offset) * w_.d_r);
    }

private:
    ComplexVector kernel_column(const ChannelPath& p) const {
        const Index n = w_.period;
        ComplexVector k(n);
        for (Index i = 0; i < n; ++i) k[i] = delay_kernel(static_cast<double>(i) - p.delay_s / w_.d_r, n);
        return k;
    }

    PathSet paths_;
    SampleWindow w_;
};

/// Discrete frequency-Doppler channel H_nu[f, d] (frequency bin f, Doppler
/// bin d stored circularly), the 2-D DFT of the delay-time samples:
/// H_nu[f, d] = sum_p h_p e^{-j2pi q_f Δ tau_p} e^{j2pi nu_p t0 d_r} E_P(nu_p P d_r - d).
class FreqDopplerChannel {
public:
    FreqDopplerChannel(PathSet paths, SampleWindow w) : paths_(std::move(paths)), w_(w) {}

    const PathSet& paths() const noexcept { return paths_; }
    const SampleWindow& window() const noexcept { return w_; }
    Index size() const noexcept { return w_.period; }

    Complex operator()(Index f, Index d) const {
        const Index n = w_.period;
        const double q = static_cast<double>(signed_bin(detail::floor_mod(f, n), n));
        Complex acc{};
        for (const auto& p : paths_) {
            const double x = p.doppler_hz * static_cast<double>(n) * w_.d_r - static_cast<double>(d);
            acc += p.gain * std::polar(1.0, -2.0 * kPi * q * w_.freq_spacing() * p.delay_s) * offset_phase(p) *
                   doppler_kernel(x, n);
        }
        return acc;
    }

    /// Dense samples S(f, d) = H_nu[f, d].
    DenseMatrix samples() const {
        const Index n = w_.period;
        DenseMatrix s(n, n);
        for (Index d = 0; d < n; ++d)
            for (Index f = 0; f < n; ++f) s(f, d) = (*this)(f, d);
        return s;
    }

    /// Full matrix with entry (m, k) = H_nu[k, (m - k) mod P], no truncation.
    DenseMatrix dense_matrix() const {
        const Index n = w_.period;
        DenseMatrix h(n, n);
        for (Index k = 0; k < n; ++k)
            for (Index m = 0; m < n; ++m) h(m, k) = (*this)(k, detail::floor_mod(m - k, n));
        return h;
    }

    /// ||H_nu||_F^2 in closed form, O(P^2) in the number of paths.
    double total_energy() const {
        const double n = static_cast<double>(w_.period);
        Complex acc{};
        for (const auto& a : paths_)
            for (const auto& b : paths_) {
                const double dtau = (a.delay_s - b.delay_s) / w_.d_r;
                const double dnu = a.doppler_hz - b.doppler_hz;
                const Complex freq_sum = n * delay_kernel(-dtau, w_.period);
                const Complex time_sum =
                    n * doppler_kernel(dnu * n * w_.d_r, w_.period) *
                    std::polar(1.0, 2.0 * kPi * dnu * static_cast<double>(w_.time_offset) * w_.d_r);
                acc += a.gain * std::conj(b.gain) * freq_sum * time_sum;
            }
        return std::max(0.0, acc.real() / n);
    }

private:
    Complex offset_phase(const ChannelPath& p) const {
        return std::polar(1.0, 2.0 * kPi * p.doppler_hz * static_cast<double>(w_.time_offset) * w_.d_r);
    }

    PathSet paths_;
    SampleWindow w_;
};

/// h_t[i, j] on the full MN grid.
inline DelayTimeChannel delay_time_samples(const PathSet& paths, const FrameGrid& grid) {
    return DelayTimeChannel(paths, SampleWindow{grid.d_r, grid.MN(), 0});
}

/// H_nu[i, j] on the full MN grid.
inline FreqDopplerChannel freq_doppler_samples(const PathSet& paths, const FrameGrid& grid) {
    return FreqDopplerChannel(paths, SampleWindow{grid.d_r, grid.MN(), 0});
}

/// Delay-time channel matrix: entry (m, k) = h_t[(m - k) mod P, m].
inline DenseMatrix build_Ht(const DelayTimeChannel& ch) {
    const Index n = ch.size();
    const DenseMatrix s = ch.samples();
    DenseMatrix h(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index m = 0; m < n; ++m) h(m, k) = s(detail::floor_mod(m - k, n), m);
    return h;
}

/// Circular-banded frequency-Doppler matrix with the fraction of
/// ||H_nu||_F^2 that the stripe truncation dropped.
struct BandedChannel {
    CircularBandedMatrix matrix;
    double discarded_fraction = 0.0;
};

/// Frequency-Doppler channel matrix restricted to the circular stripe of
/// half-width stripe_k. OutOfStripeError when the discarded energy fraction
/// exceeds `max_discarded`.
inline BandedChannel build_Hnu(const FreqDopplerChannel& ch, Index stripe_k, double max_discarded = 1e-3) {
    const Index n = ch.size();
    if (stripe_k < 0 || 2 * stripe_k + 1 > n)
        throw DimensionError("build_Hnu: stripe half-width " + std::to_string(stripe_k) + " invalid for order " +
                             std::to_string(n));
    BandedChannel out{CircularBandedMatrix(n, stripe_k, stripe_k), 0.0};
    for (Index d = -stripe_k; d <= stripe_k; ++d)
        for (Index m = 0; m < n; ++m)
            out.matrix.diag(d, m) = ch(detail::floor_mod(m - d, n), detail::floor_mod(d, n));

    const double total = ch.total_energy();
    const double kept = out.matrix.frobenius_squared();
    out.discarded_fraction = total > 0.0 ? std::max(0.0, total - kept) / total : 0.0;
    // Cancellation in total - kept leaves ~1e-15 residue when nothing was dropped.
    if (out.discarded_fraction < 1e-13) out.discarded_fraction = 0.0;
    if (out.discarded_fraction > max_discarded)
        throw OutOfStripeError("build_Hnu: stripe half-width " + std::to_string(stripe_k) + " discards " +
                                   std::to_string(out.discarded_fraction) + " of the channel energy",
                               out.discarded_fraction);
    return out;
}

/// Extracts a stripe from a dense matrix and measures the dropped energy.
inline BandedChannel stripe_from_dense(const DenseMatrix& a, Index stripe_k, double max_discarded) {
    const Index n = a.rows();
    if (stripe_k < 0 || 2 * stripe_k + 1 > n) throw DimensionError("stripe_from_dense: invalid stripe half-width");
    BandedChannel out{CircularBandedMatrix(n, stripe_k, stripe_k), 0.0};
    for (Index d = -stripe_k; d <= stripe_k; ++d)
        for (Index m = 0; m < n; ++m) out.matrix.diag(d, m) = a(m, detail::floor_mod(m - d, n));
    const double total = a.squaredNorm();
    const double kept = out.matrix.frobenius_squared();
    out.discarded_fraction = total > 0.0 ? std::max(0.0, total - kept) / total : 0.0;
    if (out.discarded_fraction < 1e-13) out.discarded_fraction = 0.0;
    if (out.discarded_fraction > max_discarded)
        throw OutOfStripeError("stripe half-width " + std::to_string(stripe_k) + " discards " +
                                   std::to_string(out.discarded_fraction) + " of the channel energy",
                               out.discarded_fraction);
    return out;
}

/// Sample window of the n-th short frame: M samples starting n(M + L_cp)
/// samples into the long frame.
inline SampleWindow short_frame_window(const FrameGrid& grid, Index n) {
    if (n < 0 || n >= grid.N) throw DimensionError("short frame index out of range");
    return SampleWindow{grid.d_r, grid.M, n * (grid.M + grid.L_cp)};
}

struct ShortFrameChannel {
    DenseMatrix time_matrix;   // H_t^(n), M×M
    DenseMatrix freq_dense;    // F_M H_t^(n) F_M^H, untruncated
    BandedChannel freq;        // stripe of freq_dense
};

/// Channel matrices seen by the n-th short frame of M samples.
inline ShortFrameChannel build_short_frame(const PathSet& paths, const FrameGrid& grid, Index n, Index stripe_k,
                                           double max_discarded = 1e-3) {
    const DelayTimeChannel ht(paths, short_frame_window(grid, n));
    ShortFrameChannel out;
    out.time_matrix = build_Ht(ht);
    const UnitaryOperator f = UnitaryOperator::dft(grid.M);
    out.freq_dense = f.adjoint().apply_right(f.apply(out.time_matrix));
    out.freq = stripe_from_dense(out.freq_dense, stripe_k, max_discarded);
    return out;
}

/// phi(w) = sin(wM/2) / (M sin(w/2)) e^{-jw(M-1)/2}, the transform of an
/// M-sample rectangular window.
inline Complex rect_window_transform(double w, Index m) {
    const double md = static_cast<double>(m);
    const double s = std::sin(w / 2.0);
    if (std::abs(s) < 1e-14) {
        // w = 2 pi k: the window sum is M e^{-j w a} = M for every a.
        return Complex(1.0);
    }
    return std::polar(std::sin(w * md / 2.0) / (md * s), -w * (md - 1.0) / 2.0);
}

/// Short-frame frequency-Doppler matrix evaluated directly from the long
/// frame samples: window convolution over Doppler lines j' in
/// [-span, span], phase-rotated by the frame position and downsampled by N.
/// Exact for on-grid Doppler inside the span.
inline DenseMatrix short_frame_hnu_windowed(const PathSet& paths, const FrameGrid& grid, Index n, Index span) {
    const Index m = grid.M;
    const Index mn = grid.MN();
    const FreqDopplerChannel full = freq_doppler_samples(paths, grid);
    DenseMatrix samples(m, m);  // [i, j]
    for (Index i = 0; i < m; ++i) {
        std::vector<Complex> line(static_cast<std::size_t>(2 * span + 1));
        for (Index jp = -span; jp <= span; ++jp)
            line[static_cast<std::size_t>(jp + span)] = full(i * grid.N, detail::floor_mod(jp, mn));
        for (Index j = 0; j < m; ++j) {
            Complex acc{};
            for (Index jp = -span; jp <= span; ++jp) {
                const double phase = 2.0 * kPi * static_cast<double>((grid.M + grid.L_cp) * n * jp) /
                                     static_cast<double>(mn);
                const double w = 2.0 * kPi / static_cast<double>(mn) * static_cast<double>(j * grid.N - jp);
                acc += std::polar(1.0, phase) * line[static_cast<std::size_t>(jp + span)] *
                       rect_window_transform(w, m);
            }
            samples(i, j) = acc;
        }
    }
    DenseMatrix h(m, m);
    for (Index k = 0; k < m; ++k)
        for (Index r = 0; r < m; ++r) h(r, k) = samples(k, detail::floor_mod(r - k, m));
    return h;
}

/// Smallest number of whole delay taps covering every path.
inline Index required_taps(const PathSet& paths, double d_r) {
    return detail::ceil_count(paths.max_delay() / d_r);
}

/// Complex Gaussian CN(0, var).
template <class Rng>
Complex complex_gaussian(Rng& rng, double var) {
    std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

/// Passes a stream of CP-prefixed frames through the linear time-varying
/// convolution r[t] = sum_{i=0}^{cp} h_t(i, t) s[t - i] with additive
/// CN(0, noise_var) noise. Stream index cp corresponds to time zero of the
/// long frame; each frame occupies cp + frame_len samples.
template <class Rng>
ComplexVector propagate_waveform(const PathSet& paths, double d_r, const ComplexVector& stream, Index frame_len,
                                 Index cp, Rng& rng, double noise_var) {
    if (required_taps(paths, d_r) > cp)
        throw CyclicPrefixError("propagate_waveform: cyclic prefix of " + std::to_string(cp) +
                                " samples shorter than the channel delay spread (" +
                                std::to_string(required_taps(paths, d_r)) + " taps)");
    const Index len = stream.size();
    std::vector<ComplexVector> taps;
    taps.reserve(paths.size());
    for (const auto& p : paths) {
        ComplexVector k(cp + 1);
        for (Index i = 0; i <= cp; ++i) k[i] = p.gain * delay_kernel(static_cast<double>(i) - p.delay_s / d_r, frame_len);
        taps.push_back(std::move(k));
    }
    ComplexVector r = ComplexVector::Zero(len);
    for (Index s = 0; s < len; ++s) {
        const double t = static_cast<double>(s - cp) * d_r;
        Complex acc{};
        for (std::size_t p = 0; p < paths.size(); ++p) {
            Complex conv{};
            for (Index i = 0; i <= cp && i <= s; ++i) conv += taps[p][i] * stream[s - i];
            acc += std::polar(1.0, 2.0 * kPi * paths[p].doppler_hz * t) * conv;
        }
        r[s] = acc;
    }
    if (noise_var > 0.0)
        for (Index s = 0; s < len; ++s) r[s] += complex_gaussian(rng, noise_var);
    return r;
}

template <class Rng>
ComplexVector propagate_waveform(const PathSet& paths, const FrameGrid& grid, const ComplexVector& stream,
                                 Index frame_len, Rng& rng, double noise_var) {
    return propagate_waveform(paths, grid.d_r, stream, frame_len, grid.L_cp, rng, noise_var);
}

}  // namespace ffeq
