#pragma once

// One channel draw, one frame: transmit, propagate, add noise, equalize,
// count bit errors. The sweep and the validation suite are built on these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ffeq/banded.hpp"
#include "ffeq/channel.hpp"
#include "ffeq/equalizer.hpp"
#include "ffeq/harness/config.hpp"
#include "ffeq/harness/rng.hpp"
#include "ffeq/modem.hpp"
#include "ffeq/tdl.hpp"

namespace ffeq::harness {

/// The harness always transmits 4-QAM.
inline constexpr int kQamK = 1;

enum class Variant { Mmse, OneTap, Imperfect };

inline std::string series_label(Scheme s, Variant v) {
    std::string out(to_string(s));
    if (v == Variant::OneTap) out += "/one-tap";
    if (v == Variant::Imperfect) out += "/imperfect";
    return out;
}

/// Static unit-gain single path.
inline PathSet awgn_paths() {
    PathSet p;
    p.add({Complex{1.0, 0.0}, 0.0, 0.0});
    return p;
}

/// Channel draw r of the configured profile.
inline PathSet draw_paths(const ExperimentConfig& cfg, const TdlProfile* profile, const FrameGrid& grid,
                          std::uint64_t realization) {
    if (cfg.awgn()) return awgn_paths();
    auto rng = make_stream(cfg.seed, Stream::Channel, {realization});
    return tdl_realization(*profile, grid, grid.f_max, rng, cfg.doppler_mode);
}

struct ChannelOptions {
    Index stripe_k = 0;
    double max_discarded = 1e-3;
    bool banded = true;      // false: keep every diagonal (lossless, dense solve)
    bool need_time = false;  // also keep dense H_t per block
};

inline ChannelOptions channel_options(const ExperimentConfig& cfg, const FrameGrid& grid) {
    return {stripe_half_width(cfg, grid), cfg.equalizer.max_discarded, cfg.equalizer.banded,
            cfg.equalizer.domain == Domain::Time};
}

/// Everything propagation and the receiver need for one scheme and one draw.
struct SchemeChannel {
    Scheme scheme = Scheme::Otfs;
    std::vector<BlockChannel> blocks;           // receiver view, per equalization block
    std::vector<DenseMatrix> short_time;        // H_t^(n) of each short frame
    std::optional<DelayTimeChannel> long_time;  // long-frame delay-time channel
    double discarded_fraction = 0.0;            // worst block
};

namespace detail {

// Lossless circular-banded copy of a dense matrix: all n diagonals.
inline CircularBandedMatrix full_band(const DenseMatrix& a) {
    const Index n = a.rows();
    return band_from_dense(a, n / 2, n - 1 - n / 2, std::numeric_limits<double>::infinity());
}

inline Index clamp_stripe(Index k, Index order) { return std::min(k, (order - 1) / 2); }

}  // namespace detail

inline SchemeChannel prepare_channel(const PathSet& paths, const FrameGrid& grid, Scheme scheme,
                                     const ChannelOptions& opt) {
    SchemeChannel out;
    out.scheme = scheme;
    if (long_frame(scheme)) {
        out.long_time.emplace(delay_time_samples(paths, grid));
        BlockChannel b;
        if (opt.need_time || !opt.banded) b.time = build_Ht(*out.long_time);
        if (opt.banded) {
            const auto h = build_Hnu(freq_doppler_samples(paths, grid), detail::clamp_stripe(opt.stripe_k, grid.MN()),
                                     opt.max_discarded);
            b.freq = h.matrix;
            out.discarded_fraction = h.discarded_fraction;
        } else {
            b.freq = detail::full_band(ffeq::detail::freq_from_time(b.time));
            if (!opt.need_time) b.time.resize(0, 0);
        }
        out.blocks.push_back(std::move(b));
    } else {
        const Index k = detail::clamp_stripe(opt.stripe_k, grid.M);
        for (Index n = 0; n < grid.N; ++n) {
            auto sf = build_short_frame(paths, grid, n, k, opt.banded ? opt.max_discarded : 1.0);
            BlockChannel b;
            if (opt.banded) {
                b.freq = sf.freq.matrix;
                out.discarded_fraction = std::max(out.discarded_fraction, sf.freq.discarded_fraction);
            } else {
                b.freq = detail::full_band(sf.freq_dense);
            }
            if (opt.need_time) b.time = sf.time_matrix;
            out.short_time.push_back(std::move(sf.time_matrix));
            out.blocks.push_back(std::move(b));
        }
    }
    return out;
}

/// Receiver view with estimation error of variance c/gamma on every stored
/// entry (and on the nonzero entries of H_t when the time domain is used).
template <class Rng>
std::vector<BlockChannel> perturb_blocks(const std::vector<BlockChannel>& blocks, double gamma_in, double c, Rng& rng) {
    std::vector<BlockChannel> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) {
        BlockChannel p;
        if (b.has_freq()) p.freq = perturb_channel(b.freq, gamma_in, c, rng);
        if (b.has_time()) p.time = perturb_channel(b.time, gamma_in, c, rng);
        out.push_back(std::move(p));
    }
    return out;
}

/// 4-QAM grid of the given bits.
inline DataGrid map_bits(const Bits& bits, const FrameGrid& grid) {
    const QamConstellation qam(kQamK);
    return DataGrid(grid.M, grid.N, qam.map(bits));
}

inline std::size_t bits_per_frame(const FrameGrid& grid) {
    return static_cast<std::size_t>(grid.MN() * 2 * kQamK);
}

/// Noiseless channel output per equalization block, prefix removed.
inline std::vector<ComplexVector> channel_output(const PathSet& paths, const FrameGrid& grid, const SchemeChannel& ch,
                                                 const TxFrames& tx, Propagation mode) {
    const Index blocks = static_cast<Index>(tx.frames.size());
    if (mode == Propagation::Waveform) {
        std::mt19937_64 unused(0);
        const ComplexVector r = propagate_waveform(paths, grid.d_r, tx.stream(), tx.payload, tx.cp, unused, 0.0);
        return strip_cp(r, tx.payload, tx.cp, blocks);
    }
    std::vector<ComplexVector> out;
    for (Index b = 0; b < blocks; ++b) {
        const ComplexVector s = tx.payload_of(static_cast<std::size_t>(b));
        if (ch.long_time)
            out.push_back(ch.long_time->apply(s));
        else
            out.push_back(ch.short_time[static_cast<std::size_t>(b)] * s);
    }
    return out;
}

/// Adds sigma_w * w with sigma_w^2 = 1/gamma_in (unit symbol energy);
/// `unit` holds CN(0,1) samples for the whole frame, consumed block by block.
inline std::vector<ComplexVector> add_noise(const std::vector<ComplexVector>& clean, const ComplexVector& unit,
                                            double gamma_in) {
    const double sigma = std::sqrt(1.0 / gamma_in);
    std::vector<ComplexVector> out;
    Index at = 0;
    for (const auto& c : clean) {
        if (at + c.size() > unit.size()) throw DimensionError("add_noise: not enough noise samples");
        out.push_back(c + sigma * unit.segment(at, c.size()));
        at += c.size();
    }
    return out;
}

inline std::uint64_t count_bit_errors(const Bits& a, const Bits& b) {
    if (a.size() != b.size()) throw DimensionError("count_bit_errors: length mismatch");
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] != b[i]);
    return e;
}

/// Equalizes, demodulates and demaps received payloads.
inline std::uint64_t detect_errors(Scheme scheme, const FrameGrid& grid, const std::vector<BlockChannel>& rx_view,
                                   const std::vector<ComplexVector>& received, const EqualizerConfig& eq,
                                   const Bits& sent) {
    const auto res = equalize_frame(scheme, grid.M, grid.N, rx_view, received, 0, eq);
    return count_bit_errors(sent, QamConstellation(kQamK).demap(res.y.x));
}

struct FrameSample {
    Bits bits;
    std::vector<ComplexVector> tx;     // transmitted payload per block
    std::vector<ComplexVector> noise;  // noise added per block
    std::vector<ComplexVector> rx;     // received payload per block
    std::uint64_t bit_errors = 0;
};

/// One complete frame at one SNR. Bits and noise come from the given streams.
template <class Rng>
FrameSample simulate_frame(const PathSet& paths, const FrameGrid& grid, const SchemeChannel& ch,
                           const std::vector<BlockChannel>& rx_view, const EqualizerConfig& eq, Propagation mode,
                           Rng& bit_rng, Rng& noise_rng) {
    FrameSample f;
    f.bits = random_bits(bit_rng, bits_per_frame(grid));
    const TxFrames tx = modulate(ch.scheme, map_bits(f.bits, grid), grid.L_cp);
    for (std::size_t b = 0; b < tx.frames.size(); ++b) f.tx.push_back(tx.payload_of(b));
    const auto clean = channel_output(paths, grid, ch, tx, mode);
    const ComplexVector unit = unit_noise(noise_rng, grid.MN());
    f.rx = add_noise(clean, unit, eq.gamma_in);
    for (std::size_t b = 0; b < clean.size(); ++b) f.noise.push_back(f.rx[b] - clean[b]);
    f.bit_errors = detect_errors(ch.scheme, grid, rx_view, f.rx, eq, f.bits);
    return f;
}

}  // namespace ffeq::harness
