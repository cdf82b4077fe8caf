#pragma once

// Linear MMSE equalization in the delay-time and frequency-Doppler domains,
// and the one-tap frequency-domain baseline.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "ffeq/banded.hpp"
#include "ffeq/error.hpp"
#include "ffeq/linalg.hpp"
#include "ffeq/modem.hpp"

namespace ffeq {

enum class Domain { Time, Frequency };
enum class EqualizerKind { Mmse, OneTap };

struct EqualizerConfig {
    double gamma_in = 1.0;  // sigma_x^2 / sigma_w^2 with sigma_x^2 = 1
    Domain domain = Domain::Frequency;
    bool banded = true;     // frequency domain: stripe solver, else dense solve of H_nu
    EqualizerKind kind = EqualizerKind::Mmse;
    bool compute_mse = false;

    void validate() const {
        if (!(gamma_in > 0.0)) throw Error("EqualizerConfig: gamma_in must be positive");
    }
};

namespace detail {

inline DenseMatrix regularized_gram(const DenseMatrix& h, double gamma_in) {
    DenseMatrix g = h * h.adjoint();
    g.diagonal().array() += 1.0 / gamma_in;
    return g;
}

inline Eigen::LLT<DenseMatrix> factor_gram(const DenseMatrix& h, double gamma_in) {
    if (h.rows() != h.cols()) throw DimensionError("mmse: channel matrix is not square");
    if (!(gamma_in > 0.0)) throw Error("mmse: gamma_in must be positive");
    Eigen::LLT<DenseMatrix> llt(regularized_gram(h, gamma_in));
    if (llt.info() != Eigen::Success) throw SingularError("mmse: regularized Gram is not positive definite");
    return llt;
}

}  // namespace detail

/// Dense MMSE estimate H^H (H H^H + I/gamma)^{-1} r.
inline ComplexVector mmse_dense(const DenseMatrix& h, const ComplexVector& r, double gamma_in) {
    if (r.size() != h.rows()) throw DimensionError("mmse: received vector has wrong length");
    const auto llt = detail::factor_gram(h, gamma_in);
    return h.adjoint() * llt.solve(r);
}

/// Dense MMSE matrix G = H^H (H H^H + I/gamma)^{-1}.
inline DenseMatrix mmse_matrix(const DenseMatrix& h, double gamma_in) {
    const auto llt = detail::factor_gram(h, gamma_in);
    return llt.solve(h).adjoint();  // (Gram^{-1} H)^H, Gram Hermitian
}

/// Time-domain MMSE: s_hat = G_t r. Reference path, cubic in the order.
inline ComplexVector mmse_time(const DenseMatrix& h_t, const ComplexVector& r, double gamma_in) {
    return mmse_dense(h_t, r, gamma_in);
}

/// Frequency-domain MMSE on the circular stripe: S_hat = H^H x with
/// (H H^H + I/gamma) x = R solved by banded elimination.
inline ComplexVector mmse_freq(const CircularBandedMatrix& h_nu, const ComplexVector& R, double gamma_in,
                               OpCounter* ops = nullptr) {
    if (R.size() != h_nu.order()) throw DimensionError("mmse_freq: received vector has wrong length");
    const CircularBandedMatrix gram = band_gram(h_nu, gamma_in, ops);
    const ComplexVector x = band_solve(gram, R, ops);
    return band_adjoint_apply(h_nu, x, ops);
}

/// Per-bin scalar MMSE using only the main diagonal of H_nu.
inline ComplexVector one_tap_fde(const ComplexVector& h_diag, const ComplexVector& R, double gamma_in) {
    if (h_diag.size() != R.size()) throw DimensionError("one_tap_fde: length mismatch");
    if (!(gamma_in > 0.0)) throw Error("one_tap_fde: gamma_in must be positive");
    ComplexVector s(R.size());
    for (Index i = 0; i < R.size(); ++i)
        s[i] = std::conj(h_diag[i]) * R[i] / (std::norm(h_diag[i]) + 1.0 / gamma_in);
    return s;
}

/// Channel of one equalization block: the whole MN frame for OTFS or one
/// short frame otherwise. Either representation may be absent (size 0).
struct BlockChannel {
    DenseMatrix time;             // H_t
    CircularBandedMatrix freq;    // H_nu stripe

    bool has_time() const noexcept { return time.size() > 0; }
    bool has_freq() const noexcept { return freq.order() > 0; }
    Index order() const noexcept { return has_time() ? time.rows() : freq.order(); }
};

struct EqualizationResult {
    std::vector<ComplexVector> estimate;  // time-domain s_hat per block
    DataGrid y;                           // V^H s_hat
    RealVector mse;                       // per-symbol normalized MSE, empty unless requested
    double wall_seconds = 0.0;
    std::uint64_t ops = 0;                // multiply/divide count of the banded path
};

namespace detail {

inline DenseMatrix freq_from_time(const DenseMatrix& h_t) {
    const auto f = UnitaryOperator::dft(h_t.rows());
    return f.adjoint().apply_right(f.apply(h_t));
}

// Estimator of one block as a dense matrix W acting on the time-domain
// received payload.
inline DenseMatrix block_estimator(const BlockChannel& ch, const EqualizerConfig& cfg) {
    const Index n = ch.order();
    const auto f = UnitaryOperator::dft(n);
    if (cfg.kind == EqualizerKind::OneTap) {
        const ComplexVector d = ch.has_freq() ? ch.freq.main_diagonal() : ComplexVector(freq_from_time(ch.time).diagonal());
        ComplexVector g(n);
        for (Index i = 0; i < n; ++i) g[i] = std::conj(d[i]) / (std::norm(d[i]) + 1.0 / cfg.gamma_in);
        return f.apply_right(f.adjoint().apply(DenseMatrix(g.asDiagonal())));
    }
    if (cfg.domain == Domain::Time) return mmse_matrix(ch.time, cfg.gamma_in);
    return f.apply_right(f.adjoint().apply(mmse_matrix(ch.freq.dense(), cfg.gamma_in)));
}

// Per-symbol MSE of y = V^H W (H V x + w):
// ||row_i(A - I)||^2 + ||row_i(B)||^2 / gamma with B = V^H W, A = B H V.
inline RealVector block_mse(const DenseMatrix& h_t, const DenseMatrix& w, const UnitaryOperator& v, double gamma_in) {
    const DenseMatrix b = v.adjoint().apply(w);
    DenseMatrix a = v.apply_right(DenseMatrix(b * h_t));
    a.diagonal().array() -= 1.0;
    RealVector out(a.rows());
    for (Index i = 0; i < a.rows(); ++i) out[i] = a.row(i).squaredNorm() + b.row(i).squaredNorm() / gamma_in;
    return out;
}

}  // namespace detail

/// Removes the prefix from each received frame, equalizes each block in the
/// configured domain and demodulates with V^H. OTFS takes one block of order
/// MN; OFDM and SC-FDE take N blocks of order M.
inline EqualizationResult equalize_frame(Scheme scheme, Index m, Index n, const std::vector<BlockChannel>& channels,
                                         const std::vector<ComplexVector>& received, Index cp,
                                         const EqualizerConfig& cfg) {
    cfg.validate();
    const Index blocks = long_frame(scheme) ? 1 : n;
    const Index order = long_frame(scheme) ? m * n : m;
    if (static_cast<Index>(channels.size()) != blocks || static_cast<Index>(received.size()) != blocks)
        throw DimensionError("equalize_frame: expected " + std::to_string(blocks) + " blocks for " +
                             std::string(to_string(scheme)));
    for (const auto& c : channels)
        if (c.order() != order) throw DimensionError("equalize_frame: block channel has wrong order");

    const auto t0 = std::chrono::steady_clock::now();
    OpCounter ops;
    EqualizationResult res;
    for (Index b = 0; b < blocks; ++b) {
        const auto& ch = channels[static_cast<std::size_t>(b)];
        const auto& frame = received[static_cast<std::size_t>(b)];
        if (frame.size() != order + cp) throw DimensionError("equalize_frame: received frame has wrong length");
        const ComplexVector r = frame.tail(order);

        ComplexVector s_hat;
        if (cfg.kind == EqualizerKind::OneTap) {
            const ComplexVector d =
                ch.has_freq() ? ch.freq.main_diagonal() : ComplexVector(detail::freq_from_time(ch.time).diagonal());
            s_hat = idft(one_tap_fde(d, dft(r), cfg.gamma_in));
        } else if (cfg.domain == Domain::Time) {
            if (!ch.has_time()) throw DimensionError("equalize_frame: time-domain MMSE needs H_t");
            s_hat = mmse_time(ch.time, r, cfg.gamma_in);
        } else {
            if (!ch.has_freq()) throw DimensionError("equalize_frame: frequency-domain MMSE needs H_nu");
            const ComplexVector R = dft(r);
            const ComplexVector S = cfg.banded ? mmse_freq(ch.freq, R, cfg.gamma_in, &ops)
                                               : mmse_dense(ch.freq.dense(), R, cfg.gamma_in);
            s_hat = idft(S);
        }
        res.estimate.push_back(std::move(s_hat));
    }
    res.y = demodulate(scheme, res.estimate, m, n);
    res.ops = ops.mul_div;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (cfg.compute_mse) {
        res.mse.resize(m * n);
        const UnitaryOperator v = modulation_operator(scheme, m, n);
        for (Index b = 0; b < blocks; ++b) {
            const auto& ch = channels[static_cast<std::size_t>(b)];
            const auto f = UnitaryOperator::dft(order);
            const DenseMatrix h_t =
                ch.has_time() ? ch.time : DenseMatrix(f.apply_right(f.adjoint().apply(ch.freq.dense())));
            res.mse.segment(b * order, order) = detail::block_mse(h_t, detail::block_estimator(ch, cfg), v, cfg.gamma_in);
        }
    }
    return res;
}

}  // namespace ffeq
