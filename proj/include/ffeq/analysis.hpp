#pragma once

// Post-equalization SNR per data symbol and the resulting QAM bit error
// probability. Dense and cubic: meant for desk-scale analysis.

#include <cmath>
#include <vector>

#include "ffeq/channel.hpp"
#include "ffeq/equalizer.hpp"
#include "ffeq/linalg.hpp"
#include "ffeq/modem.hpp"
#include "ffeq/tdl.hpp"

namespace ffeq {

/// Output SNR gamma_out[m, n], M rows.
struct SnrGrid {
    Eigen::MatrixXd values;

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
    double operator()(Index m, Index n) const { return values(m, n); }
};

struct SpectralSummary {
    RealVector eigenvalues;   // of H^H H, descending
    DenseMatrix projection;   // U = V^H Q
    RealVector noise_power;   // J per symbol, vec order
};

struct AnalysisLimits {
    Index max_order = 4096;
};

namespace detail {

inline Index default_rows(const UnitaryOperator& v) { return v.block(); }

inline void check_analysis_input(const DenseMatrix& h, const UnitaryOperator& v, double gamma_in,
                                 const AnalysisLimits& lim) {
    if (h.rows() != h.cols() || h.rows() != v.size()) throw DimensionError("analysis: H and V orders differ");
    if (h.rows() > lim.max_order)
        throw DimensionError("analysis: order " + std::to_string(h.rows()) + " exceeds the limit of " +
                             std::to_string(lim.max_order));
    if (!(gamma_in > 0.0)) throw Error("analysis: gamma_in must be positive");
}

inline SnrGrid reshape(const RealVector& v, Index rows) {
    SnrGrid g;
    g.values = Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, v.size() / rows);
    return g;
}

}  // namespace detail

/// gamma_out = 1 / (1 - |a|^2 / (c + d/gamma)) - 1 with a = diag(A),
/// c = diag(A A^H), d = diag(B B^H), B = V^H G, A = B H V.
inline SnrGrid output_snr_direct(const DenseMatrix& h, const UnitaryOperator& v, double gamma_in,
                                 const AnalysisLimits& lim = {}) {
    detail::check_analysis_input(h, v, gamma_in, lim);
    const DenseMatrix b = v.adjoint().apply(mmse_matrix(h, gamma_in));
    const DenseMatrix a = v.apply_right(DenseMatrix(b * h));
    RealVector out(h.rows());
    for (Index i = 0; i < h.rows(); ++i) {
        const double num = std::norm(a(i, i));
        const double den = a.row(i).squaredNorm() + b.row(i).squaredNorm() / gamma_in;
        out[i] = std::max(0.0, 1.0 / (1.0 - num / den) - 1.0);
    }
    return detail::reshape(out, detail::default_rows(v));
}

/// Eigendecomposition form. The decomposition of H^H H is done once at
/// construction; any number of gamma values can then be evaluated in
/// O(n^2) each.
class SpectralAnalyzer {
public:
    SpectralAnalyzer(const DenseMatrix& h, const UnitaryOperator& v, const AnalysisLimits& lim = {})
        : rows_(detail::default_rows(v)) {
        detail::check_analysis_input(h, v, 1.0, lim);
        const DenseMatrix hh = h.adjoint() * h;
        // Enforce exact Hermitian symmetry lost to rounding in the product.
        auto eig = eig_hermitian(0.5 * (hh + hh.adjoint()));
        lambda_ = eig.values.cwiseMax(0.0);
        u_ = v.adjoint().apply(eig.vectors);
        u2_ = u_.cwiseAbs2();
    }

    const RealVector& eigenvalues() const noexcept { return lambda_; }
    const DenseMatrix& projection() const noexcept { return u_; }

    RealVector noise_power(double gamma_in) const {
        if (!(gamma_in > 0.0)) throw Error("analysis: gamma_in must be positive");
        const RealVector w = (gamma_in * lambda_.array() + 1.0).inverse().matrix();
        return u2_ * w;
    }

    SnrGrid snr(double gamma_in) const {
        const RealVector j = noise_power(gamma_in);
        return detail::reshape((j.array().inverse() - 1.0).cwiseMax(0.0).matrix(), rows_);
    }

    SpectralSummary summary(double gamma_in) const { return {lambda_, u_, noise_power(gamma_in)}; }

private:
    Index rows_;
    RealVector lambda_;
    DenseMatrix u_;
    Eigen::MatrixXd u2_;
};

/// gamma_out = 1/J - 1 with J_i = sum_k |U_ik|^2 / (gamma lambda_k + 1).
inline std::pair<SnrGrid, SpectralSummary> output_snr_eigen(const DenseMatrix& h, const UnitaryOperator& v,
                                                            double gamma_in, const AnalysisLimits& lim = {}) {
    const SpectralAnalyzer a(h, v, lim);
    return {a.snr(gamma_in), a.summary(gamma_in)};
}

/// Places per-short-frame columns (each M×1) side by side.
inline SnrGrid assemble_short_frames(const std::vector<SnrGrid>& frames) {
    if (frames.empty()) throw DimensionError("assemble_short_frames: no frames");
    const Index m = frames.front().rows();
    SnrGrid g;
    g.values.resize(m, static_cast<Index>(frames.size()));
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].rows() != m || frames[i].cols() != 1) throw DimensionError("assemble_short_frames: shape mismatch");
        g.values.col(static_cast<Index>(i)) = frames[i].values.col(0);
    }
    return g;
}

/// Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Bit error probability of Gray-mapped 2^{2k}-QAM averaged over the grid.
inline double qam_ber(double gamma_out, int k) {
    const double levels = std::pow(4.0, k);
    return 2.0 * (1.0 - std::pow(2.0, -k)) / k * q_function(std::sqrt(3.0 * gamma_out / (levels - 1.0)));
}

inline double theoretical_ber(const SnrGrid& snr, int k = 1) {
    if (k < 1) throw Error("theoretical_ber: k must be at least 1");
    if (snr.values.size() == 0) throw DimensionError("theoretical_ber: empty grid");
    double acc = 0.0;
    for (Index j = 0; j < snr.cols(); ++j)
        for (Index i = 0; i < snr.rows(); ++i) acc += qam_ber(snr(i, j), k);
    return acc / static_cast<double>(snr.values.size());
}

/// Per-scheme analyzers for one channel realization: one long-frame
/// analyzer for OTFS, one per short frame otherwise.
class ChannelAnalysis {
public:
    ChannelAnalysis(const PathSet& paths, const FrameGrid& grid, Scheme scheme, const AnalysisLimits& lim = {}) {
        if (long_frame(scheme)) {
            analyzers_.emplace_back(build_Ht(delay_time_samples(paths, grid)), modulation_operator(scheme, grid.M, grid.N),
                                    lim);
        } else {
            const auto v = modulation_operator(scheme, grid.M, grid.N);
            for (Index n = 0; n < grid.N; ++n)
                analyzers_.emplace_back(build_Ht(DelayTimeChannel(paths, short_frame_window(grid, n))), v, lim);
        }
    }

    SnrGrid snr(double gamma_in) const {
        if (analyzers_.size() == 1) return analyzers_.front().snr(gamma_in);
        std::vector<SnrGrid> cols;
        for (const auto& a : analyzers_) cols.push_back(a.snr(gamma_in));
        return assemble_short_frames(cols);
    }

    double ber(double gamma_in, int k = 1) const { return theoretical_ber(snr(gamma_in), k); }

private:
    std::vector<SpectralAnalyzer> analyzers_;
};

struct ErgodicBer {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> per_realization;
};

/// Monte-Carlo average of theoretical_ber over random profile draws with
/// Doppler up to grid.f_max.
template <class Rng>
ErgodicBer ergodic_ber(const TdlProfile& profile, const FrameGrid& grid, Scheme scheme, double gamma_in,
                       Index n_realizations, Rng& rng, DopplerMode mode = DopplerMode::Continuous, int k = 1,
                       const AnalysisLimits& lim = {}) {
    if (n_realizations < 1) throw Error("ergodic_ber: need at least one realization");
    ErgodicBer out;
    for (Index r = 0; r < n_realizations; ++r) {
        const PathSet paths = tdl_realization(profile, grid, grid.f_max, rng, mode);
        out.per_realization.push_back(ChannelAnalysis(paths, grid, scheme, lim).ber(gamma_in, k));
    }
    const double n = static_cast<double>(n_realizations);
    for (double b : out.per_realization) out.mean += b / n;
    if (n_realizations > 1) {
        double ss = 0.0;
        for (double b : out.per_realization) ss += (b - out.mean) * (b - out.mean);
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

}  // namespace ffeq
