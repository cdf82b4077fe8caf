#pragma once

// Gray-mapped square QAM and the OTFS / OFDM / SC-FDE transmitters written
// as x -> V x with a unitary V.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ffeq/error.hpp"
#include "ffeq/linalg.hpp"

namespace ffeq {

enum class Scheme { Otfs, Ofdm, Scfde };

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::Otfs: return "otfs";
        case Scheme::Ofdm: return "ofdm";
        case Scheme::Scfde: return "scfde";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view text) {
    std::string t;
    for (char c : text)
        if (c != '-' && c != '_') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "otfs") return Scheme::Otfs;
    if (t == "ofdm") return Scheme::Ofdm;
    if (t == "scfde") return Scheme::Scfde;
    throw ConfigError("unknown scheme '" + std::string(text) + "'");
}

/// True when the scheme equalizes one long MN frame rather than N short ones.
inline bool long_frame(Scheme s) noexcept { return s == Scheme::Otfs; }

using Bits = std::vector<std::uint8_t>;

/// Square 2^{2k}-QAM with unit average energy. Of the 2k bits of a symbol
/// the first k select the in-phase level and the last k the quadrature
/// level, both Gray coded, most significant bit first. Axis position p
/// (the inverse Gray code of the bits) maps to level (2^k - 1) - 2p, so the
/// all-zero symbol is (+1 + j)/sqrt(2) for 4-QAM.
class QamConstellation {
public:
    explicit QamConstellation(int k = 1) : k_(k) {
        if (k < 1 || k > 8) throw Error("QamConstellation: k must lie in [1, 8]");
        levels_ = 1 << k;
        scale_ = 1.0 / std::sqrt(2.0 * (static_cast<double>(levels_) * levels_ - 1.0) / 3.0);
    }

    int k() const noexcept { return k_; }
    int bits_per_symbol() const noexcept { return 2 * k_; }
    double scale() const noexcept { return scale_; }

    /// Constellation point of a 2k-bit label (I bits in the high half).
    Complex point(unsigned label) const {
        const unsigned mask = static_cast<unsigned>(levels_ - 1);
        return {level(gray_decode((label >> k_) & mask)), level(gray_decode(label & mask))};
    }

    ComplexVector map(const Bits& bits) const {
        const auto b = static_cast<std::size_t>(bits_per_symbol());
        if (bits.size() % b != 0) throw DimensionError("qam map: bit count not a multiple of 2k");
        ComplexVector s(static_cast<Index>(bits.size() / b));
        for (Index i = 0; i < s.size(); ++i) {
            unsigned label = 0;
            for (std::size_t j = 0; j < b; ++j) label = (label << 1) | (bits[static_cast<std::size_t>(i) * b + j] & 1u);
            s[i] = point(label);
        }
        return s;
    }

    /// Hard-decision demapping to the nearest point.
    Bits demap(const ComplexVector& s) const {
        Bits out;
        out.reserve(static_cast<std::size_t>(s.size() * bits_per_symbol()));
        for (Index i = 0; i < s.size(); ++i) {
            push_bits(out, gray_encode(nearest(s[i].real())));
            push_bits(out, gray_encode(nearest(s[i].imag())));
        }
        return out;
    }

    static unsigned gray_encode(unsigned p) noexcept { return p ^ (p >> 1); }
    static unsigned gray_decode(unsigned g) noexcept {
        unsigned p = g;
        for (unsigned s = g >> 1; s; s >>= 1) p ^= s;
        return p;
    }

private:
    double level(unsigned p) const { return (static_cast<double>(levels_ - 1) - 2.0 * p) * scale_; }

    unsigned nearest(double v) const {
        const double p = std::round((static_cast<double>(levels_ - 1) - v / scale_) / 2.0);
        return static_cast<unsigned>(std::clamp(p, 0.0, static_cast<double>(levels_ - 1)));
    }

    void push_bits(Bits& out, unsigned g) const {
        for (int j = k_ - 1; j >= 0; --j) out.push_back(static_cast<std::uint8_t>((g >> j) & 1u));
    }

    int k_;
    int levels_;
    double scale_;
};

/// M×N grid of data symbols stored as x = vec(X), x[nM + m] = X[m, n].
struct DataGrid {
    Index M = 0;
    Index N = 0;
    ComplexVector x;

    DataGrid() = default;
    DataGrid(Index m, Index n) : M(m), N(n), x(ComplexVector::Zero(m * n)) {}
    DataGrid(Index m, Index n, ComplexVector v) : M(m), N(n), x(std::move(v)) {
        if (x.size() != m * n) throw DimensionError("DataGrid: vector length is not M*N");
    }

    Complex& operator()(Index m, Index n) { return x[n * M + m]; }
    Complex operator()(Index m, Index n) const { return x[n * M + m]; }

    DenseMatrix matrix() const { return Eigen::Map<const DenseMatrix>(x.data(), M, N); }
    static DataGrid from_matrix(const DenseMatrix& X) {
        return DataGrid(X.rows(), X.cols(), Eigen::Map<const ComplexVector>(X.data(), X.size()));
    }

    /// Column n, the data of short frame n.
    ComplexVector column(Index n) const { return x.segment(n * M, M); }
};

/// Modulation operator V: F_N^H ⊗ I_M (OTFS, order MN), F_M^H (OFDM,
/// order M) or I_M (SC-FDE, order M).
inline UnitaryOperator modulation_operator(Scheme s, Index m, Index n) {
    switch (s) {
        case Scheme::Otfs: return UnitaryOperator::kron_idft(n, m);
        case Scheme::Ofdm: return UnitaryOperator::idft(m);
        case Scheme::Scfde: return UnitaryOperator::identity(m);
    }
    return UnitaryOperator::identity(m);
}

/// V acting on the whole M×N grid: the short-frame schemes repeat their
/// per-frame operator block-diagonally.
inline UnitaryOperator long_frame_operator(Scheme s, Index m, Index n) {
    switch (s) {
        case Scheme::Otfs: return UnitaryOperator::kron_idft(n, m);
        case Scheme::Ofdm: return UnitaryOperator::block_idft(n, m);
        case Scheme::Scfde: return UnitaryOperator::identity(m * n, m);
    }
    return UnitaryOperator::identity(m * n, m);
}

/// Transmit frames, each a cyclic prefix followed by the payload.
struct TxFrames {
    Index payload = 0;
    Index cp = 0;
    std::vector<ComplexVector> frames;

    /// Frames back to back.
    ComplexVector stream() const {
        ComplexVector s(static_cast<Index>(frames.size()) * (payload + cp));
        for (std::size_t i = 0; i < frames.size(); ++i) s.segment(static_cast<Index>(i) * (payload + cp), payload + cp) = frames[i];
        return s;
    }

    ComplexVector payload_of(std::size_t i) const { return frames[i].tail(payload); }
};

inline ComplexVector add_cp(const ComplexVector& s, Index cp) {
    if (cp > s.size()) throw DimensionError("cyclic prefix longer than the frame");
    ComplexVector out(s.size() + cp);
    out << s.tail(cp), s;
    return out;
}

/// OTFS emits one MN-sample frame with one prefix; OFDM and SC-FDE emit N
/// frames of M samples, each with its own prefix.
inline TxFrames modulate(Scheme s, const DataGrid& X, Index cp) {
    if (cp < 0) throw DimensionError("modulate: negative cyclic prefix");
    TxFrames tx;
    tx.cp = cp;
    if (long_frame(s)) {
        tx.payload = X.M * X.N;
        tx.frames.push_back(add_cp(modulation_operator(s, X.M, X.N).apply(X.x), cp));
    } else {
        tx.payload = X.M;
        const auto v = modulation_operator(s, X.M, X.N);
        for (Index n = 0; n < X.N; ++n) tx.frames.push_back(add_cp(v.apply(X.column(n)), cp));
    }
    return tx;
}

/// Splits a received stream into `count` payloads of `payload` samples,
/// dropping the prefix in front of each.
inline std::vector<ComplexVector> strip_cp(const ComplexVector& stream, Index payload, Index cp, Index count) {
    if (stream.size() != count * (payload + cp)) throw DimensionError("strip_cp: stream length mismatch");
    std::vector<ComplexVector> out;
    for (Index i = 0; i < count; ++i) out.push_back(stream.segment(i * (payload + cp) + cp, payload));
    return out;
}

/// Applies V^H to equalized payloads (CP already removed): one MN vector
/// for OTFS, N vectors of M samples otherwise.
inline DataGrid demodulate(Scheme s, const std::vector<ComplexVector>& payloads, Index m, Index n) {
    DataGrid y(m, n);
    if (long_frame(s)) {
        if (payloads.size() != 1 || payloads[0].size() != m * n)
            throw DimensionError("demodulate: OTFS expects one payload of M*N samples");
        y.x = modulation_operator(s, m, n).adjoint().apply(payloads[0]);
    } else {
        if (static_cast<Index>(payloads.size()) != n) throw DimensionError("demodulate: expected N payloads");
        const auto vh = modulation_operator(s, m, n).adjoint();
        for (Index i = 0; i < n; ++i) {
            if (payloads[static_cast<std::size_t>(i)].size() != m) throw DimensionError("demodulate: payload length is not M");
            y.x.segment(i * m, m) = vh.apply(payloads[static_cast<std::size_t>(i)]);
        }
    }
    return y;
}

}  // namespace ffeq
