#pragma once

// Dense complex algebra, unitary DFT-family operators and the Hermitian
// eigensolver used by the analysis paths. Dense storage is Eigen.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "ffeq/error.hpp"

namespace ffeq {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using ComplexVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kJ{0.0, 1.0};

/// Counts complex multiplications and divisions. Additions are free.
struct OpCounter {
    std::uint64_t mul_div = 0;

    void add(std::uint64_t n) noexcept { mul_div += n; }
};

inline void count(OpCounter* c, std::uint64_t n) noexcept {
    if (c) c->add(n);
}

inline bool all_finite(const DenseMatrix& a) { return a.allFinite(); }
inline bool all_finite(const ComplexVector& a) { return a.allFinite(); }

inline double max_abs(const DenseMatrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine = [] {
        Eigen::FFT<double> e;
        e.SetFlag(Eigen::FFT<double>::Unscaled);
        return e;
    }();
    return engine;
}

}  // namespace detail

/// Unitary DFT: X[k] = n^{-1/2} sum_m x[m] e^{-j 2 pi k m / n}.
inline ComplexVector dft(const ComplexVector& x) {
    const Index n = x.size();
    if (n <= 1) return x;
    std::vector<Complex> in(x.data(), x.data() + n), out;
    detail::fft_engine().fwd(out, in);
    ComplexVector y = Eigen::Map<ComplexVector>(out.data(), n);
    return y / std::sqrt(static_cast<double>(n));
}

/// Unitary inverse DFT.
inline ComplexVector idft(const ComplexVector& x) {
    const Index n = x.size();
    if (n <= 1) return x;
    std::vector<Complex> in(x.data(), x.data() + n), out;
    detail::fft_engine().inv(out, in);
    ComplexVector y = Eigen::Map<ComplexVector>(out.data(), n);
    return y / std::sqrt(static_cast<double>(n));
}

/// Dense unitary DFT matrix F with F[a,b] = e^{-j2pi ab/n}/sqrt(n).
inline DenseMatrix dft_matrix(Index n) {
    DenseMatrix f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
            f(a, b) = std::polar(scale, -2.0 * kPi * static_cast<double>((a * b) % n) / static_cast<double>(n));
    return f;
}

/// Symbolic unitary operator from the DFT family. Applied without ever
/// forming a dense matrix; `dense()` exists for small-size oracles.
class UnitaryOperator {
public:
    enum class Kind { Identity, Dft, Idft, KronDft, KronIdft, BlockDft, BlockIdft };

    /// `block` is the grid row count the operator is used with; it only
    /// matters to the Kronecker and block forms and to callers reshaping
    /// results into an M×N grid.
    static UnitaryOperator identity(Index n, Index block = -1) { return {Kind::Identity, n, block < 0 ? n : block}; }
    static UnitaryOperator dft(Index n) { return {Kind::Dft, n, n}; }
    static UnitaryOperator idft(Index n) { return {Kind::Idft, n, n}; }
    /// F_N ⊗ I_M acting on vec(X) of an M×N column-major grid.
    static UnitaryOperator kron_dft(Index n_blocks, Index block) { return {Kind::KronDft, n_blocks * block, block}; }
    /// F_N^H ⊗ I_M acting on vec(X) of an M×N column-major grid.
    static UnitaryOperator kron_idft(Index n_blocks, Index block) { return {Kind::KronIdft, n_blocks * block, block}; }
    /// I_N ⊗ F_M: a block-point DFT of every column of the grid.
    static UnitaryOperator block_dft(Index n_blocks, Index block) { return {Kind::BlockDft, n_blocks * block, block}; }
    /// I_N ⊗ F_M^H.
    static UnitaryOperator block_idft(Index n_blocks, Index block) { return {Kind::BlockIdft, n_blocks * block, block}; }

    Kind kind() const noexcept { return kind_; }
    Index size() const noexcept { return n_; }
    Index block() const noexcept { return block_; }

    UnitaryOperator adjoint() const {
        switch (kind_) {
            case Kind::Identity: return *this;
            case Kind::Dft: return {Kind::Idft, n_, block_};
            case Kind::Idft: return {Kind::Dft, n_, block_};
            case Kind::KronDft: return {Kind::KronIdft, n_, block_};
            case Kind::KronIdft: return {Kind::KronDft, n_, block_};
            case Kind::BlockDft: return {Kind::BlockIdft, n_, block_};
            case Kind::BlockIdft: return {Kind::BlockDft, n_, block_};
        }
        return *this;
    }

    ComplexVector apply(const ComplexVector& x) const {
        if (x.size() != n_) throw DimensionError("UnitaryOperator::apply: size mismatch");
        switch (kind_) {
            case Kind::Identity: return x;
            case Kind::Dft: return ffeq::dft(x);
            case Kind::Idft: return ffeq::idft(x);
            case Kind::KronDft:
            case Kind::KronIdft: return apply_kron(x, kind_ == Kind::KronDft);
            case Kind::BlockDft:
            case Kind::BlockIdft: return apply_block(x, kind_ == Kind::BlockDft);
        }
        return x;
    }

    /// Column-wise U·X.
    DenseMatrix apply(const DenseMatrix& x) const {
        if (x.rows() != n_) throw DimensionError("UnitaryOperator::apply: row mismatch");
        DenseMatrix y(x.rows(), x.cols());
        for (Index c = 0; c < x.cols(); ++c) y.col(c) = apply(ComplexVector(x.col(c)));
        return y;
    }

    /// X·U, computed as (U^H X^H)^H.
    DenseMatrix apply_right(const DenseMatrix& x) const {
        if (x.cols() != n_) throw DimensionError("UnitaryOperator::apply_right: column mismatch");
        return adjoint().apply(DenseMatrix(x.adjoint())).adjoint();
    }

    DenseMatrix dense() const { return apply(DenseMatrix(DenseMatrix::Identity(n_, n_))); }

private:
    UnitaryOperator(Kind k, Index n, Index block) : kind_(k), n_(n), block_(block) {}

    ComplexVector apply_kron(const ComplexVector& x, bool forward) const {
        const Index m = block_;
        const Index nb = n_ / m;
        ComplexVector y(n_);
        ComplexVector row(nb);
        for (Index r = 0; r < m; ++r) {
            for (Index b = 0; b < nb; ++b) row[b] = x[b * m + r];
            ComplexVector t = forward ? ffeq::dft(row) : ffeq::idft(row);
            for (Index b = 0; b < nb; ++b) y[b * m + r] = t[b];
        }
        return y;
    }

    ComplexVector apply_block(const ComplexVector& x, bool forward) const {
        const Index m = block_;
        ComplexVector y(n_);
        for (Index b = 0; b < n_ / m; ++b) {
            const ComplexVector seg = x.segment(b * m, m);
            y.segment(b * m, m) = forward ? ffeq::dft(seg) : ffeq::idft(seg);
        }
        return y;
    }

    Kind kind_;
    Index n_;
    Index block_;
};

struct HermitianEigen {
    RealVector values;     // descending
    DenseMatrix vectors;   // columns, matching `values`
};

/// Eigendecomposition G = Q Λ Q^H of a Hermitian matrix, eigenvalues
/// sorted in descending order. O(n^3); meant for analysis paths only.
inline HermitianEigen eig_hermitian(const DenseMatrix& g, double tol = 1e-10) {
    if (g.rows() != g.cols()) throw DimensionError("eig_hermitian: matrix is not square");
    const double scale = std::max(1.0, max_abs(g));
    if (max_abs(g - g.adjoint()) > tol * scale)
        throw NotHermitianError("eig_hermitian: input is not Hermitian");

    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(g);
    if (solver.info() != Eigen::Success) throw Error("eig_hermitian: eigensolver did not converge");

    HermitianEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

/// Closed-form multiply/divide count of band_solve on a circular stripe
/// matrix of order `n` and half-width `k` (stripe 1 + 2k), one right-hand side.
struct ComplexityEstimate {
    std::uint64_t total = 0;
    std::string asymptotic;
};

inline ComplexityEstimate complexity_estimate(std::int64_t n, std::int64_t k) {
    if (k < 0 || n <= 2 * k) throw DimensionError("complexity_estimate: requires n > 2k >= 0");
    const std::int64_t w = 1 + 2 * k;
    const std::int64_t total = w * w * (n - 2 * k) + (2 * k) * (2 * k + 1) * (4 * k + 1) / 6 +
                               2 * k * n - 2 * k * k - k;
    return {static_cast<std::uint64_t>(total),
            "O(" + std::to_string(w * w) + " * " + std::to_string(n) + ")"};
}

/// Operation count of the dense cubic path.
inline double dense_complexity(double n) { return n * n * n; }

}  // namespace ffeq
