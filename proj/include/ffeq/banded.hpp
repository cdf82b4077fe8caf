#pragma once

// Circular stripe-diagonal ("circular banded") matrices and the
// corner-aware Gaussian elimination used by the frequency-domain MMSE path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ffeq/error.hpp"
#include "ffeq/linalg.hpp"

namespace ffeq {

/// Square matrix of order n whose nonzeros lie on the circular stripe
/// (i - j) mod n in [0..k_lower] ∪ [n - k_upper..n - 1].
///
/// Storage is diagonal-major. Diagonal d (d in [-k_upper, k_lower]) holds
/// the entries A(i, (i - d) mod n) for i = 0..n-1, so the two corner blocks
/// live inside the same diagonals as their wrap-around continuation.
class CircularBandedMatrix {
public:
    CircularBandedMatrix() = default;

    CircularBandedMatrix(Index n, Index k_lower, Index k_upper)
        : n_(n), kl_(k_lower), ku_(k_upper) {
        if (n <= 0 || k_lower < 0 || k_upper < 0)
            throw DimensionError("CircularBandedMatrix: invalid order or bandwidth");
        if (1 + k_lower + k_upper > n)
            throw DimensionError("CircularBandedMatrix: stripe width " + std::to_string(1 + k_lower + k_upper) +
                                 " exceeds order " + std::to_string(n));
        data_.assign(static_cast<std::size_t>((kl_ + ku_ + 1) * n_), Complex{});
    }

    static CircularBandedMatrix identity(Index n) {
        CircularBandedMatrix a(n, 0, 0);
        for (Index i = 0; i < n; ++i) a.diag(0, i) = 1.0;
        return a;
    }

    Index order() const noexcept { return n_; }
    Index lower() const noexcept { return kl_; }
    Index upper() const noexcept { return ku_; }
    Index stripe_width() const noexcept { return 1 + kl_ + ku_; }

    /// Entry A(row, (row - d) mod n) of diagonal d.
    Complex& diag(Index d, Index row) { return data_[slot(d, row)]; }
    const Complex& diag(Index d, Index row) const { return data_[slot(d, row)]; }

    /// Stored diagonal index of (i, j), or `npos` when outside the stripe.
    Index offset_of(Index i, Index j) const noexcept {
        const Index r = wrap(i - j);
        if (r <= kl_) return r;
        if (r >= n_ - ku_) return r - n_;
        return npos;
    }

    bool in_stripe(Index i, Index j) const noexcept { return offset_of(i, j) != npos; }

    Complex operator()(Index i, Index j) const {
        const Index d = offset_of(i, j);
        return d == npos ? Complex{} : diag(d, i);
    }

    Complex& ref(Index i, Index j) {
        const Index d = offset_of(i, j);
        if (d == npos) throw OutOfStripeError("CircularBandedMatrix::ref: entry outside the stripe", 0.0);
        return diag(d, i);
    }

    DenseMatrix dense() const {
        DenseMatrix a = DenseMatrix::Zero(n_, n_);
        for (Index d = -ku_; d <= kl_; ++d)
            for (Index i = 0; i < n_; ++i) a(i, wrap(i - d)) = diag(d, i);
        return a;
    }

    /// Main diagonal as a vector.
    ComplexVector main_diagonal() const {
        ComplexVector v(n_);
        for (Index i = 0; i < n_; ++i) v[i] = diag(0, i);
        return v;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : data_) m = std::max(m, std::abs(z));
        return m;
    }

    double frobenius_squared() const {
        double s = 0.0;
        for (const auto& z : data_) s += std::norm(z);
        return s;
    }

    Index wrap(Index x) const noexcept {
        const Index r = x % n_;
        return r < 0 ? r + n_ : r;
    }

    static constexpr Index npos = -(Index{1} << 40);

private:
    std::size_t slot(Index d, Index row) const noexcept {
        return static_cast<std::size_t>((d + ku_) * n_ + row);
    }

    Index n_ = 0;
    Index kl_ = 0;
    Index ku_ = 0;
    std::vector<Complex> data_;
};

/// Extracts the circular stripe of a dense matrix. Entries outside the
/// stripe must not exceed `drop_tol` in magnitude (negative selects the
/// default 1e-12 * max|A|); otherwise OutOfStripeError carries the largest
/// offending magnitude.
inline CircularBandedMatrix band_from_dense(const DenseMatrix& a, Index k_lower, Index k_upper,
                                            double drop_tol = -1.0) {
    if (a.rows() != a.cols()) throw DimensionError("band_from_dense: matrix is not square");
    const Index n = a.rows();
    CircularBandedMatrix out(n, k_lower, k_upper);
    if (drop_tol < 0.0) drop_tol = 1e-12 * max_abs(a);

    double worst = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const Index d = out.offset_of(i, j);
            if (d == CircularBandedMatrix::npos)
                worst = std::max(worst, std::abs(a(i, j)));
            else
                out.diag(d, i) = a(i, j);
        }
    if (worst > drop_tol)
        throw OutOfStripeError("band_from_dense: entry of magnitude " + std::to_string(worst) +
                                   " lies outside the declared stripe",
                               worst);
    return out;
}

/// y = H x.
inline ComplexVector band_apply(const CircularBandedMatrix& h, const ComplexVector& x,
                                OpCounter* ops = nullptr) {
    const Index n = h.order();
    if (x.size() != n) throw DimensionError("band_apply: dimension mismatch");
    ComplexVector y = ComplexVector::Zero(n);
    for (Index d = -h.upper(); d <= h.lower(); ++d)
        for (Index i = 0; i < n; ++i) y[i] += h.diag(d, i) * x[h.wrap(i - d)];
    count(ops, static_cast<std::uint64_t>(h.stripe_width() * n));
    return y;
}

/// y = H^H x.
inline ComplexVector band_adjoint_apply(const CircularBandedMatrix& h, const ComplexVector& x,
                                        OpCounter* ops = nullptr) {
    const Index n = h.order();
    if (x.size() != n) throw DimensionError("band_adjoint_apply: dimension mismatch");
    ComplexVector y = ComplexVector::Zero(n);
    for (Index d = -h.upper(); d <= h.lower(); ++d)
        for (Index i = 0; i < n; ++i) y[h.wrap(i - d)] += std::conj(h.diag(d, i)) * x[i];
    count(ops, static_cast<std::uint64_t>(h.stripe_width() * n));
    return y;
}

/// Regularized Gram H H^H + (1/gamma) I, kept in circular-banded form.
/// The result has half-widths k_lower + k_upper on both sides, folded
/// onto fewer diagonals when the stripe would exceed the order.
inline CircularBandedMatrix band_gram(const CircularBandedMatrix& h, double gamma_in,
                                      OpCounter* ops = nullptr) {
    if (!(gamma_in > 0.0)) throw Error("band_gram: gamma_in must be positive");
    const Index n = h.order();
    const Index kl = h.lower();
    const Index ku = h.upper();
    const Index s = kl + ku;

    if (2 * s + 1 <= n) {
        CircularBandedMatrix g(n, s, s);
        // Lower half (e >= 0) directly, upper half by Hermitian symmetry.
        for (Index e = 0; e <= s; ++e) {
            const Index d_lo = std::max(-ku, e - ku);
            const Index d_hi = std::min(kl, e + kl);
            for (Index i = 0; i < n; ++i) {
                const Index ie = h.wrap(i - e);
                Complex acc{};
                for (Index d = d_lo; d <= d_hi; ++d) acc += h.diag(d, i) * std::conj(h.diag(d - e, ie));
                g.diag(e, i) = acc;
                if (e > 0) g.diag(-e, ie) = std::conj(acc);
            }
            count(ops, static_cast<std::uint64_t>((d_hi - d_lo + 1) * n));
        }
        const double reg = 1.0 / gamma_in;
        for (Index i = 0; i < n; ++i) g.diag(0, i) = Complex(g.diag(0, i).real() + reg, 0.0);
        return g;
    }

    // Stripe covers every residue: fold offsets modulo n.
    const Index gl = std::min(s, n / 2);
    const Index gu = std::min(s, n - 1 - gl);
    CircularBandedMatrix g(n, gl, gu);
    for (Index e = -s; e <= s; ++e) {
        const Index d_lo = std::max(-ku, e - ku);
        const Index d_hi = std::min(kl, e + kl);
        Index r = ((e % n) + n) % n;
        const Index stored = r <= gl ? r : r - n;
        for (Index i = 0; i < n; ++i) {
            const Index ie = h.wrap(i - e);
            Complex acc{};
            for (Index d = d_lo; d <= d_hi; ++d) acc += h.diag(d, i) * std::conj(h.diag(d - e, ie));
            g.diag(stored, i) += acc;
        }
        count(ops, static_cast<std::uint64_t>((d_hi - d_lo + 1) * n));
    }
    const double reg = 1.0 / gamma_in;
    for (Index i = 0; i < n; ++i) g.diag(0, i) += reg;
    return g;
}

namespace detail {

// Elimination workspace. Rows [0, main) keep their band (columns
// row - k_l .. row + k_u, never reaching the last k_l columns) plus a right
// border holding the last k_l columns. The trailing s = k_l + k_u rows are
// stored densely; they absorb the wrap-around fill from the top-right and
// bottom-left corners.
class BandEliminator {
public:
    BandEliminator(const CircularBandedMatrix& a, DenseMatrix rhs, OpCounter* ops)
        : n_(a.order()),
          kl_(a.lower()),
          ku_(a.upper()),
          s_(kl_ + ku_),
          main_(n_ - s_),
          width_(kl_ + ku_ + 1),
          border0_(n_ - kl_),
          band_(static_cast<std::size_t>(main_ * width_), Complex{}),
          border_(static_cast<std::size_t>(main_ * kl_), Complex{}),
          trail_(DenseMatrix::Zero(s_, n_)),
          x_(std::move(rhs)),
          ops_(ops),
          tiny_(1e-14 * a.max_abs()) {
        for (Index d = -ku_; d <= kl_; ++d)
            for (Index i = 0; i < n_; ++i) {
                const Complex v = a.diag(d, i);
                const Index j = a.wrap(i - d);
                if (i >= main_)
                    trail_(i - main_, j) = v;
                else if (j >= border0_ && kl_ > 0)
                    border(i, j - border0_) = v;
                else
                    band(i, j - i + kl_) = v;
            }
    }

    DenseMatrix solve() {
        forward();
        trailing();
        backward();
        return std::move(x_);
    }

private:
    Complex& band(Index row, Index idx) { return band_[static_cast<std::size_t>(row * width_ + idx)]; }
    Complex& border(Index row, Index t) { return border_[static_cast<std::size_t>(row * kl_ + t)]; }

    void check_pivot(const Complex& p, Index c) const {
        if (!(std::abs(p) >= tiny_) || tiny_ == 0.0)
            throw SingularError("band_solve: pivot " + std::to_string(c) + " below tolerance");
    }

    // Eliminates column c of one row below the pivot. `entry(col)` yields a
    // reference to that row's coefficient in column col.
    template <class Entry>
    void eliminate_row(Index c, Index target_rhs_row, Entry&& entry) {
        const Complex f = entry(c);
        for (Index u = 1; u <= ku_; ++u) entry(c + u) -= f * band(c, kl_ + u);
        for (Index t = 0; t < kl_; ++t) entry(border0_ + t) -= f * border(c, t);
        x_.row(target_rhs_row) -= f * x_.row(c);
        entry(c) = Complex{};
        count(ops_, static_cast<std::uint64_t>(ku_ + kl_ + x_.cols()));
    }

    void forward() {
        const Index r = x_.cols();
        for (Index c = 0; c < main_; ++c) {
            const Complex pivot = band(c, kl_);
            check_pivot(pivot, c);
            for (Index u = 1; u <= ku_; ++u) band(c, kl_ + u) /= pivot;
            for (Index t = 0; t < kl_; ++t) border(c, t) /= pivot;
            x_.row(c) /= pivot;
            band(c, kl_) = 1.0;
            count(ops_, static_cast<std::uint64_t>(ku_ + kl_ + r));

            // Band rows directly below the pivot.
            for (Index v = 1; v <= kl_; ++v) {
                const Index row = c + v;
                if (row < main_) {
                    eliminate_row(c, row, [&](Index col) -> Complex& {
                        if (col >= border0_) return border(row, col - border0_);
                        return band(row, col - row + kl_);
                    });
                } else {
                    eliminate_row(c, row, [&](Index col) -> Complex& { return trail_(row - main_, col); });
                }
            }
            // Bottom rows carrying the top-right wrap of the upper band.
            for (Index t = kl_; t < s_; ++t)
                eliminate_row(c, main_ + t, [&](Index col) -> Complex& { return trail_(t, col); });
        }
    }

    void trailing() {
        const Index r = x_.cols();
        for (Index p = 0; p < s_; ++p) {
            const Index col = main_ + p;
            const Complex pivot = trail_(p, col);
            check_pivot(pivot, col);
            for (Index j = col + 1; j < n_; ++j) trail_(p, j) /= pivot;
            x_.row(col) /= pivot;
            trail_(p, col) = 1.0;
            count(ops_, static_cast<std::uint64_t>(n_ - 1 - col + r));
            for (Index q = p + 1; q < s_; ++q) {
                const Complex f = trail_(q, col);
                for (Index j = col + 1; j < n_; ++j) trail_(q, j) -= f * trail_(p, j);
                x_.row(main_ + q) -= f * x_.row(col);
                trail_(q, col) = Complex{};
                count(ops_, static_cast<std::uint64_t>(n_ - 1 - col + r));
            }
        }
    }

    // Unit upper-triangular back substitution, column by column from the right.
    void backward() {
        const Index r = x_.cols();
        std::uint64_t touched = 0;
        for (Index j = n_ - 1; j > 0; --j) {
            for (Index row = std::max(main_, Index{0}); row < j; ++row) {
                x_.row(row) -= trail_(row - main_, j) * x_.row(j);
                ++touched;
            }
            if (j >= border0_ && kl_ > 0) {
                for (Index row = 0; row < main_; ++row) {
                    x_.row(row) -= border(row, j - border0_) * x_.row(j);
                    ++touched;
                }
            } else {
                const Index lo = std::max(Index{0}, j - ku_);
                const Index hi = std::min(j, main_);
                for (Index row = lo; row < hi; ++row) {
                    x_.row(row) -= band(row, j - row + kl_) * x_.row(j);
                    ++touched;
                }
            }
        }
        count(ops_, touched * static_cast<std::uint64_t>(r));
    }

    Index n_, kl_, ku_, s_, main_, width_, border0_;
    std::vector<Complex> band_;
    std::vector<Complex> border_;
    DenseMatrix trail_;
    DenseMatrix x_;
    OpCounter* ops_;
    double tiny_;
};

}  // namespace detail

/// Solves A X = B for a circular-banded A by Gaussian elimination without
/// row exchanges: forward elimination over the first n - (k_l + k_u) rows,
/// dense cleanup of the trailing corner block, then back substitution.
/// Raises SingularError when a pivot falls below 1e-14 * max|A|.
/// Column-vector right-hand sides return a ComplexVector, anything else a
/// DenseMatrix.
template <class Derived>
auto band_solve(const CircularBandedMatrix& a, const Eigen::MatrixBase<Derived>& b, OpCounter* ops = nullptr) {
    if (b.rows() != a.order()) throw DimensionError("band_solve: right-hand side has wrong row count");
    DenseMatrix x = detail::BandEliminator(a, DenseMatrix(b), ops).solve();
    if constexpr (Derived::ColsAtCompileTime == 1)
        return ComplexVector(x.col(0));
    else
        return x;
}

}  // namespace ffeq
