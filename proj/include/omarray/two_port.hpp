#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include "constants.hpp"
#include "errors.hpp"

namespace omarray
{

using cplx = std::complex<double>;
using ComplexAmplitude = cplx;

inline constexpr cplx kI{0.0, 1.0};

// 2x2 complex transfer matrix acting on (a_R, a_L) column vectors.
struct TwoPortMatrix
{
    cplx m11{1.0}, m12{0.0}, m21{0.0}, m22{1.0};

    static TwoPortMatrix identity() { return {}; }
    static TwoPortMatrix diagonal(cplx a, cplx d) { return {a, 0.0, 0.0, d}; }

    cplx det() const { return m11 * m22 - m12 * m21; }
    cplx trace() const { return m11 + m22; }

    double max_abs() const
    {
        return std::max({std::abs(m11), std::abs(m12), std::abs(m21), std::abs(m22)});
    }

    TwoPortMatrix scaled(cplx s) const { return {s * m11, s * m12, s * m21, s * m22}; }

    std::array<cplx, 2> apply(cplx right, cplx left) const
    {
        return {m11 * right + m12 * left, m21 * right + m22 * left};
    }

    friend TwoPortMatrix operator*(const TwoPortMatrix &a, const TwoPortMatrix &b)
    {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
};

// Largest entrywise difference, divided by max(1, largest entry of either).
inline double relative_distance(const TwoPortMatrix &a, const TwoPortMatrix &b)
{
    const double diff = std::max({std::abs(a.m11 - b.m11), std::abs(a.m12 - b.m12),
                                  std::abs(a.m21 - b.m21), std::abs(a.m22 - b.m22)});
    return diff / std::max({1.0, a.max_abs(), b.max_abs()});
}

// Eigen-decomposition M = S diag(l1, l2) S^-1 with unit-norm columns of S.
struct EigenPair2
{
    std::array<cplx, 2> values;
    std::array<std::array<cplx, 2>, 2> vectors;  // vectors[k] = column k of S
    double condition = 1.0;                      // |det S|^-1 for unit-norm columns
    bool degenerate = false;
};

namespace detail
{
inline std::array<cplx, 2> normalized(cplx x, cplx y)
{
    const double n = std::sqrt(std::norm(x) + std::norm(y));
    return {x / n, y / n};
}

inline std::array<cplx, 2> eigenvector_for(const TwoPortMatrix &m, cplx lambda)
{
    // Rows of (M - lambda I) v = 0 give v = (m12, lambda - m11) or (lambda - m22, m21).
    const cplx ax = m.m12, ay = lambda - m.m11;
    const cplx bx = lambda - m.m22, by = m.m21;
    const double na = std::norm(ax) + std::norm(ay);
    const double nb = std::norm(bx) + std::norm(by);
    if (na == 0.0 && nb == 0.0)
        return {cplx{1.0}, cplx{0.0}};
    return na >= nb ? normalized(ax, ay) : normalized(bx, by);
}
} // namespace detail

inline EigenPair2 eigen_decompose(const TwoPortMatrix &m)
{
    EigenPair2 e;
    const cplx half_trace = 0.5 * m.trace();
    const cplx disc = std::sqrt(half_trace * half_trace - m.det());
    e.values = {half_trace + disc, half_trace - disc};
    const double scale = std::max(1.0, std::abs(half_trace));
    if (std::abs(disc) <= tolerance::degenerate_eigen * scale) {
        e.degenerate = true;
        e.condition = std::numeric_limits<double>::infinity();
        e.vectors[0] = detail::eigenvector_for(m, e.values[0]);
        e.vectors[1] = e.vectors[0];
        return e;
    }
    // For diagonal input the second eigenvector formula can collapse onto the first.
    if (m.m12 == cplx{0.0} && m.m21 == cplx{0.0}) {
        const bool first_is_11 = std::abs(e.values[0] - m.m11) <= std::abs(e.values[0] - m.m22);
        e.vectors[0] = first_is_11 ? std::array<cplx, 2>{1.0, 0.0} : std::array<cplx, 2>{0.0, 1.0};
        e.vectors[1] = first_is_11 ? std::array<cplx, 2>{0.0, 1.0} : std::array<cplx, 2>{1.0, 0.0};
    } else {
        e.vectors[0] = detail::eigenvector_for(m, e.values[0]);
        e.vectors[1] = detail::eigenvector_for(m, e.values[1]);
    }
    const cplx det_s = e.vectors[0][0] * e.vectors[1][1] - e.vectors[1][0] * e.vectors[0][1];
    e.condition = std::abs(det_s) > 0.0 ? 1.0 / std::abs(det_s) : std::numeric_limits<double>::infinity();
    e.degenerate = !(e.condition < tolerance::max_eigen_condition);
    return e;
}

} // namespace omarray
