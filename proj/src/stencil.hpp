#pragma once

// Inner loops of the 5-point operator shared by fd and linsolve.

#include <cstddef>

#include "abc2d/fd.hpp"

namespace abc2d::detail {

struct FaceSum {
    double e, w, n, s;
    double total() const { return e + w + n + s; }
};

inline FaceSum faces_at(const StencilView& op, std::size_t k) {
    if (op.east == nullptr) return {1.0, 1.0, 1.0, 1.0};
    const std::size_t m = op.side();
    return {op.east[k], op.east[k - 1], op.north[k], op.north[k - m]};
}

/// (A x)_k at an interior node.
inline double apply_at(const StencilView& op, const double* x, std::size_t k) {
    const std::size_t m = op.side();
    const double inv_h2 = 1.0 / (op.h * op.h);
    const FaceSum a = faces_at(op, k);
    return inv_h2 * (a.e * (x[k] - x[k + 1]) + a.w * (x[k] - x[k - 1]) + a.n * (x[k] - x[k + m]) +
                     a.s * (x[k] - x[k - m]));
}

/// Applies A on all interior rows of the view; boundary rows are zeroed.
inline void apply_all(const StencilView& op, const double* x, double* y) {
    const int n = op.n;
    const std::size_t m = op.side();
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = 0.0;
        y[static_cast<std::size_t>(n) * m + i] = 0.0;
    }
    for (int j = 1; j < n; ++j) {
        const std::size_t base = static_cast<std::size_t>(j) * m;
        y[base] = 0.0;
        y[base + static_cast<std::size_t>(n)] = 0.0;
        for (int i = 1; i < n; ++i) {
            const std::size_t k = base + static_cast<std::size_t>(i);
            y[k] = apply_at(op, x, k);
        }
    }
}

} // namespace abc2d::detail
