#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mskfit::detail {

// Second-order finite-difference stencils on a sequence of length n.
// visit(i, j, c) receives every nonzero entry c of stencil row i (before the
// 1/dt^p factor); used for both the forward map and its transpose.
template <typename F>
void fd1_stencil(Eigen::Index n, F&& visit) {
    if (n < 2) throw std::invalid_argument("fd1: need at least 2 samples");
    if (n == 2) {
        visit(0, 0, -1.0); visit(0, 1, 1.0);
        visit(1, 0, -1.0); visit(1, 1, 1.0);
        return;
    }
    visit(0, 0, -1.5); visit(0, 1, 2.0); visit(0, 2, -0.5);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        visit(i, i - 1, -0.5);
        visit(i, i + 1, 0.5);
    }
    visit(n - 1, n - 1, 1.5); visit(n - 1, n - 2, -2.0); visit(n - 1, n - 3, 0.5);
}

template <typename F>
void fd2_stencil(Eigen::Index n, F&& visit) {
    if (n < 3) throw std::invalid_argument("fd2: need at least 3 samples");
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        visit(i, i - 1, 1.0);
        visit(i, i, -2.0);
        visit(i, i + 1, 1.0);
    }
    if (n >= 4) {
        visit(0, 0, 2.0); visit(0, 1, -5.0); visit(0, 2, 4.0); visit(0, 3, -1.0);
        visit(n - 1, n - 1, 2.0); visit(n - 1, n - 2, -5.0); visit(n - 1, n - 3, 4.0);
        visit(n - 1, n - 4, -1.0);
    } else {
        // n == 3: copy the central value to both ends.
        visit(0, 0, 1.0); visit(0, 1, -2.0); visit(0, 2, 1.0);
        visit(2, 0, 1.0); visit(2, 1, -2.0); visit(2, 2, 1.0);
    }
}

}  // namespace mskfit::detail
