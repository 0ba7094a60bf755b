#pragma once

// Exact linear assignment via the Hungarian algorithm with potentials
// (shortest augmenting paths), O(n^3). Maximization is solved by negating
// the score matrix. Ties between optimal assignments are broken by the fixed
// column scan order, so results are deterministic.

#include <limits>
#include <vector>

#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"

namespace modecomb {

// Returns sigma maximizing sum_i scores(i, sigma[i]) exactly.
inline std::vector<int> solve_lap_max(const MatX<double>& scores) {
    const int n = static_cast<int>(scores.rows());
    if (scores.cols() != n || n == 0)
        throw ValidationError("solve_lap_max: matrix must be square and non-empty");
    if (!scores.allFinite())
        throw ValidationError("solve_lap_max: matrix has non-finite entries");

    const double kInf = std::numeric_limits<double>::infinity();
    // 1-indexed with a virtual column 0; p[j] = row currently assigned to column j.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = -scores(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> sigma(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) sigma[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return sigma;
}

inline double assignment_value(const MatX<double>& scores, const std::vector<int>& sigma) {
    double total = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        total += scores(static_cast<Eigen::Index>(i), sigma[i]);
    return total;
}

}  // namespace modecomb
