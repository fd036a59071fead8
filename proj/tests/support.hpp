#pragma once

#include "exitfem/box.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

inline std::vector<double> random_interior_point(const exitfem::BoxDomain& box, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::vector<double> p(box.dimension());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = box.lower(i) + u(rng) * box.extent(i);
    return p;
}

// Expected exit time of standard Brownian motion with generator (1/2) Laplacian
// from the centre of the unit square: the torsion series truncated at m, n <= max_index.
inline double unit_square_center_exit_time(int max_index = 399) {
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int m = 1; m <= max_index; m += 2) {
        for (int n = 1; n <= max_index; n += 2) {
            const double sm = ((m / 2) % 2 == 0) ? 1.0 : -1.0;  // sin(m pi / 2)
            const double sn = ((n / 2) % 2 == 0) ? 1.0 : -1.0;
            sum += 32.0 * sm * sn / (std::pow(pi, 4) * m * n * (static_cast<double>(m) * m + static_cast<double>(n) * n));
        }
    }
    return sum;
}

}  // namespace testing
