#pragma once
// Uniform momentum grid centred on the beam momentum.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "feberi/core.hpp"

namespace feberi {

struct MomentumGrid {
    int size = 0;
    double p0 = 0.0;
    double p_cutoff = 0.0;
    double spacing = 0.0;
    double tail_mass = 0.0;  // Gaussian probability outside the grid at construction

    // Ascending: p_0 = p0 - p_cutoff, p_{N/2} = p0.
    double point(int n) const { return p0 - p_cutoff + n * spacing; }
    double offset(int n) const { return -p_cutoff + n * spacing; }
    std::vector<double> points() const {
        std::vector<double> out(size);
        for (int n = 0; n < size; ++n) out[n] = point(n);
        return out;
    }
    // Length of the periodic box conjugate to this grid.
    double box_length() const { return two_pi * constants::hbar / spacing; }
};

inline double gaussian_tail_mass(double half_width, double sigma_p) {
    if (!(sigma_p > 0.0)) return 0.0;
    return std::erfc(half_width / (std::sqrt(2.0) * sigma_p));
}

inline MomentumGrid grid_with_cutoff(double p0, double p_cutoff, int N, double sigma_p0) {
    if (N < 64 || N % 2 != 0) throw DomainError("grid size must be even and at least 64, got " + std::to_string(N));
    if (!(p_cutoff > 0.0)) throw DomainError("momentum cutoff must be positive");
    MomentumGrid g;
    g.size = N;
    g.p0 = p0;
    g.p_cutoff = p_cutoff;
    g.spacing = 2.0 * p_cutoff / N;
    g.tail_mass = gaussian_tail_mass(p_cutoff - 0.5 * g.spacing, sigma_p0);
    if (g.tail_mass > 1e-8)
        throw NumericalError("momentum grid too narrow: tail mass " + std::to_string(g.tail_mass));
    return g;
}

// Cutoff max(8 sigma_p0, 6 |p_rec|), scaled by cutoff_scale >= 1.
inline MomentumGrid build_grid(const ElectronKinematics& kin, double sigma_p0, double p_rec, int N, double cutoff_scale = 1.0) {
    if (!(sigma_p0 > 0.0)) throw DomainError("momentum spread must be positive");
    const double cut = cutoff_scale * std::max(8.0 * sigma_p0, 6.0 * std::abs(p_rec));
    return grid_with_cutoff(kin.p0, cut, N, sigma_p0);
}

}  // namespace feberi
