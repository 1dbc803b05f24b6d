#pragma once

#include <complex>
#include <vector>

#include "flakeforge/spectral.hpp"

namespace flakeforge {

// Transfer-matrix engine for multilayer stacks at normal incidence.
//
// Conventions (fixed; the tests' independent Airy oracle uses the same ones):
//   * complex index n = n + i*k with k >= 0 meaning absorption,
//   * forward propagation carries e^{-i*delta}, delta = 2*pi*n*d/lambda,
//   * interface matrix M_ab = (1/t_ab) [[1, r_ab], [r_ab, 1]],
//     propagation matrix P = diag(e^{-i*delta}, e^{+i*delta}),
//   * with M = M_01 * prod_l (P_l * M_{l,l+1}) and no upward wave in the
//     substrate, (u0, v) = M (u, 0); so r = v/u0 = M21/M11, t = u/u0 = 1/M11.
// In the single-interface limit this reduces to the Fresnel coefficients and
// for one layer to the Airy formula r = (r01 + r12 e^{2i delta}) /
// (1 + r01 r12 e^{2i delta}).

using complexd = std::complex<double>;

// Thin layer: non-owning material reference plus physical thickness.
// Zero-thickness layers must be omitted (R is continuous in d -> 0).
struct Layer {
    const DispersionTable* material = nullptr;
    double thickness_nm = 0.0;
};

// Semi-infinite incident medium / thin layers (top to bottom) / substrate.
// The incident medium must be lossless at evaluated wavelengths.
struct LayerStack {
    const DispersionTable* incident = nullptr;
    std::vector<Layer> layers;
    const DispersionTable* substrate = nullptr;
};

struct FieldSolution {
    complexd reflected;         // v
    complexd transmitted;       // u
    static constexpr double incident = 1.0;  // u0
};

struct FresnelCoefficients {
    complexd r, t;  // t = 1 + r
};

FresnelCoefficients fresnel(complexd n_a, complexd n_b);

complexd phase_delta(complexd n, double thickness_nm, double lambda_nm);

FieldSolution stack_transfer(const LayerStack& stack, double lambda_nm);

// R = |v/u0|^2, clamped to [0, 1] after a passivity check (R <= 1 + 1e-9).
double reflectance(const LayerStack& stack, double lambda_nm);

SpectralCurve reflectance_spectrum(const LayerStack& stack, const SpectralGrid& grid);

// Pointwise R_flake(lambda) - R_bare(lambda).
SpectralCurve contrast_spectrum(const LayerStack& flake_stack,
                                const LayerStack& bare_stack,
                                const SpectralGrid& grid);

} // namespace flakeforge
