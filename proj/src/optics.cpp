#include "flakeforge/optics.hpp"

#include <cmath>
#include <numbers>

#include "flakeforge/error.hpp"

namespace flakeforge {

namespace {

// 2x2 complex matrix, row-major.
struct Mat2 {
    complexd a, b, c, d;
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d,
                c * o.a + d * o.c, c * o.b + d * o.d};
    }
};

Mat2 interface_matrix(complexd n_a, complexd n_b) {
    const auto [r, t] = fresnel(n_a, n_b);
    return {1.0 / t, r / t, r / t, 1.0 / t};
}

Mat2 propagation_matrix(complexd delta) {
    const complexd i(0.0, 1.0);
    return {std::exp(-i * delta), 0.0, 0.0, std::exp(i * delta)};
}

void check_stack(const LayerStack& stack, double lambda_nm) {
    if (!stack.incident || !stack.substrate)
        throw DomainError("layer stack: incident and substrate media are required");
    const auto n0 = stack.incident->interp_index(lambda_nm);
    if (n0.imag() > 1e-12)
        throw DomainError("layer stack: incident medium must be lossless (k = 0) at " +
                          std::to_string(lambda_nm) + " nm");
    for (const auto& layer : stack.layers) {
        if (!layer.material) throw DomainError("layer stack: layer without material");
        if (!(layer.thickness_nm > 0.0) || !std::isfinite(layer.thickness_nm))
            throw DomainError("layer stack: layer thickness must be finite and > 0");
    }
}

} // namespace

FresnelCoefficients fresnel(complexd n_a, complexd n_b) {
    const complexd denom = n_a + n_b;
    if (std::abs(denom) < 1e-300)
        throw DomainError("fresnel: degenerate interface, n_a + n_b ~ 0");
    return {(n_a - n_b) / denom, 2.0 * n_a / denom};
}

complexd phase_delta(complexd n, double thickness_nm, double lambda_nm) {
    if (!(lambda_nm > 0.0))
        throw DomainError("phase_delta: wavelength must be > 0");
    if (thickness_nm < 0.0)
        throw DomainError("phase_delta: thickness must be >= 0");
    return 2.0 * std::numbers::pi * n * thickness_nm / lambda_nm;
}

FieldSolution stack_transfer(const LayerStack& stack, double lambda_nm) {
    check_stack(stack, lambda_nm);

    const std::size_t L = stack.layers.size();
    std::vector<complexd> n(L + 2);
    n[0] = stack.incident->interp_index(lambda_nm);
    for (std::size_t l = 0; l < L; ++l)
        n[l + 1] = stack.layers[l].material->interp_index(lambda_nm);
    n[L + 1] = stack.substrate->interp_index(lambda_nm);

    Mat2 m = interface_matrix(n[0], n[1]);
    for (std::size_t l = 1; l <= L; ++l) {
        const complexd delta = phase_delta(n[l], stack.layers[l - 1].thickness_nm, lambda_nm);
        m = m * propagation_matrix(delta) * interface_matrix(n[l], n[l + 1]);
    }

    if (std::abs(m.a) < 1e-300)
        throw DomainError("stack_transfer: singular transfer matrix");
    const complexd u = 1.0 / m.a;
    const complexd v = m.c * u;
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) ||
        !std::isfinite(u.real()) || !std::isfinite(u.imag()))
        throw DomainError("stack_transfer: non-finite field amplitudes");
    return {v, u};
}

double reflectance(const LayerStack& stack, double lambda_nm) {
    const auto fields = stack_transfer(stack, lambda_nm);
    const double r = std::norm(fields.reflected);
    if (r > 1.0 + 1e-9)
        throw DomainError("reflectance: R = " + std::to_string(r) +
                          " violates passivity at " + std::to_string(lambda_nm) + " nm");
    return std::min(r, 1.0);
}

SpectralCurve reflectance_spectrum(const LayerStack& stack, const SpectralGrid& grid) {
    std::vector<double> values(static_cast<std::size_t>(grid.count));
    for (int i = 0; i < grid.count; ++i)
        values[static_cast<std::size_t>(i)] = reflectance(stack, grid.at(i));
    return SpectralCurve(grid, std::move(values));
}

SpectralCurve contrast_spectrum(const LayerStack& flake_stack,
                                const LayerStack& bare_stack,
                                const SpectralGrid& grid) {
    const auto flake = reflectance_spectrum(flake_stack, grid);
    const auto bare = reflectance_spectrum(bare_stack, grid);
    std::vector<double> values(flake.values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = flake.values[i] - bare.values[i];
    return SpectralCurve(grid, std::move(values));
}

} // namespace flakeforge
