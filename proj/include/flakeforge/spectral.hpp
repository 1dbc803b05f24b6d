#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

namespace flakeforge {

// Uniform wavelength grid, endpoints inclusive:
//   lambda_i = lambda_min + i * (lambda_max - lambda_min) / (count - 1)
// The last point is pinned to lambda_max so refining a grid from D to 2D-1
// points reproduces the shared wavelengths bit-for-bit.
struct SpectralGrid {
    double lambda_min = 400.0;
    double lambda_max = 700.0;
    int count = 31;

    SpectralGrid() = default;
    SpectralGrid(double lo, double hi, int n);

    double at(int i) const {
        if (i == count - 1) return lambda_max;
        return lambda_min + (static_cast<double>(i) * (lambda_max - lambda_min))
                            / static_cast<double>(count - 1);
    }
    bool operator==(const SpectralGrid&) const = default;
};

// Real-valued samples on a grid (reflectance, illuminant power, ...).
struct SpectralCurve {
    SpectralGrid grid;
    std::vector<double> values;

    SpectralCurve() = default;
    SpectralCurve(SpectralGrid g, std::vector<double> v);
};

// Wavelength-tabulated complex refractive index n(lambda) + i*k(lambda).
// Wavelengths strictly increasing, n > 0, k >= 0. Lookups interpolate
// linearly and never extrapolate.
class DispersionTable {
public:
    DispersionTable(std::string material_id,
                    std::vector<double> wavelengths_nm,
                    std::vector<double> n,
                    std::vector<double> k);

    const std::string& material_id() const { return id_; }
    std::size_t size() const { return lambda_.size(); }
    double lambda_min() const { return lambda_.front(); }
    double lambda_max() const { return lambda_.back(); }
    double wavelength(std::size_t i) const { return lambda_[i]; }
    double n_at(std::size_t i) const { return n_[i]; }
    double k_at(std::size_t i) const { return k_[i]; }

    // Piecewise-linear interpolation, exact at every table node.
    std::complex<double> interp_index(double lambda_nm) const;

    bool covers(const SpectralGrid& grid) const {
        return grid.lambda_min >= lambda_min() && grid.lambda_max <= lambda_max();
    }

private:
    std::string id_;
    std::vector<double> lambda_, n_, k_;
};

// CSV loaders. Formats (UTF-8, '.' decimal separator, one header line):
//   dispersion: wavelength_nm,n,k
//   CMF:        wavelength_nm,xbar,ybar,zbar
//   illuminant: wavelength_nm,power
DispersionTable load_dispersion(const std::filesystem::path& path);

struct CmfTable {
    std::vector<double> lambda, xbar, ybar, zbar;
};
CmfTable load_cmf(const std::filesystem::path& path);

struct IlluminantTable {
    std::vector<double> lambda, power;
};
IlluminantTable load_illuminant(const std::filesystem::path& path);

// Sample a tabulated 1-D function onto a grid (linear interpolation,
// RangeError when the grid leaves the table).
SpectralCurve sample_curve(const std::vector<double>& lambda,
                           const std::vector<double>& values,
                           const SpectralGrid& grid);
SpectralCurve sample_curve(const DispersionTable& table, const SpectralGrid& grid,
                           bool imaginary_part = false);

// Shared interpolation kernel: y(lambda) on a strictly increasing table.
double interp_linear(const std::vector<double>& x, const std::vector<double>& y,
                     double xq);

} // namespace flakeforge
