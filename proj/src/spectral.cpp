#include "flakeforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "flakeforge/error.hpp"

namespace flakeforge {

SpectralGrid::SpectralGrid(double lo, double hi, int n)
    : lambda_min(lo), lambda_max(hi), count(n) {
    if (!(lo < hi)) throw ValidationError("spectral grid: lambda_min must be < lambda_max");
    if (n < 2) throw ValidationError("spectral grid: need at least 2 samples");
}

SpectralCurve::SpectralCurve(SpectralGrid g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.count)
        throw ShapeError("spectral curve: value count does not match grid");
    for (double x : values)
        if (!std::isfinite(x)) throw ValidationError("spectral curve: non-finite value");
}

DispersionTable::DispersionTable(std::string material_id,
                                 std::vector<double> wavelengths_nm,
                                 std::vector<double> n,
                                 std::vector<double> k)
    : id_(std::move(material_id)),
      lambda_(std::move(wavelengths_nm)), n_(std::move(n)), k_(std::move(k)) {
    if (lambda_.size() < 2)
        throw ValidationError(id_ + ": dispersion table needs at least 2 samples");
    if (lambda_.size() != n_.size() || lambda_.size() != k_.size())
        throw ValidationError(id_ + ": dispersion table column length mismatch");
    for (std::size_t i = 0; i < lambda_.size(); ++i) {
        if (!std::isfinite(lambda_[i]) || !std::isfinite(n_[i]) || !std::isfinite(k_[i]))
            throw ValidationError(id_ + ": non-finite dispersion sample");
        if (i > 0 && !(lambda_[i] > lambda_[i - 1]))
            throw ValidationError(id_ + ": wavelengths must be strictly increasing");
        if (!(n_[i] > 0.0))
            throw ValidationError(id_ + ": refractive index n must be > 0");
        if (k_[i] < 0.0)
            throw ValidationError(id_ + ": extinction k must be >= 0");
    }
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y,
                     double xq) {
    if (xq < x.front() || xq > x.back())
        throw RangeError("interpolation query " + std::to_string(xq) +
                         " outside table range [" + std::to_string(x.front()) + ", " +
                         std::to_string(x.back()) + "]");
    if (xq == x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
    const double t = (xq - x[j]) / (x[j + 1] - x[j]);
    return y[j] + t * (y[j + 1] - y[j]);  // t == 0 at nodes, exact
}

std::complex<double> DispersionTable::interp_index(double lambda_nm) const {
    return {interp_linear(lambda_, n_, lambda_nm), interp_linear(lambda_, k_, lambda_nm)};
}

namespace {

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          const std::string& expected_header,
                                          std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw ParseError(path.string() + ": expected header '" + expected_header +
                         "', got '" + line + "'");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v{};
            const char* b = cell.data();
            const char* e = b + cell.size();
            auto [p, ec] = std::from_chars(b, e, v);
            if (ec != std::errc{} || p != e)
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != columns)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected " + std::to_string(columns) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no data rows");
    return rows;
}

} // namespace

DispersionTable load_dispersion(const std::filesystem::path& path) {
    auto rows = read_csv(path, "wavelength_nm,n,k", 3);
    std::vector<double> l, n, k;
    l.reserve(rows.size());
    n.reserve(rows.size());
    k.reserve(rows.size());
    for (auto& r : rows) {
        l.push_back(r[0]);
        n.push_back(r[1]);
        k.push_back(r[2]);
    }
    return DispersionTable(path.stem().string(), std::move(l), std::move(n), std::move(k));
}

CmfTable load_cmf(const std::filesystem::path& path) {
    auto rows = read_csv(path, "wavelength_nm,xbar,ybar,zbar", 4);
    CmfTable t;
    for (auto& r : rows) {
        if (!t.lambda.empty() && !(r[0] > t.lambda.back()))
            throw ValidationError(path.string() + ": wavelengths must be strictly increasing");
        t.lambda.push_back(r[0]);
        t.xbar.push_back(r[1]);
        t.ybar.push_back(r[2]);
        t.zbar.push_back(r[3]);
    }
    if (t.lambda.size() < 2) throw ValidationError(path.string() + ": need at least 2 samples");
    return t;
}

IlluminantTable load_illuminant(const std::filesystem::path& path) {
    auto rows = read_csv(path, "wavelength_nm,power", 2);
    IlluminantTable t;
    for (auto& r : rows) {
        if (!t.lambda.empty() && !(r[0] > t.lambda.back()))
            throw ValidationError(path.string() + ": wavelengths must be strictly increasing");
        if (r[1] < 0.0) throw ValidationError(path.string() + ": negative power");
        t.lambda.push_back(r[0]);
        t.power.push_back(r[1]);
    }
    if (t.lambda.size() < 2) throw ValidationError(path.string() + ": need at least 2 samples");
    return t;
}

SpectralCurve sample_curve(const std::vector<double>& lambda,
                           const std::vector<double>& values,
                           const SpectralGrid& grid) {
    std::vector<double> out(static_cast<std::size_t>(grid.count));
    for (int i = 0; i < grid.count; ++i)
        out[static_cast<std::size_t>(i)] = interp_linear(lambda, values, grid.at(i));
    return SpectralCurve(grid, std::move(out));
}

SpectralCurve sample_curve(const DispersionTable& table, const SpectralGrid& grid,
                           bool imaginary_part) {
    std::vector<double> out(static_cast<std::size_t>(grid.count));
    for (int i = 0; i < grid.count; ++i) {
        const auto idx = table.interp_index(grid.at(i));
        out[static_cast<std::size_t>(i)] = imaginary_part ? idx.imag() : idx.real();
    }
    return SpectralCurve(grid, std::move(out));
}

} // namespace flakeforge
