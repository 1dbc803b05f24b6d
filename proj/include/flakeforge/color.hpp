#pragma once

#include <array>
#include <filesystem>

#include "flakeforge/spectral.hpp"

namespace flakeforge {

// Linear-RGB triple in [0, 1] (clipping is applied only where an operation
// says so; intermediate values may leave the range).
struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
    double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
    double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
    bool operator==(const Rgb&) const = default;
};

struct Xyz {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct Lab {
    double l = 0.0, a = 0.0, b = 0.0;
};

// Per-channel white-balance multipliers, all > 0.
struct WbGain {
    double r = 1.0, g = 1.0, b = 1.0;
};

struct Mat3 {
    std::array<double, 9> m{};  // row-major
    Xyz apply(const Xyz& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 inverse() const;
    double det() const;
};

// Observer curves, illuminant, device matrix and white point, all resampled
// onto one wavelength grid at load time.
class ColorSystem {
public:
    ColorSystem(SpectralCurve xbar, SpectralCurve ybar, SpectralCurve zbar,
                SpectralCurve illuminant, Mat3 xyz_to_rgb, Xyz white_point);

    const SpectralGrid& grid() const { return grid_; }
    const SpectralCurve& xbar() const { return xbar_; }
    const SpectralCurve& ybar() const { return ybar_; }
    const SpectralCurve& zbar() const { return zbar_; }
    const SpectralCurve& illuminant() const { return illuminant_; }
    const Mat3& xyz_to_rgb_matrix() const { return xyz_to_rgb_; }
    const Mat3& rgb_to_xyz_matrix() const { return rgb_to_xyz_; }
    const Xyz& white_point() const { return white_; }
    double luminance_norm() const { return y_norm_; }  // sum of ybar * illuminant

private:
    SpectralGrid grid_;
    SpectralCurve xbar_, ybar_, zbar_, illuminant_;
    Mat3 xyz_to_rgb_, rgb_to_xyz_;
    Xyz white_;
    double y_norm_;
};

// Load a color system description:
//   { "cmf_path": ..., "illuminant_path": ...,
//     "xyz_to_rgb": [9 numbers row-major], "white_point": [3 numbers] }
// Relative data paths are resolved against the JSON file's directory.
ColorSystem load_color_system(const std::filesystem::path& json_path,
                              const SpectralGrid& grid);

// Tristimulus integration, normalized so a perfect reflector has Y = 1:
//   X_c = sum_i cmf_c(l_i) I(l_i) R(l_i) / sum_i ybar(l_i) I(l_i)
Xyz spectrum_to_xyz(const SpectralCurve& reflectance, const ColorSystem& system);

// Device matrix then clip to [0, 1]; *clipped_channels (optional) counts
// channels that were out of gamut.
Rgb xyz_to_linear_rgb(const Xyz& xyz, const ColorSystem& system,
                      int* clipped_channels = nullptr);

// sRGB transfer curve. Encode maps linear [0,1] to continuous display values
// in [0,255]; quantization to bytes happens at the image I/O boundary.
double srgb_encode_channel(double linear);
double srgb_decode_channel(double display);  // display in [0, 255]
std::array<double, 3> srgb_encode(const Rgb& rgb);
Rgb srgb_decode(const std::array<double, 3>& display);

// Linear RGB -> XYZ (inverse device matrix) -> CIE L*a*b* against the
// system white point.
Lab rgb_to_lab(const Rgb& rgb, const ColorSystem& system);

// CIE76: Euclidean distance in Lab.
double delta_e(const Lab& c1, const Lab& c2);

// Per-channel gain aligning a modeled color to a reference; optionally
// rescaled so the mean gain is 1 (fixes global exposure).
WbGain wb_gain(const Rgb& c_ref, const Rgb& c_0, bool normalize = false);

// Multiply by the gain, then clip to [0, 1].
Rgb apply_wb(const Rgb& color, const WbGain& gain);

} // namespace flakeforge
