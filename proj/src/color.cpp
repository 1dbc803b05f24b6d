#include "flakeforge/color.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "flakeforge/error.hpp"

namespace flakeforge {

double Mat3::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7])
         - m[1] * (m[3] * m[8] - m[5] * m[6])
         + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 Mat3::inverse() const {
    const double d = det();
    if (std::abs(d) < 1e-300) throw ValidationError("color matrix is singular");
    const double inv = 1.0 / d;
    Mat3 r;
    r.m[0] = (m[4] * m[8] - m[5] * m[7]) * inv;
    r.m[1] = (m[2] * m[7] - m[1] * m[8]) * inv;
    r.m[2] = (m[1] * m[5] - m[2] * m[4]) * inv;
    r.m[3] = (m[5] * m[6] - m[3] * m[8]) * inv;
    r.m[4] = (m[0] * m[8] - m[2] * m[6]) * inv;
    r.m[5] = (m[2] * m[3] - m[0] * m[5]) * inv;
    r.m[6] = (m[3] * m[7] - m[4] * m[6]) * inv;
    r.m[7] = (m[1] * m[6] - m[0] * m[7]) * inv;
    r.m[8] = (m[0] * m[4] - m[1] * m[3]) * inv;
    return r;
}

ColorSystem::ColorSystem(SpectralCurve xbar, SpectralCurve ybar, SpectralCurve zbar,
                         SpectralCurve illuminant, Mat3 xyz_to_rgb, Xyz white_point)
    : grid_(xbar.grid),
      xbar_(std::move(xbar)), ybar_(std::move(ybar)), zbar_(std::move(zbar)),
      illuminant_(std::move(illuminant)),
      xyz_to_rgb_(xyz_to_rgb), rgb_to_xyz_(xyz_to_rgb.inverse()),
      white_(white_point) {
    if (!(ybar_.grid == grid_) || !(zbar_.grid == grid_) || !(illuminant_.grid == grid_))
        throw ShapeError("color system: curves must share one grid");
    if (!(white_.x > 0.0 && white_.y > 0.0 && white_.z > 0.0))
        throw ValidationError("color system: white point must be strictly positive");
    y_norm_ = 0.0;
    for (int i = 0; i < grid_.count; ++i)
        y_norm_ += ybar_.values[static_cast<std::size_t>(i)] *
                   illuminant_.values[static_cast<std::size_t>(i)];
    if (!(y_norm_ > 0.0))
        throw ValidationError("color system: illuminant-weighted luminance is zero");
}

ColorSystem load_color_system(const std::filesystem::path& json_path,
                              const SpectralGrid& grid) {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open " + json_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(json_path.string() + ": " + e.what());
    }
    try {
        const auto base = json_path.parent_path();
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };
        const auto cmf = load_cmf(resolve(j.at("cmf_path").get<std::string>()));
        const auto ill = load_illuminant(resolve(j.at("illuminant_path").get<std::string>()));
        const auto mat = j.at("xyz_to_rgb").get<std::vector<double>>();
        const auto wp = j.at("white_point").get<std::vector<double>>();
        if (mat.size() != 9) throw ValidationError(json_path.string() + ": xyz_to_rgb needs 9 numbers");
        if (wp.size() != 3) throw ValidationError(json_path.string() + ": white_point needs 3 numbers");
        Mat3 m;
        std::copy(mat.begin(), mat.end(), m.m.begin());
        return ColorSystem(sample_curve(cmf.lambda, cmf.xbar, grid),
                           sample_curve(cmf.lambda, cmf.ybar, grid),
                           sample_curve(cmf.lambda, cmf.zbar, grid),
                           sample_curve(ill.lambda, ill.power, grid),
                           m, Xyz{wp[0], wp[1], wp[2]});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(json_path.string() + ": " + e.what());
    }
}

Xyz spectrum_to_xyz(const SpectralCurve& reflectance, const ColorSystem& system) {
    if (!(reflectance.grid == system.grid()))
        throw ShapeError("spectrum_to_xyz: curve grid does not match color system grid");
    double x = 0.0, y = 0.0, z = 0.0;
    for (std::size_t i = 0; i < reflectance.values.size(); ++i) {
        const double w = system.illuminant().values[i] * reflectance.values[i];
        x += system.xbar().values[i] * w;
        y += system.ybar().values[i] * w;
        z += system.zbar().values[i] * w;
    }
    const double k = 1.0 / system.luminance_norm();
    return {x * k, y * k, z * k};
}

Rgb xyz_to_linear_rgb(const Xyz& xyz, const ColorSystem& system, int* clipped_channels) {
    const Xyz v = system.xyz_to_rgb_matrix().apply(xyz);
    int clipped = 0;
    auto clip = [&clipped](double c) {
        if (c < 0.0) { ++clipped; return 0.0; }
        if (c > 1.0) { ++clipped; return 1.0; }
        return c;
    };
    Rgb rgb{clip(v.x), clip(v.y), clip(v.z)};
    if (clipped_channels) *clipped_channels = clipped;
    return rgb;
}

double srgb_encode_channel(double linear) {
    const double v = linear <= 0.0031308
                         ? 12.92 * linear
                         : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
    return 255.0 * v;
}

double srgb_decode_channel(double display) {
    const double s = display / 255.0;
    return s <= 0.04045 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
}

std::array<double, 3> srgb_encode(const Rgb& rgb) {
    return {srgb_encode_channel(rgb.r), srgb_encode_channel(rgb.g), srgb_encode_channel(rgb.b)};
}

Rgb srgb_decode(const std::array<double, 3>& display) {
    return {srgb_decode_channel(display[0]), srgb_decode_channel(display[1]),
            srgb_decode_channel(display[2])};
}

namespace {

// CIE f(t) with the standard linear segment near zero.
double lab_f(double t) {
    constexpr double cube = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
    constexpr double slope = (29.0 / 6.0) * (29.0 / 6.0) / 3.0;
    return t > cube ? std::cbrt(t) : slope * t + 4.0 / 29.0;
}

} // namespace

Lab rgb_to_lab(const Rgb& rgb, const ColorSystem& system) {
    const Xyz xyz = system.rgb_to_xyz_matrix().apply({rgb.r, rgb.g, rgb.b});
    const auto& w = system.white_point();
    const double fx = lab_f(xyz.x / w.x);
    const double fy = lab_f(xyz.y / w.y);
    const double fz = lab_f(xyz.z / w.z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e(const Lab& c1, const Lab& c2) {
    const double dl = c1.l - c2.l;
    const double da = c1.a - c2.a;
    const double db = c1.b - c2.b;
    return std::sqrt(dl * dl + da * da + db * db);
}

WbGain wb_gain(const Rgb& c_ref, const Rgb& c_0, bool normalize) {
    if (!(c_0.r > 0.0 && c_0.g > 0.0 && c_0.b > 0.0))
        throw DomainError("wb_gain: modeled color has a zero channel");
    WbGain g{c_ref.r / c_0.r, c_ref.g / c_0.g, c_ref.b / c_0.b};
    if (normalize) {
        const double mean = (g.r + g.g + g.b) / 3.0;
        if (!(mean > 0.0)) throw DomainError("wb_gain: cannot normalize zero gain");
        g.r /= mean;
        g.g /= mean;
        g.b /= mean;
    }
    return g;
}

Rgb apply_wb(const Rgb& color, const WbGain& gain) {
    auto clip01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    return {clip01(color.r * gain.r), clip01(color.g * gain.g), clip01(color.b * gain.b)};
}

} // namespace flakeforge
