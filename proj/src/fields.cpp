#include "cstrack/fields.hpp"

#include <cmath>
#include <numbers>

namespace cstrack {

namespace {
constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }
}  // namespace

double forcing_alpha(double t) {
    double s = std::fmod(t, 100.0);
    if (s < 0.0) s += 100.0;
    if (s <= 10.0) return 1.0;
    if (s <= 40.0) return sq(std::cos((s - 10.0) * kPi / 60.0));
    if (s <= 60.0) return 0.0;
    if (s <= 90.0) return sq(std::cos((s - 30.0) * kPi / 60.0));
    return 1.0;
}

double forcing_alpha_tilde(double t, double gamma) {
    return forcing_alpha(t) + gamma * sq(std::cos(10.0 * t));
}

DoubleWellField::DoubleWellField(Forcing forcing, double gamma)
    : forcing_(forcing), gamma_(gamma) {
    if (gamma < 0.0) throw ConfigError("double well: gamma must be >= 0");
}

bool DoubleWellField::velocity(double t, const Point& x, Point& v) const {
    const double a = forcing_ == Forcing::Periodic ? forcing_alpha(t)
                                                   : forcing_alpha_tilde(t, gamma_);
    v[0] = x[1];
    v[1] = x[0] * (x[0] / 2.0 + a) * (a - x[0] / 2.0);
    return true;
}

GriddedField::GriddedField(GriddedFieldData data) : data_(std::move(data)) {
    if (data_.nlon < 2 || data_.nlat < 2 || data_.nt < 2)
        throw ConfigError("gridded field: need at least 2 samples per axis");
    if (data_.dlon <= 0.0 || data_.dlat <= 0.0 || data_.dt <= 0.0)
        throw ConfigError("gridded field: grid spacings must be positive");
    if (data_.radius_m <= 0.0)
        throw ConfigError("gridded field: radius must be positive");
    if (data_.u.size() != data_.samples() || data_.v.size() != data_.samples())
        throw FormatError("gridded field: array shapes inconsistent with grid lengths");
    // The longitude axis is periodic; the grid has to close the circle.
    if (std::abs(data_.dlon * data_.nlon - 360.0) > 1e-9 * 360.0)
        throw ConfigError("gridded field: longitude grid must cover 360 degrees");
    data_.u.shrink_to_fit();
    data_.v.shrink_to_fit();
    deg_per_hour_ = (180.0 / kPi) * 3600.0 / data_.radius_m;
}

bool GriddedField::velocity(double t, const Point& x, Point& v) const {
    const double lat = x[1];
    if (t < time_min() || t > time_max()) return false;
    if (lat < lat_min() || lat > lat_max()) return false;
    if (std::abs(lat) >= 90.0) return false;  // cos(lat) singularity at the poles

    // Fractional indices; time and latitude are clamped so that queries at the
    // very last node interpolate from the final cell.
    double ft = (t - data_.t0) / data_.dt;
    int it = static_cast<int>(ft);
    if (it > data_.nt - 2) it = data_.nt - 2;
    ft -= it;

    double flat = (lat - data_.lat0) / data_.dlat;
    int ilat = static_cast<int>(flat);
    if (ilat > data_.nlat - 2) ilat = data_.nlat - 2;
    flat -= ilat;

    double lon = std::fmod(x[0] - data_.lon0, 360.0);
    if (lon < 0.0) lon += 360.0;
    double flon = lon / data_.dlon;
    int ilon = static_cast<int>(flon);
    if (ilon > data_.nlon - 1) ilon = data_.nlon - 1;
    flon -= ilon;
    const int ilon1 = (ilon + 1) % data_.nlon;  // wrap across the seam

    const auto at = [&](const std::vector<double>& f, int kt, int klat, int klon) {
        return f[(static_cast<std::size_t>(kt) * data_.nlat + klat) * data_.nlon + klon];
    };
    const auto bilinear = [&](const std::vector<double>& f, int kt) {
        const double f00 = at(f, kt, ilat, ilon);
        const double f01 = at(f, kt, ilat, ilon1);
        const double f10 = at(f, kt, ilat + 1, ilon);
        const double f11 = at(f, kt, ilat + 1, ilon1);
        return (1.0 - flat) * ((1.0 - flon) * f00 + flon * f01) +
               flat * ((1.0 - flon) * f10 + flon * f11);
    };

    const double u_ms = (1.0 - ft) * bilinear(data_.u, it) + ft * bilinear(data_.u, it + 1);
    const double v_ms = (1.0 - ft) * bilinear(data_.v, it) + ft * bilinear(data_.v, it + 1);

    v[0] = u_ms * deg_per_hour_ / std::cos(lat * kPi / 180.0);
    v[1] = v_ms * deg_per_hour_;
    return true;
}

}  // namespace cstrack
