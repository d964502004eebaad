#ifndef CSTRACK_FIELDS_HPP
#define CSTRACK_FIELDS_HPP

#include <cstdint>
#include <vector>

#include "cstrack/types.hpp"

namespace cstrack {

/// Piecewise well-separation forcing, extended periodically with period 100.
/// Takes values in [0, 1]; the wells sit at x = +-2*alpha(t).
double forcing_alpha(double t);

/// Quasi-periodic forcing alpha(t) + gamma * cos^2(10 t).
double forcing_alpha_tilde(double t, double gamma);

/// Time-dependent velocity field. Implementations are immutable after
/// construction and safe to evaluate concurrently.
class VectorField {
  public:
    virtual ~VectorField() = default;

    virtual int dimension() const = 0;

    /// Velocity at time t and position x. Returns false when (t, x) lies
    /// outside the field's data range; the integrator treats that as escape.
    virtual bool velocity(double t, const Point& x, Point& v) const = 0;
};

enum class Forcing { Periodic, QuasiPeriodic };

/// Driven double-well flow
///   dx/dt = y
///   dy/dt = x (x/2 + a(t)) (a(t) - x/2)
/// with a = alpha (periodic) or alpha_tilde (quasi-periodic, amplitude gamma).
class DoubleWellField final : public VectorField {
  public:
    explicit DoubleWellField(Forcing forcing = Forcing::Periodic, double gamma = 0.0);

    int dimension() const override { return 2; }
    bool velocity(double t, const Point& x, Point& v) const override;

  private:
    Forcing forcing_;
    double gamma_;
};

/// Raw gridded wind-field arrays: u, v in m/s, indexed (time, lat, lon)
/// row-major. The longitude grid must cover a full circle.
struct GriddedFieldData {
    double lon0 = 0.0, dlon = 1.0;
    int nlon = 0;
    double lat0 = 0.0, dlat = 1.0;
    int nlat = 0;
    double t0 = 0.0, dt = 1.0;
    int nt = 0;
    double radius_m = 6.371e6;
    std::vector<double> u;  // eastward speed, m/s
    std::vector<double> v;  // northward speed, m/s

    std::size_t samples() const {
        return static_cast<std::size_t>(nt) * nlat * nlon;
    }
};

/// Gridded wind field over (lon, lat) in degrees and time in hours.
/// Evaluation interpolates u, v linearly in space and time, then converts to
/// angular velocity in degrees per hour:
///   dlon/dt = u / (R cos(lat)),   dlat/dt = v / R.
/// Longitude wraps modulo 360. Queries outside the time or latitude range
/// (including within machine epsilon of a pole) are out of range.
class GriddedField final : public VectorField {
  public:
    explicit GriddedField(GriddedFieldData data);

    int dimension() const override { return 2; }
    bool velocity(double t, const Point& x, Point& v) const override;

    double time_min() const { return data_.t0; }
    double time_max() const { return data_.t0 + data_.dt * (data_.nt - 1); }
    double lat_min() const { return data_.lat0; }
    double lat_max() const { return data_.lat0 + data_.dlat * (data_.nlat - 1); }
    double lon_origin() const { return data_.lon0; }
    const GriddedFieldData& data() const { return data_; }

  private:
    GriddedFieldData data_;
    double deg_per_hour_;  // (180/pi) * 3600 / R
};

}  // namespace cstrack

#endif
