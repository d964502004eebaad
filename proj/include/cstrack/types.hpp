#ifndef CSTRACK_TYPES_HPP
#define CSTRACK_TYPES_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cstrack {

/// State point. The state space is 1-D or 2-D; for 1-D problems the second
/// component is ignored.
using Point = std::array<double, 2>;

struct AxisSpec {
    double lo = 0.0;
    double hi = 1.0;
    bool periodic = false;

    double width() const { return hi - lo; }
};

/// Rectangular state-space domain. Periodic axes identify lo with hi.
struct Domain {
    int dim = 2;
    std::array<AxisSpec, 2> axis{};

    bool contains(const Point& x) const {
        for (int d = 0; d < dim; ++d) {
            if (axis[d].periodic) continue;
            if (x[d] < axis[d].lo || x[d] >= axis[d].hi) return false;
        }
        return true;
    }

    /// Wrap periodic coordinates into [lo, hi).
    Point wrapped(Point x) const {
        for (int d = 0; d < dim; ++d) {
            if (!axis[d].periodic) continue;
            const double w = axis[d].width();
            double y = std::fmod(x[d] - axis[d].lo, w);
            if (y < 0.0) y += w;
            x[d] = axis[d].lo + y;
        }
        return x;
    }
};

inline Domain make_domain_2d(double x_lo, double x_hi, double y_lo, double y_hi,
                             bool x_periodic = false, bool y_periodic = false) {
    Domain d;
    d.dim = 2;
    d.axis[0] = {x_lo, x_hi, x_periodic};
    d.axis[1] = {y_lo, y_hi, y_periodic};
    return d;
}

/// Invalid configuration or parameters (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required upstream file is missing or unreadable (CLI exit code 3).
struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A file exists but violates its format contract (CLI exit code 3).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite arithmetic or solver non-convergence (CLI exit code 4).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cstrack

#endif
