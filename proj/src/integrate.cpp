#include "cstrack/integrate.hpp"

#include <cmath>

namespace cstrack {

int FlowSpec::substeps() const {
    if (tau == 0.0) return 0;
    const double ratio = tau / h;
    const int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9 * ratio)
        throw ConfigError("flow spec: tau/h must be a positive integer");
    return n;
}

FlowSpec make_flow_spec(const VectorField& field, const Domain& domain, double tau,
                        double h) {
    if (tau < 0.0) throw ConfigError("flow spec: tau must be >= 0");
    FlowSpec spec;
    spec.field = &field;
    spec.domain = domain;
    spec.tau = tau;
    spec.h = h > 0.0 ? h : tau / 10.0;
    if (tau > 0.0) {
        if (spec.h > tau) throw ConfigError("flow spec: h must satisfy 0 < h <= tau");
        spec.substeps();  // validates divisibility
    }
    if (field.dimension() > domain.dim)
        throw ConfigError("flow spec: field dimension exceeds domain dimension");
    return spec;
}

namespace {

bool finite(const Point& x, int dim) {
    for (int d = 0; d < dim; ++d)
        if (!std::isfinite(x[d])) return false;
    return true;
}

}  // namespace

FlowResult flow_map(const FlowSpec& spec, double t, Point x) {
    const VectorField& f = *spec.field;
    const int dim = f.dimension();
    const int steps = spec.substeps();
    const double h = spec.h;

    Point k1{}, k2{}, k3{}, k4{}, y{};
    for (int j = 0; j < steps; ++j) {
        const double tj = t + j * h;

        if (!f.velocity(tj, x, k1)) return {true, x};
        for (int d = 0; d < dim; ++d) y[d] = x[d] + 0.5 * h * k1[d];
        if (!f.velocity(tj + 0.5 * h, y, k2)) return {true, x};
        for (int d = 0; d < dim; ++d) y[d] = x[d] + 0.5 * h * k2[d];
        if (!f.velocity(tj + 0.5 * h, y, k3)) return {true, x};
        for (int d = 0; d < dim; ++d) y[d] = x[d] + h * k3[d];
        if (!f.velocity(tj + h, y, k4)) return {true, x};

        for (int d = 0; d < dim; ++d)
            x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);

        if (!finite(x, dim))
            throw NumericalError("flow map: non-finite state (bad field data?)");

        // Wrap periodic axes first; the escape test applies to the wrapped point.
        x = spec.domain.wrapped(x);
        if (!spec.domain.contains(x)) return {true, x};
    }
    return {false, x};
}

FlowResult flow_compose(const FlowSpec& spec, double t, Point x, int n) {
    if (n < 0) throw ConfigError("flow compose: n must be >= 0");
    FlowResult r{false, x};
    for (int i = 0; i < n; ++i) {
        r = flow_map(spec, t + i * spec.tau, r.x);
        if (r.escaped) return r;
    }
    return r;
}

}  // namespace cstrack
