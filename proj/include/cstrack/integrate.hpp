#ifndef CSTRACK_INTEGRATE_HPP
#define CSTRACK_INTEGRATE_HPP

#include "cstrack/fields.hpp"
#include "cstrack/types.hpp"

namespace cstrack {

/// One-step flow map specification: integrate the field for flow time tau
/// with fixed RK4 substeps of size h. tau/h must be a positive integer.
/// tau == 0 is the identity-map test hook (zero substeps).
struct FlowSpec {
    const VectorField* field = nullptr;
    Domain domain;
    double tau = 1.0;
    double h = 0.1;

    int substeps() const;
};

FlowSpec make_flow_spec(const VectorField& field, const Domain& domain, double tau,
                        double h = 0.0);  // h == 0 picks the default tau/10

struct FlowResult {
    bool escaped = false;
    Point x{};
};

/// Position after integrating from t to t+tau. Escape (leaving the domain, or
/// the field signalling out-of-range) is a value, not a failure; non-finite
/// arithmetic throws NumericalError.
FlowResult flow_map(const FlowSpec& spec, double t, Point x);

/// n-fold composition of flow_map with advancing time labels; n = 0 is the
/// identity.
FlowResult flow_compose(const FlowSpec& spec, double t, Point x, int n);

}  // namespace cstrack

#endif
