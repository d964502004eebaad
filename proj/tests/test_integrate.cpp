#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cstrack/integrate.hpp"
#include "test_util.hpp"

using namespace cstrack;
using test::ConstantField;
using test::EjectorField;
using test::Linear1DField;

namespace {

Domain big_box() { return make_domain_2d(-1e6, 1e6, -1e6, 1e6); }

}  // namespace

TEST_CASE("flow map is exact for constant fields") {
    const ConstantField field(1.0, 0.0);
    const FlowSpec spec = make_flow_spec(field, big_box(), 1.0);
    const FlowResult r = flow_map(spec, 0.0, {0.0, 0.0});
    REQUIRE_FALSE(r.escaped);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.x[1] == 0.0);
}

TEST_CASE("linear test field reaches e with RK4 accuracy") {
    const Linear1DField field;
    Domain line;
    line.dim = 1;
    line.axis[0] = {-100.0, 100.0, false};
    const FlowSpec spec = make_flow_spec(field, line, 1.0, 0.1);
    const FlowResult r = flow_map(spec, 0.0, {1.0, 0.0});
    REQUIRE_FALSE(r.escaped);
    CHECK(std::abs(r.x[0] - 2.718281828459045) < 1e-5);
}

TEST_CASE("halving h gains a factor of about 16 on the linear field") {
    const Linear1DField field;
    Domain line;
    line.dim = 1;
    line.axis[0] = {-100.0, 100.0, false};
    double prev = 0.0;
    for (const double h : {0.2, 0.1, 0.05, 0.025}) {
        const FlowSpec spec = make_flow_spec(field, line, 1.0, h);
        const double err = std::abs(flow_map(spec, 0.0, {1.0, 0.0}).x[0] -
                                    2.718281828459045);
        if (prev > 0.0) {
            const double ratio = prev / err;
            CHECK(ratio > 12.0);
            CHECK(ratio < 20.0);
        }
        prev = err;
    }
}

TEST_CASE("double well centre is an equilibrium") {
    const DoubleWellField field;
    const Domain box = make_domain_2d(-std::numbers::pi, std::numbers::pi,
                                      -std::numbers::pi, std::numbers::pi);
    const FlowSpec spec = make_flow_spec(field, box, 1.0);
    const FlowResult r = flow_map(spec, 0.0, {2.0, 0.0});
    REQUIRE_FALSE(r.escaped);
    CHECK(r.x[0] == 2.0);
    CHECK(r.x[1] == 0.0);
}

TEST_CASE("flow compose basics") {
    const ConstantField field(1.0, 0.0);
    const FlowSpec spec = make_flow_spec(field, big_box(), 1.0);

    const FlowResult id = flow_compose(spec, 0.0, {0.25, -0.5}, 0);
    REQUIRE_FALSE(id.escaped);
    CHECK(id.x[0] == 0.25);
    CHECK(id.x[1] == -0.5);

    const FlowResult three = flow_compose(spec, 0.0, {0.0, 0.0}, 3);
    REQUIRE_FALSE(three.escaped);
    CHECK(three.x[0] == doctest::Approx(3.0).epsilon(1e-14));

    // n = 2 equals two flow_map applications with advancing labels.
    const DoubleWellField dw;
    const Domain box = make_domain_2d(-4.0, 4.0, -4.0, 4.0);
    const FlowSpec dspec = make_flow_spec(dw, box, 1.0);
    const Point x0{1.0, 0.3};
    const FlowResult once = flow_map(dspec, 5.0, x0);
    REQUIRE_FALSE(once.escaped);
    const FlowResult twice = flow_map(dspec, 6.0, once.x);
    const FlowResult composed = flow_compose(dspec, 5.0, x0, 2);
    REQUIRE_FALSE(composed.escaped);
    CHECK(composed.x[0] == twice.x[0]);
    CHECK(composed.x[1] == twice.x[1]);
}

TEST_CASE("semigroup property on exact-arithmetic fields") {
    const Linear1DField field;
    Domain line;
    line.dim = 1;
    line.axis[0] = {-1e9, 1e9, false};
    const FlowSpec spec = make_flow_spec(field, line, 0.5, 0.05);
    for (const auto [n, m] : {std::pair{2, 3}, {1, 4}, {3, 3}}) {
        const FlowResult whole = flow_compose(spec, 0.0, {1.0, 0.0}, n + m);
        const FlowResult part = flow_compose(spec, 0.0, {1.0, 0.0}, n);
        const FlowResult rest = flow_compose(spec, n * spec.tau, part.x, m);
        REQUIRE_FALSE(whole.escaped);
        CHECK(std::abs(whole.x[0] - rest.x[0]) < 1e-12 * std::abs(whole.x[0]));
    }
}

TEST_CASE("escape is reported as a value") {
    const EjectorField field;
    const FlowSpec spec = make_flow_spec(field, make_domain_2d(0.0, 1.0, 0.0, 1.0), 1.0);
    const FlowResult r = flow_map(spec, 0.0, {0.5, 0.5});
    CHECK(r.escaped);
}

TEST_CASE("periodic axes wrap before the escape test") {
    const ConstantField field(0.3, 0.0);
    Domain box = make_domain_2d(0.0, 1.0, 0.0, 1.0, /*x_periodic=*/true);
    const FlowSpec spec = make_flow_spec(field, box, 1.0);
    FlowResult r{false, {0.9, 0.5}};
    for (int i = 0; i < 10; ++i) {
        r = flow_map(spec, i * 1.0, r.x);
        REQUIRE_FALSE(r.escaped);
        CHECK(r.x[0] >= 0.0);
        CHECK(r.x[0] < 1.0);
    }
}

TEST_CASE("zero-step hook is the identity") {
    const DoubleWellField field;
    const Domain box = make_domain_2d(-4.0, 4.0, -4.0, 4.0);
    FlowSpec spec;
    spec.field = &field;
    spec.domain = box;
    spec.tau = 0.0;
    const FlowResult r = flow_map(spec, 3.0, {0.7, -0.2});
    REQUIRE_FALSE(r.escaped);
    CHECK(r.x[0] == 0.7);
    CHECK(r.x[1] == -0.2);
}

TEST_CASE("flow spec validation") {
    const DoubleWellField field;
    const Domain box = make_domain_2d(-4.0, 4.0, -4.0, 4.0);
    CHECK_THROWS_AS(make_flow_spec(field, box, 1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(make_flow_spec(field, box, 1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(make_flow_spec(field, box, -1.0), ConfigError);
}
