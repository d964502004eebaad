#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "cstrack/ulam.hpp"
#include "test_util.hpp"

using namespace cstrack;
using test::ConstantField;
using test::EjectorField;

namespace {

constexpr double kPi = std::numbers::pi;

BinPartition unit_square(int nx, int ny, bool px = false, bool py = false) {
    return make_partition(make_domain_2d(0.0, 1.0, 0.0, 1.0, px, py), nx, ny);
}

FlowSpec identity_hook(const VectorField& field, const Domain& domain) {
    FlowSpec spec;
    spec.field = &field;
    spec.domain = domain;
    spec.tau = 0.0;
    return spec;
}

double row_sum(const UlamMatrix& m, int r) {
    double s = 0.0;
    for (SparseMat::InnerIterator it(m.P, r); it; ++it) s += it.value();
    return s;
}

void check_weights_are_multiples(const UlamMatrix& m) {
    for (int r = 0; r < m.P.outerSize(); ++r) {
        CHECK(row_sum(m, r) <= 1.0 + 1e-12);
        CHECK(row_sum(m, r) >= 0.0);
        for (SparseMat::InnerIterator it(m.P, r); it; ++it) {
            const double kq = it.value() * m.Q;
            CHECK(std::abs(kq - std::lround(kq)) < 1e-9);
            CHECK(it.value() > 0.0);
        }
    }
}

}  // namespace

TEST_CASE("bin partition locates points and tiles exactly") {
    const BinPartition part = unit_square(4, 2);
    CHECK(part.bin_count() == 8);
    CHECK(part.locate({0.1, 0.1}).value() == 0);
    CHECK(part.locate({0.9, 0.9}).value() == 7);
    // Boundary points belong to the lower-indexed corner's bin.
    CHECK(part.locate({0.25, 0.0}).value() == 1);
    CHECK(part.locate({0.5, 0.5}).value() == 6);
    // The non-periodic upper bound is outside (half-open bins).
    CHECK_FALSE(part.locate({1.0, 0.5}).has_value());
    CHECK_FALSE(part.locate({-0.01, 0.5}).has_value());

    const BinPartition wrap = unit_square(4, 2, true, false);
    CHECK(wrap.locate({1.0, 0.5}).value() == wrap.locate({0.0, 0.5}).value());
    CHECK(wrap.locate({-0.1, 0.2}).value() == wrap.locate({0.9, 0.2}).value());
}

TEST_CASE("seed points: lattice and rng schemes") {
    const BinPartition part = unit_square(4, 4);

    const auto centre = seed_points(part, 5, 1, {SeedScheme::Lattice, 0});
    REQUIRE(centre.size() == 1);
    CHECK(centre[0][0] == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(centre[0][1] == doctest::Approx(0.375).epsilon(1e-15));

    const auto lattice = seed_points(part, 0, 100, {SeedScheme::Lattice, 0});
    REQUIRE(lattice.size() == 100);
    std::set<std::pair<int, int>> offsets;
    for (const Point& p : lattice) {
        // Offsets are (i + 0.5)/10 per axis within the bin.
        const double fx = p[0] / 0.25 * 10.0 - 0.5;
        const double fy = p[1] / 0.25 * 10.0 - 0.5;
        CHECK(std::abs(fx - std::lround(fx)) < 1e-9);
        CHECK(std::abs(fy - std::lround(fy)) < 1e-9);
        offsets.insert({static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy))});
    }
    CHECK(offsets.size() == 100);

    CHECK_THROWS_AS(seed_points(part, 0, 50, {SeedScheme::Lattice, 0}), ConfigError);

    const auto rng1 = seed_points(part, 3, 64, {SeedScheme::Rng, 42});
    const auto rng2 = seed_points(part, 3, 64, {SeedScheme::Rng, 42});
    REQUIRE(rng1.size() == 64);
    CHECK(rng1 == rng2);
    const auto rng3 = seed_points(part, 3, 64, {SeedScheme::Rng, 43});
    CHECK(rng1 != rng3);
    for (const Point& p : rng1) {
        CHECK(part.locate(p).value() == 3);
    }
}

TEST_CASE("identity map yields the identity matrix") {
    const ConstantField still(0.0, 0.0);
    const BinPartition part = unit_square(4, 4);
    const FlowSpec hook = identity_hook(still, part.domain);
    const UlamMatrix m = build_ulam(hook, part, 0.0, {25, {SeedScheme::Lattice, 0}, 1});

    CHECK(m.rows() == 16);
    CHECK(m.cols() == 16);
    CHECK(m.P.nonZeros() == 16);
    for (int r = 0; r < 16; ++r) {
        SparseMat::InnerIterator it(m.P, r);
        REQUIRE(it);
        CHECK(it.col() == r);
        CHECK(it.value() == 1.0);
    }
}

TEST_CASE("translation by one bin width is a cyclic permutation") {
    const int nx = 4, ny = 4;
    const BinPartition part = unit_square(nx, ny, /*px=*/true, /*py=*/false);
    const ConstantField shift(0.25, 0.0);
    const FlowSpec spec = make_flow_spec(shift, part.domain, 1.0);
    const UlamBuildOptions opts{25, {SeedScheme::Lattice, 0}, 1};
    const UlamMatrix m = build_ulam(spec, part, 0.0, opts);

    // Oracle: translate every lattice point by hand and count bin images.
    std::map<std::pair<int, int>, int> expected;
    for (int b = 0; b < part.bin_count(); ++b)
        for (const Point& p : seed_points(part, b, opts.Q, opts.seeds)) {
            Point q{p[0] + 0.25, p[1]};
            if (q[0] >= 1.0) q[0] -= 1.0;
            expected[{b, part.locate(q).value()}]++;
        }

    CHECK(m.P.nonZeros() == static_cast<Eigen::Index>(expected.size()));
    for (int r = 0; r < m.P.outerSize(); ++r)
        for (SparseMat::InnerIterator it(m.P, r); it; ++it) {
            const auto found = expected.find({r, static_cast<int>(it.col())});
            REQUIRE(found != expected.end());
            CHECK(it.value() == doctest::Approx(double(found->second) / opts.Q));
        }

    // And this particular oracle is the cyclic permutation ix -> ix + 1.
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const int from = part.flatten(ix, iy);
            const int to = part.flatten((ix + 1) % nx, iy);
            CHECK(expected[{from, to}] == opts.Q);
        }
}

TEST_CASE("all mass escaping yields the zero matrix") {
    const EjectorField eject;
    const BinPartition part = unit_square(4, 4);
    const FlowSpec spec = make_flow_spec(eject, part.domain, 1.0);
    const UlamMatrix m = build_ulam(spec, part, 0.0, {25, {SeedScheme::Lattice, 0}, 1});
    CHECK(m.P.nonZeros() == 0);
    CHECK(m.rows() == 16);
    CHECK(m.cols() == 16);
}

TEST_CASE("double well matrix is substochastic with k/Q entries") {
    const DoubleWellField field;
    const BinPartition part =
        make_partition(make_domain_2d(-kPi, kPi, -kPi, kPi), 16, 16);
    const FlowSpec spec = make_flow_spec(field, part.domain, 1.0);
    const UlamMatrix m = build_ulam(spec, part, 0.0, {25, {SeedScheme::Lattice, 7}, 2});

    check_weights_are_multiples(m);
    CHECK(m.P.nonZeros() <= part.bin_count() * 25);
    CHECK(m.P.nonZeros() > 0);

    // rng scheme: still substochastic with k/Q entries.
    const UlamMatrix r = build_ulam(spec, part, 0.0, {25, {SeedScheme::Rng, 7}, 2});
    check_weights_are_multiples(r);
}

TEST_CASE("volume preservation: column sums near one on the divergence-free well") {
    const DoubleWellField field;
    const BinPartition part =
        make_partition(make_domain_2d(-kPi, kPi, -kPi, kPi), 64, 64);
    const FlowSpec spec = make_flow_spec(field, part.domain, 1.0);
    const UlamMatrix m = build_ulam(spec, part, 0.0, {100, {SeedScheme::Lattice, 0}, 2});

    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m.cols());
    for (int r = 0; r < m.P.outerSize(); ++r)
        for (SparseMat::InnerIterator it(m.P, r); it; ++it) colsum[it.col()] += it.value();
    // Columns that receive mass receive about one bin's worth of it; columns
    // whose preimage escaped stay empty and are excluded from the average.
    int occupied = 0;
    double total = 0.0;
    for (int c = 0; c < colsum.size(); ++c)
        if (colsum[c] > 0.0) {
            ++occupied;
            total += colsum[c];
        }
    REQUIRE(occupied > 0);
    const double mean = total / occupied;
    CHECK(mean > 0.9);
    CHECK(mean < 1.1);
}

TEST_CASE("growing-domain chains share their index frontier") {
    const DoubleWellField field;
    const BinPartition part =
        make_partition(make_domain_2d(-kPi, kPi, -kPi, kPi), 16, 16);
    const FlowSpec spec = make_flow_spec(field, part.domain, 1.0);

    const std::vector<int> seeds = part.bins_with_center_below(0, 0.0);  // left half
    REQUIRE(seeds.size() == 128);

    const auto chain =
        build_window_chain(spec, part, 0.0, 4, seeds, {25, {SeedScheme::Lattice, 0}, 2});
    REQUIRE(chain.size() == 4);
    CHECK(chain[0].row_bins == seeds);
    for (std::size_t j = 0; j + 1 < chain.size(); ++j)
        CHECK(chain[j].col_bins == chain[j + 1].row_bins);
    for (const UlamMatrix& m : chain) {
        // active rows are a prefix of the active columns
        REQUIRE(m.cols() >= m.rows());
        for (int i = 0; i < m.rows(); ++i) CHECK(m.row_bins[i] == m.col_bins[i]);
        check_weights_are_multiples(m);
    }
    // Mass spreads: the column set must actually grow somewhere in the chain.
    CHECK(chain.back().cols() > static_cast<int>(seeds.size()));
}

TEST_CASE("build rejects mismatched domains") {
    const ConstantField still(0.0, 0.0);
    const BinPartition part = unit_square(4, 4);
    const FlowSpec other = make_flow_spec(still, make_domain_2d(0.0, 2.0, 0.0, 1.0), 1.0);
    CHECK_THROWS_AS(build_ulam(other, part, 0.0, UlamBuildOptions{}), ConfigError);
}
