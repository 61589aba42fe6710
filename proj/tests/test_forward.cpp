#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfg/experiment.hpp"
#include "mfg/forward.hpp"
#include "oracle.hpp"

using namespace mfg;
constexpr double pi = std::numbers::pi;

namespace {

PresetProblem paper_1d(int I = 50, int N = 100)
{
    ExperimentConfig c;
    c.points_per_dim = I;
    c.time_steps = N;
    return preset_problem(c);
}

MFGProblem smooth_problem(int I, int N)
{
    const auto g = make_grid(1, I, N, 1.0);
    SpatialField m0(g.spatial_size());
    SpatialField uT(g.spatial_size());
    for (std::size_t i = 0; i < m0.size(); ++i) {
        const double x = g.coordinate(i, 0);
        m0[i] = 1.0 + 0.5 * std::cos(2 * pi * x);
        uT[i] = 0.1 * std::sin(2 * pi * x);
    }
    return make_problem(g, 0.3, m0, uT);
}

} // namespace

TEST_CASE("policy update")
{
    const auto g = make_grid(1, 16, 4, 1.0);
    const auto q = policy_update(g, ScalarField(g, 4.2));
    for (double v : q.values()) {
        CHECK(v == 0.0);
    }

    std::mt19937 rng(31);
    ScalarField u(g);
    for (double& v : u.values()) {
        v = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    const auto qu = policy_update(g, u);
    for (std::size_t n = 0; n < g.levels(); ++n) {
        const auto ref = one_sided_gradients(g, u.level(n));
        for (std::size_t k = 0; k < ref.size(); ++k) {
            CHECK(qu.level(n)[k] == ref[k]);
        }
    }

    double prev = 0.0;
    for (int I : {32, 64, 128}) {
        const auto gg = make_grid(1, I, 2, 1.0);
        ScalarField s(gg);
        for (std::size_t n = 0; n < gg.levels(); ++n) {
            for (std::size_t i = 0; i < gg.spatial_size(); ++i) {
                s.level(n)[i] = std::sin(2 * pi * gg.coordinate(i, 0));
            }
        }
        const auto qs = policy_update(gg, s);
        double err = 0.0;
        for (std::size_t i = 0; i < gg.spatial_size(); ++i) {
            const double exact = 2 * pi * std::cos(2 * pi * gg.coordinate(i, 0));
            err = std::max({err, std::abs(qs.level(0)[2 * i] - exact), std::abs(qs.level(0)[2 * i + 1] - exact)});
        }
        if (prev > 0.0) {
            CHECK(prev / err == doctest::Approx(2.0).epsilon(0.05));
        }
        prev = err;
    }
}

TEST_CASE("policy gap")
{
    const auto g = make_grid(1, 4, 2, 1.0);
    PolicyField a(g);
    PolicyField b(g);
    CHECK(policy_gap(g, a, b) == 0.0);
    // One component at one point on level 1: sqrt(3^2 * dx).
    b.level(1)[5] = 3.0;
    CHECK(policy_gap(g, a, b) == doctest::Approx(3.0 * std::sqrt(0.25)));
}

TEST_CASE("forward policy iteration")
{
    SUBCASE("symmetric problem converges at once")
    {
        const auto g = make_grid(1, 8, 10, 1.0);
        const auto p = make_problem(g, 0.3, SpatialField(8, 1.0), SpatialField(8, 0.0));
        const auto sol = policy_iteration_forward(p, SpatialField(8, 0.0), PolicyField(g), 1e-9, 50);
        CHECK(sol.iterations == 1);
        for (double v : sol.q.values()) {
            CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        }
        for (double v : sol.m.values()) {
            CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
        }
        // u^n = u^{n+1} + dt F(1)
        for (std::size_t n = 0; n < g.levels(); ++n) {
            for (double v : sol.u.level(n)) {
                CHECK(v == doctest::Approx(g.horizon - static_cast<double>(n) * g.dt).epsilon(1e-12));
            }
        }
    }
    SUBCASE("1D preset: geometric gap decay and small residual")
    {
        const auto pp = paper_1d();
        const double tol = 1e-9;
        const auto sol = policy_iteration_forward(pp.problem, pp.b_true, PolicyField(pp.problem.grid), tol, 200);
        CHECK(sol.policy_gap_history.back() < tol);
        CHECK(sol.policy_gap_history.size() == static_cast<std::size_t>(sol.iterations));
        // Log-linear decay after the transient.
        const auto& h = sol.policy_gap_history;
        for (std::size_t k = 5; k < h.size(); ++k) {
            CHECK(h[k] < h[k - 1]);
        }
        const auto r = mfg_residual(pp.problem, pp.b_true, sol.u, sol.m);
        CHECK(r.hjb <= 10 * tol);
        CHECK(r.fp <= 10 * tol);
    }
    SUBCASE("iteration cap")
    {
        const auto pp = paper_1d(20, 20);
        CHECK_THROWS_AS(policy_iteration_forward(pp.problem, pp.b_true, PolicyField(pp.problem.grid), 1e-9, 3),
                        ConvergenceError);
        CHECK_THROWS_AS(policy_iteration_forward(pp.problem, pp.b_true, PolicyField(pp.problem.grid), 0.0, 3),
                        InvalidArgument);
    }
}

TEST_CASE("measurements")
{
    SUBCASE("terminal-rate stencils agree to first order in dt")
    {
        double prev = 0.0;
        for (int N : {40, 80, 160}) {
            const auto p = smooth_problem(32, N);
            SpatialField b(32);
            for (std::size_t i = 0; i < b.size(); ++i) {
                b[i] = 0.2 * std::cos(2 * pi * p.grid.coordinate(i, 0));
            }
            const auto sol = policy_iteration_forward(p, b, PolicyField(p.grid), 1e-12, 200);
            const auto bd = measure(p, b, sol.u, sol.m, DataKind::TerminalRate, TerminalRateStencil::BackwardDifference);
            const auto rhs = measure(p, b, sol.u, sol.m, DataKind::TerminalRate, TerminalRateStencil::PdeRightHandSide);
            double diff = 0.0;
            for (std::size_t i = 0; i < bd.size(); ++i) {
                diff = std::max(diff, std::abs(bd[i] - rhs[i]));
            }
            if (prev > 0.0) {
                CHECK(prev / diff == doctest::Approx(2.0).epsilon(0.15));
            }
            prev = diff;
        }
    }
    SUBCASE("initial value")
    {
        const auto p = smooth_problem(8, 10);
        const auto sol = policy_iteration_forward(p, SpatialField(8, 0.0), PolicyField(p.grid), 1e-12, 200);
        const auto u0 = measure(p, SpatialField(8, 0.0), sol.u, sol.m, DataKind::InitialValue,
                                TerminalRateStencil::PdeRightHandSide);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(u0[i] == sol.u.level(0)[i]);
        }
    }
}

TEST_CASE("normal sampler")
{
    NormalSampler a(42);
    NormalSampler b(42);
    for (int i = 0; i < 10; ++i) {
        CHECK(a() == b());
    }
    NormalSampler s(7);
    double mean = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = s();
        mean += z;
        sq += z * z;
    }
    mean /= n;
    sq /= n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(sq == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("observation level")
{
    const auto g = make_grid(1, 8, 100, 1.0);
    CHECK(observation_level(g, 0.2) == 20);
    CHECK_THROWS_AS(observation_level(g, 0.0), InvalidArgument);
    CHECK_THROWS_AS(observation_level(g, 1.0), InvalidArgument);
    CHECK_THROWS_AS(observation_level(g, 0.205), InvalidArgument);
}

TEST_CASE("data generation")
{
    const auto p = smooth_problem(8, 10);
    SpatialField b(8, 0.3);
    SUBCASE("noiseless data is the clean measurement for any seed")
    {
        const auto d1 = generate_data(p, b, DataKind::InitialValue, 0.0, 1);
        const auto d2 = generate_data(p, b, DataKind::InitialValue, 0.0, 999);
        CHECK(d1.g == d1.clean);
        CHECK(d1.g == d2.g);
        const auto t1 = generate_data(p, b, DataKind::TerminalRate, 0.0, 5);
        CHECK(t1.g == t1.clean);
        CHECK(t1.stencil == TerminalRateStencil::PdeRightHandSide);
    }
    SUBCASE("same seed reproduces the noise")
    {
        const auto d1 = generate_data(p, b, DataKind::TerminalRate, 0.01, 12);
        const auto d2 = generate_data(p, b, DataKind::TerminalRate, 0.01, 12);
        const auto d3 = generate_data(p, b, DataKind::TerminalRate, 0.01, 13);
        CHECK(d1.g == d2.g);
        CHECK(d1.g != d3.g);
    }
    SUBCASE("noise magnitude over 1000 seeds")
    {
        double acc = 0.0;
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const auto d = generate_data(p, b, DataKind::InitialValue, 0.01, seed);
            std::vector<double> eta(8);
            for (std::size_t i = 0; i < 8; ++i) {
                eta[i] = d.g[i] - d.clean[i];
            }
            acc += l2_norm(p.grid, eta) / l2_norm(p.grid, d.clean);
        }
        CHECK(acc / 1000.0 == doctest::Approx(0.01).epsilon(0.05));
    }
    SUBCASE("extra observations")
    {
        DataOptions opt;
        opt.extra_times = {0.5};
        const auto d = generate_data(p, b, DataKind::InitialValue, 0.0, 0, opt);
        REQUIRE(d.extra.size() == 1);
        CHECK(d.extra[0].level == 5);
        CHECK(d.extra[0].g == d.extra[0].clean);
        CHECK_THROWS_AS(generate_data(p, b, DataKind::TerminalRate, 0.0, 0, opt), InvalidArgument);
        CHECK_THROWS_AS(generate_data(p, b, DataKind::InitialValue, -0.1, 0), InvalidArgument);
    }
}
