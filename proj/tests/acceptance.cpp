// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// `acceptance --quick` swaps the 50x50 2D run for the 30x30 fallback.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mfg/direct_ls.hpp"
#include "mfg/experiment.hpp"
#include "mfg/inverse.hpp"
#include "mfg/optim.hpp"
#include "oracle.hpp"

using namespace mfg;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail)
{
    std::printf("%s  criterion %d  %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Fit {
    double slope = 0.0;
    double r2 = 0.0;
};

/// Least-squares line through (k, log e_k) for k = from..K (1-based).
Fit log_fit(const std::vector<double>& e, std::size_t from)
{
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = from; k <= e.size(); ++k) {
        const double x = static_cast<double>(k);
        const double y = std::log(e[k - 1]);
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Fit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - f.slope * sx) / n;
    double ssr = 0, sst = 0;
    for (std::size_t k = from; k <= e.size(); ++k) {
        const double y = std::log(e[k - 1]);
        const double r = y - (icpt + f.slope * static_cast<double>(k));
        ssr += r * r;
        sst += (y - sy / n) * (y - sy / n);
    }
    f.r2 = 1.0 - ssr / sst;
    return f;
}

double relative_l2(const Grid& g, std::span<const double> a, std::span<const double> ref)
{
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - ref[i];
    }
    return l2_norm(g, d) / l2_norm(g, ref);
}

PresetProblem paper_1d(double horizon = 1.0, int steps = 100)
{
    ExperimentConfig c;
    c.horizon = horizon;
    c.time_steps = steps;
    return preset_problem(c);
}

InverseResult run_policy(const PresetProblem& pp, const InverseData& data, double tol, double gamma = 0.0)
{
    InverseOptions opt;
    opt.tol = tol;
    opt.gamma = gamma;
    opt.opt_tol = 1e-10;
    opt.max_iter = 200;
    opt.b_true = pp.b_true;
    return policy_iteration_inverse(pp.problem, data, PolicyField(pp.problem.grid), opt);
}

double seconds(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criterion 7 building blocks -------------------------------------------

double max_diff(const ScalarField& f, const Eigen::MatrixXd& ref)
{
    double m = 0.0;
    for (std::size_t n = 0; n < f.levels(); ++n) {
        for (std::size_t i = 0; i < f.points(); ++i) {
            m = std::max(m, std::abs(f.level(n)[i] - ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n))));
        }
    }
    return m;
}

std::string property_suites(bool& ok)
{
    std::string out;
    auto check = [&](const char* name, double value, double bound) {
        const bool pass = value <= bound;
        ok = ok && pass;
        out += fmt("%s %.1e%s%.0e; ", name, value, pass ? "<=" : ">", bound);
    };
    std::mt19937 rng(2024);

    // FP mass, positivity, and the dense space-time oracles on I=8, N=10.
    double mass = 0.0;
    double neg = 0.0;
    double fp = 0.0;
    double hjb = 0.0;
    double adj = 0.0;
    for (int d : {1, 2}) {
        const auto g = make_grid(d, 8, 10, 1.0);
        const auto m0 = oracle::random_vector(g.spatial_size(), rng, 0.1, 1.0);
        const auto p = make_problem(g, 0.3, m0, oracle::random_vector(g.spatial_size(), rng));
        const auto q = oracle::random_policy(g, rng, 3.0);
        const auto m = solve_fp(p, q);
        for (std::size_t n = 0; n + 1 < m.levels(); ++n) {
            mass = std::max(mass, std::abs(integrate(g, m.level(n + 1)) - integrate(g, m.level(n))));
        }
        for (double v : m.values()) {
            neg = std::max(neg, -v);
        }
        fp = std::max(fp, max_diff(m, oracle::forward_space_time(g, q, p.eps, p.m0)));
        const auto b = oracle::random_vector(g.spatial_size(), rng);
        hjb = std::max(hjb, max_diff(solve_hjb_linear(p, q, m, b), oracle::hjb_space_time(p, q, m, b)));
        const auto w0 = oracle::random_vector(g.spatial_size(), rng);
        adj = std::max(adj, max_diff(solve_adjoint_w(p, q, w0), oracle::forward_space_time(g, q, p.eps, w0)));
    }
    check("mass", mass, 1e-10);
    check("negativity", neg, 0.0);
    check("FP oracle", fp, 1e-8);
    check("HJB oracle", hjb, 1e-8);
    check("adjoint oracle", adj, 1e-8);

    // Transport duality on I=6: the FP step is the transpose of the HJB step.
    double dual = 0.0;
    for (int d : {1, 2}) {
        const auto g = make_grid(d, 6, 10, 1.0);
        const auto qs = oracle::random_vector(g.spatial_size() * g.slope_components(), rng, -3.0, 3.0);
        const auto a = assemble_fp_step(g, qs, 0.3);
        const auto b = assemble_hjb_step(g, qs, 0.3);
        for (std::size_t i = 0; i < g.spatial_size(); ++i) {
            for (std::size_t j = 0; j < g.spatial_size(); ++j) {
                dual = std::max(dual, std::abs(a.at(i, j) - b.at(j, i)));
            }
        }
    }
    check("transpose duality", dual, 1e-14);

    auto bump_problem = [](int I, int N) {
        const auto g = make_grid(1, I, N, 1.0);
        SpatialField m0(g.spatial_size());
        SpatialField uT(g.spatial_size());
        for (std::size_t i = 0; i < m0.size(); ++i) {
            const double x = g.coordinate(i, 0);
            m0[i] = std::exp(-8.0 * (x - 0.5) * (x - 0.5));
            uT[i] = -0.5 * m0[i];
        }
        return make_problem(g, 0.3, m0, uT);
    };
    auto shifted = [](std::span<const double> b, std::span<const double> dir, double h) {
        std::vector<double> out(b.begin(), b.end());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += h * dir[i];
        }
        return out;
    };
    auto inner = [](const Grid& g, std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s += a[i] * b[i];
        }
        return s * g.cell_volume();
    };
    const double h = 1e-5;

    // Step (ii) adjoint gradient against central differences.
    {
        const auto p = bump_problem(20, 20);
        const auto q = oracle::random_policy(p.grid, rng, 1.5);
        const auto m = solve_fp(p, q);
        const LinearInverseStep step(p, q, m, oracle::random_vector(20, rng), 1e-3);
        const auto b = oracle::random_vector(20, rng);
        std::vector<double> grad(20);
        step.objective_and_gradient(b, grad);
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const auto dir = oracle::random_vector(20, rng);
            const double fd = (step.objective(shifted(b, dir, h)) - step.objective(shifted(b, dir, -h))) / (2 * h);
            const double an = inner(p.grid, grad, dir);
            worst = std::max(worst, std::abs(fd - an) / std::abs(an));
        }
        check("step-(ii) FD", worst, 1e-4);
    }
    // Direct least-squares adjoint gradient against central differences.
    {
        const auto p = bump_problem(16, 20);
        SpatialField bt(16);
        for (std::size_t i = 0; i < 16; ++i) {
            bt[i] = 0.2 * std::sin(2 * std::numbers::pi * p.grid.coordinate(i, 0));
        }
        double worst = 0.0;
        for (auto kind : {DataKind::InitialValue, DataKind::TerminalRate}) {
            const auto data = generate_data(p, bt, kind, 0.0, 0);
            const auto b = oracle::random_vector(16, rng, -0.3, 0.3);
            const auto grad = gradient_direct(p, b, data, 0.0, 1e-12, 1e-12);
            for (int t = 0; t < 10; ++t) {
                const auto dir = oracle::random_vector(16, rng);
                const double fd = (objective_direct(p, shifted(b, dir, h), data, 0.0, 1e-12)
                                   - objective_direct(p, shifted(b, dir, -h), data, 0.0, 1e-12))
                                  / (2 * h);
                const double an = inner(p.grid, grad, dir);
                worst = std::max(worst, std::abs(fd - an) / std::abs(an));
            }
        }
        check("direct FD", worst, 1e-3);
    }
    // Step (ii) minimiser against dense normal equations on I=8, N=10.
    {
        const auto p = bump_problem(8, 10);
        const auto q = oracle::random_policy(p.grid, rng, 1.0);
        const auto m = solve_fp(p, q);
        const std::vector<double> zero(8, 0.0);
        const Eigen::VectorXd u_zero = oracle::hjb_space_time(p, q, m, zero).col(0);
        Eigen::MatrixXd L(8, 8);
        for (int j = 0; j < 8; ++j) {
            std::vector<double> e(8, 0.0);
            e[static_cast<std::size_t>(j)] = 1.0;
            L.col(j) = oracle::hjb_space_time(p, q, m, e).col(0) - u_zero;
        }
        const auto g = oracle::random_vector(8, rng);
        const Eigen::VectorXd exact = (L.transpose() * L).ldlt().solve(L.transpose() * (oracle::to_vec(g) - u_zero));
        const auto r = invert_step_u0(p, q, m, g, 0.0, zero, 1e-12);
        check("normal equations", (oracle::to_vec(r.b) - exact).cwiseAbs().maxCoeff(), 1e-6);
    }
    // Optimiser: random SPD quadratic and Rosenbrock.
    {
        const int n = 20;
        Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return std::normal_distribution<>()(rng); });
        const Eigen::MatrixXd A = R.transpose() * R / n + Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n, [&] { return std::normal_distribution<>()(rng); });
        const ObjectiveFunction f = [&](std::span<const double> x, std::span<double> gr) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
            Eigen::Map<Eigen::VectorXd>(gr.data(), n) = A * xv - b;
            return 0.5 * xv.dot(A * xv) - b.dot(xv);
        };
        const auto r = minimize(f, std::vector<double>(n, 0.0), OptimOptions{.opt_tol = 1e-10});
        const Eigen::VectorXd exact = A.ldlt().solve(b);
        const bool conv = r.status == OptimStatus::Converged;
        check("BFGS quadratic", conv ? (oracle::to_vec(r.minimizer) - exact).cwiseAbs().maxCoeff() : INFINITY, 1e-9);

        const ObjectiveFunction rosen = [](std::span<const double> x, std::span<double> gr) {
            const double a = 1.0 - x[0];
            const double c = x[1] - x[0] * x[0];
            gr[0] = -2.0 * a - 400.0 * x[0] * c;
            gr[1] = 200.0 * c;
            return a * a + 100.0 * c * c;
        };
        const auto rr = minimize(rosen, {-1.2, 1.0}, OptimOptions{.opt_tol = 1e-9});
        const double err = rr.status == OptimStatus::Converged
            ? std::max(std::abs(rr.minimizer[0] - 1.0), std::abs(rr.minimizer[1] - 1.0))
            : INFINITY;
        check("Rosenbrock", err, 1e-6);
    }
    return out;
}

void guarded(int id, const std::string& what, const std::function<void()>& body)
{
    try {
        body();
    } catch (const std::exception& ex) {
        report(id, false, what, std::string("threw: ") + ex.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const auto pp = paper_1d();
    const Grid& grid = pp.problem.grid;
    const auto data_rate = generate_data(pp.problem, pp.b_true, DataKind::TerminalRate, 0.0, 0);
    const auto data_u0 = generate_data(pp.problem, pp.b_true, DataKind::InitialValue, 0.0, 0);

    InverseResult rate;
    double rate_error = NAN;
    guarded(1, "1D TerminalRate", [&] {
        rate = run_policy(pp, data_rate, 1e-9);
        rate_error = relative_error(grid, rate.b, pp.b_true);
        report(1, rate.iterations <= 30 && rate_error <= 0.03, "1D TerminalRate",
               fmt("iterations %d (<=30), relative error %.2e (<=0.03)", rate.iterations, rate_error));
    });

    InverseResult init;
    double init_error = NAN;
    guarded(2, "1D InitialValue", [&] {
        init = run_policy(pp, data_u0, 1e-9);
        init_error = relative_error(grid, init.b, pp.b_true);
        double in = 0.0;
        double out = 0.0;
        int n_in = 0;
        int n_out = 0;
        for (std::size_t i = 0; i < init.b.size(); ++i) {
            const double x = grid.coordinate(i, 0);
            const double e = std::abs(init.b[i] - pp.b_true[i]);
            if (x >= 0.4 - 1e-12 && x <= 0.6 + 1e-12) {
                in += e;
                ++n_in;
            } else {
                out += e;
                ++n_out;
            }
        }
        in /= n_in;
        out /= n_out;
        report(2, init.iterations <= 30 && init_error <= 0.03 && in >= out, "1D InitialValue",
               fmt("iterations %d (<=30), relative error %.2e (<=0.03), MAE on [0.4,0.6] %.2e vs outside %.2e",
                   init.iterations, init_error, in, out));
    });

    guarded(3, "R-linear error decay", [&] {
        std::string detail;
        bool ok = true;
        for (const auto* r : {&rate, &init}) {
            const char* name = r == &rate ? "TerminalRate" : "InitialValue";
            if (r->b_error_history.size() < 4) {
                ok = false;
                detail += fmt("%s: too few iterations; ", name);
                continue;
            }
            const auto f = log_fit(r->b_error_history, 3);
            ok = ok && f.slope < 0.0 && f.r2 >= 0.9;
            detail += fmt("%s slope %.3f R^2 %.3f; ", name, f.slope, f.r2);
        }
        report(3, ok, "R-linear error decay", detail + "(need slope < 0, R^2 >= 0.9)");
    });

    guarded(4, "2D TerminalRate", [&] {
        ExperimentConfig c;
        c.preset = Preset::Paper2d;
        c.points_per_dim = quick ? 30 : 50;
        const double need = quick ? 3.0 : 4.0;
        const auto p2 = preset_problem(c);
        const auto d2 = generate_data(p2.problem, p2.b_true, DataKind::TerminalRate, 0.0, 0);
        const auto r = run_policy(p2, d2, 1e-8);
        const auto& e = r.b_error_history;
        double best = e.front();
        for (std::size_t k = 0; k < e.size() && k < 20; ++k) {
            best = std::min(best, e[k]);
        }
        const double orders = std::log10(e.front() / best);
        report(4, orders >= need, "2D TerminalRate",
               fmt("%dx%d, %d iterations, error %.2e -> %.2e within 20 iterations = %.1f orders (>=%.0f)",
                   c.points_per_dim, c.points_per_dim, r.iterations, e.front(), best, orders, need));
    });

    guarded(5, "policy iteration vs direct LS", [&] {
        std::string detail;
        bool ok = true;
        for (const auto* d : {&data_u0, &data_rate}) {
            const char* name = d == &data_u0 ? "InitialValue" : "TerminalRate";
            auto t0 = std::chrono::steady_clock::now();
            const auto pi = run_policy(pp, *d, 1e-8);
            const double t_pi = seconds(t0);
            DirectOptions opt;
            opt.fwd_tol = 1e-8;
            opt.cold_start = true;
            t0 = std::chrono::steady_clock::now();
            const auto ls = direct_ls_solve(pp.problem, *d, SpatialField(grid.spatial_size(), 0.0), 0.0, 1e-10, opt);
            const double t_ls = seconds(t0);
            const double e_pi = relative_error(grid, pi.b, pp.b_true);
            const double e_ls = relative_error(grid, ls.b, pp.b_true);
            ok = ok && t_ls >= 2.0 * t_pi;
            if (d == &data_u0) {
                ok = ok && e_pi <= e_ls;
            }
            detail += fmt("%s time %.2fs vs %.2fs (x%.1f), error %.2e vs %.2e; ", name, t_pi, t_ls, t_ls / t_pi,
                          e_pi, e_ls);
        }
        report(5, ok, "policy iteration vs direct LS", detail + "(need x>=2; InitialValue error PI <= LS)");
    });

    guarded(6, "noisy 1D InitialValue", [&] {
        const auto noisy = generate_data(pp.problem, pp.b_true, DataKind::InitialValue, 0.01, 2024);
        const auto r = run_policy(pp, noisy, 1e-9, 1e-6);
        const double e = relative_error(grid, r.b, pp.b_true);
        const double ratio = e / init_error;
        const double fit = relative_l2(grid, r.u.level(0), noisy.clean);
        report(6, ratio >= 10.0 && ratio <= 1000.0 && fit <= 0.02, "noisy 1D InitialValue",
               fmt("relative error %.2e = %.0fx noiseless (10..1000), ||u(.,0)-g_clean||/||g_clean|| %.2e (<=0.02)",
                   e, ratio, fit));
    });

    guarded(7, "property suites", [&] {
        bool ok = true;
        const auto detail = property_suites(ok);
        report(7, ok, "property suites", detail);
    });

    guarded(8, "long horizon", [&] {
        const auto pl = paper_1d(10.0, 1000);
        const auto dr = generate_data(pl.problem, pl.b_true, DataKind::TerminalRate, 0.0, 0);
        const auto r = run_policy(pl, dr, 1e-9);
        const double e = relative_error(pl.problem.grid, r.b, pl.b_true);
        std::string u0_note;
        try {
            const auto du = generate_data(pl.problem, pl.b_true, DataKind::InitialValue, 0.0, 0);
            const auto ru = run_policy(pl, du, 1e-9);
            u0_note = fmt("InitialValue (recorded) %.2e after %d iterations",
                          relative_error(pl.problem.grid, ru.b, pl.b_true), ru.iterations);
        } catch (const std::exception& ex) {
            u0_note = std::string("InitialValue (recorded) failed: ") + ex.what();
        }
        report(8, e <= 2.0 * rate_error, "long horizon",
               fmt("T=10 TerminalRate relative error %.2e vs T=1 %.2e (<=2x); %s", e, rate_error, u0_note.c_str()));
    });

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
