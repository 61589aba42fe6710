#include "mfg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "mfg/direct_ls.hpp"
#include "mfg/inverse.hpp"

#ifndef MFG_INVERSE_VERSION
#define MFG_INVERSE_VERSION "0.0.0"
#endif

namespace mfg {

const char* version()
{
    return MFG_INVERSE_VERSION;
}

std::string format_number(double value)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, res.ptr};
}

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_real(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw InvalidArgument("bad value for " + key + ": '" + text + "'");
    }
    return v;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    Int v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw InvalidArgument("bad value for " + key + ": '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no") {
        return false;
    }
    throw InvalidArgument("bad value for " + key + ": '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!trim(item).empty()) {
            out.push_back(parse_real(key, item));
        }
    }
    return out;
}

std::string preset_name(Preset p)
{
    switch (p) {
    case Preset::Paper1d:
        return "paper-1d";
    case Preset::Paper2d:
        return "paper-2d";
    case Preset::Custom:
        return "custom";
    }
    return {};
}

std::string method_name(Method m)
{
    switch (m) {
    case Method::Policy:
        return "policy";
    case Method::Direct:
        return "direct";
    case Method::Both:
        return "both";
    }
    return {};
}

} // namespace

void apply_setting(ExperimentConfig& c, const std::string& raw_key, const std::string& raw_value)
{
    std::string key = trim(raw_key);
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = trim(raw_value);

    if (key == "preset") {
        if (value == "paper-1d") {
            c.preset = Preset::Paper1d;
        } else if (value == "paper-2d") {
            c.preset = Preset::Paper2d;
        } else if (value == "custom") {
            c.preset = Preset::Custom;
        } else {
            throw InvalidArgument("unknown preset '" + value + "'");
        }
    } else if (key == "dim") {
        c.dim = parse_integer<int>(key, value);
    } else if (key == "points_per_dim") {
        c.points_per_dim = parse_integer<int>(key, value);
    } else if (key == "time_steps") {
        c.time_steps = parse_integer<int>(key, value);
    } else if (key == "horizon" || key == "T") {
        c.horizon = parse_real(key, value);
    } else if (key == "eps") {
        c.eps = parse_real(key, value);
    } else if (key == "coupling_exponent") {
        c.coupling_exponent = parse_real(key, value);
    } else if (key == "data_kind") {
        if (value == "u0") {
            c.data_kind = DataKind::InitialValue;
        } else if (value == "utT") {
            c.data_kind = DataKind::TerminalRate;
        } else {
            throw InvalidArgument("data_kind must be u0 or utT");
        }
    } else if (key == "terminal_stencil") {
        if (value == "rhs") {
            c.terminal_stencil = TerminalRateStencil::PdeRightHandSide;
        } else if (value == "backward") {
            c.terminal_stencil = TerminalRateStencil::BackwardDifference;
        } else {
            throw InvalidArgument("terminal_stencil must be rhs or backward");
        }
    } else if (key == "extra_observation_times") {
        c.extra_observation_times = parse_list(key, value);
    } else if (key == "noise_level") {
        c.noise_level = parse_real(key, value);
    } else if (key == "seed") {
        c.seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "method") {
        if (value == "policy") {
            c.method = Method::Policy;
        } else if (value == "direct") {
            c.method = Method::Direct;
        } else if (value == "both") {
            c.method = Method::Both;
        } else {
            throw InvalidArgument("method must be policy, direct or both");
        }
    } else if (key == "gamma") {
        c.gamma = parse_real(key, value);
    } else if (key == "tol") {
        c.tol = parse_real(key, value);
    } else if (key == "opt_tol") {
        c.opt_tol = parse_real(key, value);
    } else if (key == "max_iter") {
        c.max_iter = parse_integer<int>(key, value);
    } else if (key == "direct_max_iter") {
        c.direct_max_iter = parse_integer<int>(key, value);
    } else if (key == "loose_to_tight") {
        c.loose_to_tight = parse_bool(key, value);
    } else if (key == "direct_cold_start") {
        c.direct_cold_start = parse_bool(key, value);
    } else if (key == "output_dir") {
        c.output_dir = value;
    } else if (key == "m0_file") {
        c.m0_file = value;
    } else if (key == "uT_file") {
        c.uT_file = value;
    } else if (key == "b_true_file") {
        c.b_true_file = value;
    } else {
        throw InvalidArgument("unknown config key '" + key + "'");
    }
}

ExperimentConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::pair<std::string, std::string>>& overrides)
{
    ExperimentConfig c;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) {
            throw InvalidArgument("cannot read config " + file.string());
        }
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            const std::string body = trim(std::string_view(line).substr(0, hash));
            if (body.empty()) {
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                throw InvalidArgument(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
            }
            apply_setting(c, body.substr(0, eq), body.substr(eq + 1));
        }
        // Relative paths in a config file are relative to the file.
        const auto base = file.parent_path();
        for (auto* p : {&c.m0_file, &c.uT_file, &c.b_true_file}) {
            if (!p->empty() && p->is_relative()) {
                *p = base / *p;
            }
        }
    }
    for (const auto& [k, v] : overrides) {
        apply_setting(c, k, v);
    }
    return c;
}

void validate(const ExperimentConfig& c)
{
    if (c.preset == Preset::Paper1d && c.dim && *c.dim != 1) {
        throw InvalidArgument("preset paper-1d requires dim = 1");
    }
    if (c.preset == Preset::Paper2d && c.dim && *c.dim != 2) {
        throw InvalidArgument("preset paper-2d requires dim = 2");
    }
    if (c.preset == Preset::Custom) {
        if (!c.dim) {
            throw InvalidArgument("custom preset needs dim");
        }
        if (c.m0_file.empty() || c.uT_file.empty() || c.b_true_file.empty()) {
            throw InvalidArgument("custom preset needs m0_file, uT_file and b_true_file");
        }
    }
    if (!(c.noise_level >= 0.0)) {
        throw InvalidArgument("noise_level must be nonnegative");
    }
    if (!(c.gamma >= 0.0)) {
        throw InvalidArgument("gamma must be nonnegative");
    }
    if (!(c.tol > 0.0) || !(c.opt_tol > 0.0)) {
        throw InvalidArgument("tolerances must be positive");
    }
    if (c.max_iter < 1 || c.direct_max_iter < 1) {
        throw InvalidArgument("iteration caps must be positive");
    }
    if (!c.extra_observation_times.empty()) {
        if (c.data_kind != DataKind::InitialValue) {
            throw InvalidArgument("extra observation times require data_kind = u0");
        }
        for (double t : c.extra_observation_times) {
            if (!(t > 0.0 && t < c.horizon)) {
                throw InvalidArgument("extra observation times must lie in (0, T)");
            }
        }
        if (c.method != Method::Policy) {
            throw InvalidArgument("extra observations are only supported by the policy method");
        }
    }
    if (c.method != Method::Policy && c.data_kind == DataKind::TerminalRate
        && c.terminal_stencil != TerminalRateStencil::PdeRightHandSide) {
        throw InvalidArgument("direct least squares needs terminal_stencil = rhs");
    }
}

nlohmann::ordered_json to_json(const ExperimentConfig& c)
{
    nlohmann::ordered_json j;
    j["preset"] = preset_name(c.preset);
    if (c.dim) {
        j["dim"] = *c.dim;
    } else {
        j["dim"] = c.preset == Preset::Paper2d ? 2 : 1;
    }
    j["points_per_dim"] = c.points_per_dim;
    j["time_steps"] = c.time_steps;
    j["horizon"] = c.horizon;
    j["eps"] = c.eps;
    j["coupling_exponent"] = c.coupling_exponent;
    j["data_kind"] = c.data_kind == DataKind::InitialValue ? "u0" : "utT";
    j["terminal_stencil"] = c.terminal_stencil == TerminalRateStencil::PdeRightHandSide ? "rhs" : "backward";
    j["extra_observation_times"] = c.extra_observation_times;
    j["noise_level"] = c.noise_level;
    j["seed"] = c.seed;
    j["method"] = method_name(c.method);
    j["gamma"] = c.gamma;
    j["tol"] = c.tol;
    j["opt_tol"] = c.opt_tol;
    j["max_iter"] = c.max_iter;
    j["direct_max_iter"] = c.direct_max_iter;
    j["loose_to_tight"] = c.loose_to_tight;
    j["direct_cold_start"] = c.direct_cold_start;
    j["output_dir"] = c.output_dir.string();
    if (c.preset == Preset::Custom) {
        j["m0_file"] = c.m0_file.string();
        j["uT_file"] = c.uT_file.string();
        j["b_true_file"] = c.b_true_file.string();
    }
    return j;
}

namespace {

SpatialField read_field(const std::filesystem::path& path, std::size_t expected)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::replace(text.begin(), text.end(), ',', ' ');
    std::stringstream ss(text);
    SpatialField out;
    std::string tok;
    while (ss >> tok) {
        out.push_back(parse_real(path.string(), tok));
    }
    if (out.size() != expected) {
        throw InvalidArgument(path.string() + " has " + std::to_string(out.size()) + " values, expected "
                              + std::to_string(expected));
    }
    return out;
}

} // namespace

PresetProblem preset_problem(const ExperimentConfig& c)
{
    validate(c);
    const int dim = c.preset == Preset::Paper1d ? 1 : c.preset == Preset::Paper2d ? 2 : *c.dim;
    const Grid grid = make_grid(dim, c.points_per_dim, c.time_steps, c.horizon);
    const std::size_t n = grid.spatial_size();
    SpatialField m0(n);
    SpatialField b(n);
    SpatialField uT;
    constexpr double pi = std::numbers::pi;

    if (c.preset == Preset::Custom) {
        m0 = read_field(c.m0_file, n);
        uT = read_field(c.uT_file, n);
        b = read_field(c.b_true_file, n);
        return {make_problem(grid, c.eps, std::move(m0), std::move(uT), c.coupling_exponent), std::move(b)};
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (dim == 1) {
            const double x = grid.coordinate(i, 0);
            m0[i] = std::exp(-40.0 * (x - 0.5) * (x - 0.5));
            b[i] = 0.1 * (std::sin(2.0 * pi * x - std::sin(4.0 * pi * x)) + std::exp(std::cos(2.0 * pi * x)));
        } else {
            const double x1 = grid.coordinate(i, 0);
            const double x2 = grid.coordinate(i, 1);
            m0[i] = std::exp(-5.0 * ((x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5)));
            b[i] = std::sin(2.0 * pi * x1) * std::sin(2.0 * pi * x2);
        }
    }
    // u_T = -m0 with m0 already normalised.
    MFGProblem prob = make_problem(grid, c.eps, std::move(m0), SpatialField(n, 0.0), c.coupling_exponent);
    for (std::size_t i = 0; i < n; ++i) {
        prob.uT[i] = -prob.m0[i];
    }
    return {std::move(prob), std::move(b)};
}

namespace {

InverseData make_data(const ExperimentConfig& c, const PresetProblem& pp)
{
    DataOptions opt;
    opt.stencil = c.terminal_stencil;
    opt.extra_times = c.extra_observation_times;
    return generate_data(pp.problem, pp.b_true, c.data_kind, c.noise_level, c.seed, opt);
}

class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir)
        : dir_(std::move(dir))
    {
    }

    std::ofstream open(const std::string& name)
    {
        const auto path = dir_ / name;
        files_.push_back(path);
        std::ofstream out(path);
        if (!out) {
            throw InvalidArgument("cannot write " + path.string());
        }
        return out;
    }

    void discard() noexcept
    {
        for (const auto& f : files_) {
            std::error_code ec;
            std::filesystem::remove(f, ec);
        }
        files_.clear();
    }

    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

std::string coordinate_header(const Grid& grid)
{
    return grid.dim == 1 ? "x" : "x1,x2";
}

void write_coordinates(std::ostream& out, const Grid& grid, std::size_t i)
{
    for (int k = 0; k < grid.dim; ++k) {
        out << format_number(grid.coordinate(i, k)) << ',';
    }
}

void write_reconstruction(OutputSet& files, const std::string& method, const Grid& grid,
                          const SpatialField& b_true, const SpatialField& b)
{
    auto out = files.open("reconstruction_" + method + ".csv");
    out << coordinate_header(grid) << ",b_true,b,abs_error\n";
    for (std::size_t i = 0; i < b.size(); ++i) {
        write_coordinates(out, grid, i);
        out << format_number(b_true[i]) << ',' << format_number(b[i]) << ','
            << format_number(std::abs(b[i] - b_true[i])) << '\n';
    }
}

void write_history(OutputSet& files, const std::string& method, const std::vector<double>& errors,
                   const std::string& second_name, const std::vector<double>& second)
{
    auto out = files.open("history_" + method + ".csv");
    out << "iteration,b_error," << second_name << '\n';
    for (std::size_t k = 0; k < errors.size(); ++k) {
        out << k + 1 << ',' << format_number(errors[k]) << ','
            << (k < second.size() ? format_number(second[k]) : std::string("nan")) << '\n';
    }
}

void write_measurement(OutputSet& files, const std::string& method, const MFGProblem& prob,
                       const InverseData& data, const InverseResult& r, TerminalRateStencil stencil)
{
    const Grid& grid = prob.grid;
    auto out = files.open("measurement_" + method + ".csv");
    out << "t," << coordinate_header(grid) << ",g_clean,g,gu\n";
    auto rows = [&](double t, std::span<const double> clean, std::span<const double> g, std::span<const double> gu) {
        for (std::size_t i = 0; i < gu.size(); ++i) {
            out << format_number(t) << ',';
            write_coordinates(out, grid, i);
            out << format_number(clean[i]) << ',' << format_number(g[i]) << ',' << format_number(gu[i]) << '\n';
        }
    };
    const auto gu = measure(prob, r.b, r.u, r.m, data.kind, stencil);
    rows(data.kind == DataKind::InitialValue ? 0.0 : grid.horizon, data.clean, data.g, gu);
    for (const auto& obs : data.extra) {
        rows(static_cast<double>(obs.level) * grid.dt, obs.clean, obs.g, r.u.level(obs.level));
    }
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& c)
{
    validate(c);
    std::filesystem::create_directories(c.output_dir);
    OutputSet files(c.output_dir);
    ExperimentOutcome outcome;
    try {
        const auto pp = preset_problem(c);
        const MFGProblem& prob = pp.problem;
        const Grid& grid = prob.grid;
        const InverseData data = make_data(c, pp);

        nlohmann::ordered_json summary;
        summary["version"] = version();
        summary["config"] = to_json(c);
        nlohmann::ordered_json results = nlohmann::ordered_json::object();

        if (c.method == Method::Policy || c.method == Method::Both) {
            InverseOptions opt;
            opt.tol = c.tol;
            opt.gamma = c.gamma;
            opt.opt_tol = c.opt_tol;
            opt.max_iter = c.max_iter;
            opt.loose_to_tight = c.loose_to_tight;
            opt.b_true = pp.b_true;
            const auto start = std::chrono::steady_clock::now();
            const auto r = policy_iteration_inverse(prob, data, PolicyField(grid), opt);
            const double wall = seconds_since(start);
            MethodSummary s{"policy", relative_error(grid, r.b, pp.b_true), r.iterations, wall};
            write_reconstruction(files, s.method, grid, pp.b_true, r.b);
            write_history(files, s.method, r.b_error_history, "policy_gap", r.policy_gap_history);
            write_measurement(files, s.method, prob, data, r, data.stencil);
            results["policy"] = {{"relative_error", s.relative_error},
                                 {"iterations", s.iterations},
                                 {"wall_time_seconds", s.wall_time_seconds},
                                 {"final_policy_gap", r.policy_gap_history.back()}};
            outcome.methods.push_back(s);
        }
        if (c.method == Method::Direct || c.method == Method::Both) {
            DirectOptions opt;
            opt.fwd_tol = c.tol;
            opt.max_iter = c.direct_max_iter;
            opt.cold_start = c.direct_cold_start;
            opt.b_true = pp.b_true;
            const SpatialField b0(grid.spatial_size(), 0.0);
            const auto start = std::chrono::steady_clock::now();
            const auto r = direct_ls_solve(prob, data, b0, c.gamma, c.opt_tol, opt);
            const double wall = seconds_since(start);
            MethodSummary s{"direct", relative_error(grid, r.b, pp.b_true), r.iterations, wall};
            write_reconstruction(files, s.method, grid, pp.b_true, r.b);
            write_history(files, s.method, r.b_error_history, "objective", r.objective_history);
            write_measurement(files, s.method, prob, data, r, TerminalRateStencil::PdeRightHandSide);
            results["direct"] = {{"relative_error", s.relative_error},
                                 {"iterations", s.iterations},
                                 {"wall_time_seconds", s.wall_time_seconds},
                                 {"final_objective", r.objective_history.empty() ? 0.0 : r.objective_history.back()}};
            outcome.methods.push_back(s);
        }
        summary["results"] = results;
        auto out = files.open("summary.json");
        out << summary.dump(2) << '\n';
        if (!out) {
            throw InvalidArgument("failed writing summary.json");
        }
    } catch (...) {
        files.discard();
        throw;
    }
    outcome.files = files.files();
    return outcome;
}

GradcheckReport gradient_check(const ExperimentConfig& c, int directions, double h)
{
    const auto pp = preset_problem(c);
    const MFGProblem& prob = pp.problem;
    const Grid& grid = prob.grid;
    const std::size_t n = grid.spatial_size();
    const double weight = grid.cell_volume();

    SpatialField b(n);
    for (std::size_t i = 0; i < n; ++i) {
        double bump = 1.0;
        for (int k = 0; k < grid.dim; ++k) {
            bump *= std::cos(2.0 * std::numbers::pi * grid.coordinate(i, k));
        }
        b[i] = pp.b_true[i] + 0.05 * bump;
    }
    NormalSampler sampler(c.seed);
    std::vector<SpatialField> dirs(static_cast<std::size_t>(directions), SpatialField(n));
    for (auto& d : dirs) {
        for (double& v : d) {
            v = sampler();
        }
    }
    auto inner = [&](std::span<const double> a, std::span<const double> d) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += a[i] * d[i];
        }
        return s * weight;
    };
    auto rel = [](double fd, double ad) { return std::abs(fd - ad) / std::max(std::abs(ad), 1e-300); };

    GradcheckReport report;
    {
        // Step (ii) at the policy of the forward solution for b.
        const auto sol = policy_iteration_forward(prob, b, PolicyField(grid), 1e-11, 1000);
        DataOptions dopt;
        dopt.extra_times = c.data_kind == DataKind::InitialValue ? c.extra_observation_times : std::vector<double>{};
        const auto data = generate_data(prob, pp.b_true, DataKind::InitialValue, c.noise_level, c.seed, dopt);
        const LinearInverseStep step(prob, sol.q, sol.m, data.g, c.gamma, data.extra);
        SpatialField grad(n);
        step.objective_and_gradient(b, grad);
        for (const auto& d : dirs) {
            SpatialField bp = b;
            SpatialField bm = b;
            for (std::size_t i = 0; i < n; ++i) {
                bp[i] += h * d[i];
                bm[i] -= h * d[i];
            }
            const double fd = (step.objective(bp) - step.objective(bm)) / (2.0 * h);
            report.step2_max_relative_error = std::max(report.step2_max_relative_error, rel(fd, inner(grad, d)));
        }
    }
    const bool direct_ok = c.extra_observation_times.empty()
        && (c.data_kind == DataKind::InitialValue || c.terminal_stencil == TerminalRateStencil::PdeRightHandSide);
    if (direct_ok) {
        const auto data = make_data(c, pp);
        DirectOptions opt;
        opt.fwd_tol = 1e-11;
        opt.adj_tol = 1e-12;
        opt.fwd_max_iter = 1000;
        DirectLeastSquares ls(prob, data, c.gamma, opt);
        SpatialField grad(n);
        ls.objective_and_gradient(b, grad);
        for (const auto& d : dirs) {
            SpatialField bp = b;
            SpatialField bm = b;
            for (std::size_t i = 0; i < n; ++i) {
                bp[i] += h * d[i];
                bm[i] -= h * d[i];
            }
            const double fd = (ls.objective(bp) - ls.objective(bm)) / (2.0 * h);
            report.direct_max_relative_error = std::max(report.direct_max_relative_error, rel(fd, inner(grad, d)));
        }
        report.direct_checked = true;
    }
    return report;
}

unsigned sweep_threads()
{
    if (const char* env = std::getenv("MFG_INVERSE_THREADS")) {
        unsigned v = 0;
        const std::string_view s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec == std::errc() && res.ptr == s.data() + s.size() && v > 0) {
            return v;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepEntry> run_sweep(const std::filesystem::path& dir, unsigned threads)
{
    if (!std::filesystem::is_directory(dir)) {
        throw InvalidArgument(dir.string() + " is not a directory");
    }
    std::vector<SweepEntry> entries;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".cfg") {
            entries.push_back({e.path(), false, {}});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.config < b.config; });

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            auto& entry = entries[i];
            try {
                auto cfg = load_config(entry.config);
                cfg.output_dir /= entry.config.stem();
                const auto outcome = run_experiment(cfg);
                std::ostringstream msg;
                for (const auto& m : outcome.methods) {
                    msg << m.method << ": rel_error=" << format_number(m.relative_error)
                        << " iterations=" << m.iterations << ' ';
                }
                entry.message = msg.str();
                entry.ok = true;
            } catch (const std::exception& ex) {
                entry.message = ex.what();
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    return entries;
}

} // namespace mfg
