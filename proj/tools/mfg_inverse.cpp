#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mfg/experiment.hpp"

namespace {

// Leftover arguments are `--key value` or `--key=value` config overrides.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& args)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0 || a.size() == 2) {
            throw CLI::ValidationError("unexpected argument '" + a + "'");
        }
        const auto eq = a.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
        } else if (i + 1 < args.size()) {
            out.emplace_back(a.substr(2), args[i + 1]);
            ++i;
        } else {
            throw CLI::ValidationError("missing value for '" + a + "'");
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Obstacle reconstruction for inverse mean-field games"};
    app.set_version_flag("--version", std::string(mfg::version()));
    app.require_subcommand(1);

    std::string config_file;
    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    run->allow_extras();

    std::string sweep_dir;
    auto* sweep = app.add_subcommand("sweep", "run every *.cfg in a directory in parallel");
    sweep->add_option("--configs", sweep_dir, "directory of config files")->required()->check(CLI::ExistingDirectory);

    std::string grad_file;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of the adjoint gradients");
    grad->add_option("--config", grad_file, "key = value config file")->check(CLI::ExistingFile);
    grad->allow_extras();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = mfg::load_config(config_file, parse_overrides(run->remaining()));
            const auto outcome = mfg::run_experiment(cfg);
            for (const auto& m : outcome.methods) {
                std::printf("%-6s rel_error=%s iterations=%d wall_time=%.3fs\n", m.method.c_str(),
                            mfg::format_number(m.relative_error).c_str(), m.iterations, m.wall_time_seconds);
            }
            std::printf("outputs in %s\n", cfg.output_dir.string().c_str());
            return 0;
        }
        if (*sweep) {
            const unsigned threads = mfg::sweep_threads();
            const auto entries = mfg::run_sweep(sweep_dir, threads);
            int failed = 0;
            for (const auto& e : entries) {
                std::printf("%s %s %s\n", e.ok ? "ok  " : "FAIL", e.config.filename().string().c_str(),
                            e.message.c_str());
                failed += e.ok ? 0 : 1;
            }
            return failed == 0 ? 0 : 1;
        }
        const auto cfg = mfg::load_config(grad_file, parse_overrides(grad->remaining()));
        const auto report = mfg::gradient_check(cfg);
        std::printf("step2  max relative error %.3e\n", report.step2_max_relative_error);
        if (report.direct_checked) {
            std::printf("direct max relative error %.3e\n", report.direct_max_relative_error);
        } else {
            std::printf("direct skipped for this data configuration\n");
        }
        // Same bounds as the test suites.
        const bool ok = report.step2_max_relative_error <= 1e-4
            && (!report.direct_checked || report.direct_max_relative_error <= 1e-3);
        return ok ? 0 : 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
