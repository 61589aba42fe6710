#ifndef MFG_EXPERIMENT_HPP
#define MFG_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mfg/forward.hpp"

namespace mfg {

const char* version();

enum class Preset { Paper1d, Paper2d, Custom };
enum class Method { Policy, Direct, Both };

struct ExperimentConfig {
    Preset preset = Preset::Paper1d;
    std::optional<int> dim; ///< forced by the built-in presets
    int points_per_dim = 50;
    int time_steps = 100;
    double horizon = 1.0;
    double eps = 0.3;
    double coupling_exponent = 2.0;
    DataKind data_kind = DataKind::TerminalRate;
    TerminalRateStencil terminal_stencil = TerminalRateStencil::PdeRightHandSide;
    std::vector<double> extra_observation_times;
    double noise_level = 0.0;
    std::uint64_t seed = 0;
    Method method = Method::Policy;
    double gamma = 0.0;
    double tol = 1e-9;
    double opt_tol = 1e-10;
    int max_iter = 100;
    int direct_max_iter = 1000;
    bool loose_to_tight = false;
    bool direct_cold_start = true;
    std::filesystem::path output_dir = "out";
    /// Custom preset inputs: whitespace or comma separated values, row-major.
    std::filesystem::path m0_file;
    std::filesystem::path uT_file;
    std::filesystem::path b_true_file;
};

/// Sets one `key = value` entry; unknown keys and malformed values throw InvalidArgument.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Defaults, then the file (if non-empty), then the overrides in order.
ExperimentConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Rejects inconsistent configurations.
void validate(const ExperimentConfig& config);

nlohmann::ordered_json to_json(const ExperimentConfig& config);

struct PresetProblem {
    MFGProblem problem;
    SpatialField b_true;
};

PresetProblem preset_problem(const ExperimentConfig& config);

struct MethodSummary {
    std::string method;
    double relative_error = 0.0;
    int iterations = 0;
    double wall_time_seconds = 0.0;
};

struct ExperimentOutcome {
    std::vector<MethodSummary> methods;
    std::vector<std::filesystem::path> files;
};

/// Runs the configured method(s) and writes summary.json plus per-method
/// reconstruction, history and measurement CSVs into output_dir. Files written
/// before a failure are removed and the error is rethrown.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

struct GradcheckReport {
    double step2_max_relative_error = 0.0;
    double direct_max_relative_error = 0.0;
    bool direct_checked = false;
};

/// Central-difference directional checks of both adjoint gradients at a
/// perturbed b_true.
GradcheckReport gradient_check(const ExperimentConfig& config, int directions = 10, double h = 1e-5);

struct SweepEntry {
    std::filesystem::path config;
    bool ok = false;
    std::string message;
};

/// Runs every *.cfg file in dir on a pool of worker threads. Each run writes
/// to <output_dir>/<file stem>.
std::vector<SweepEntry> run_sweep(const std::filesystem::path& dir, unsigned threads);

/// MFG_INVERSE_THREADS if set to a positive integer, else the core count.
unsigned sweep_threads();

/// Shortest round-trip decimal form.
std::string format_number(double value);

} // namespace mfg

#endif // MFG_EXPERIMENT_HPP
