#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "abc2d/abc.hpp"

namespace abc2d {

/// Which coefficient field a study runs on. Only poisson depends on the seed.
struct MediumSpec {
    enum class Kind { poisson, constant, laminate } kind = Kind::poisson;
    double alpha = 0.7;  // constant value, or first laminate phase
    double beta = 0.9;   // second laminate phase

    /// "poisson", "constant:<c>" or "laminate:<alpha>,<beta>".
    static MediumSpec parse(const std::string& text);
    std::string tag() const;
};

/// Medium valid over the centred cube of the given half width.
std::unique_ptr<Medium> make_medium(const MediumSpec& spec, std::uint64_t seed, double half_width);

struct ExperimentConfig {
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> L_values{8, 16, 32, 64};
    double h = 0.1;
    double beta = 0.9;
    std::vector<AlgorithmKind> algorithms{AlgorithmKind::dirichlet, AlgorithmKind::no_dipole, AlgorithmKind::full};
    std::optional<double> reference_L;
    int resample_count = 3;
    std::filesystem::path output_dir = "out";
    int workers = 1;
    double solver_tolerance = 1e-10;
    double observation_radius = 1.0;
    double memory_budget_gb = 5.0;
    MediumSpec medium;

    /// Sorts and checks the L ladder, tolerances and memory guard.
    void validate() const;
    RunOptions run_options() const;
};

/// Applies one "key = value" setting. Unknown keys throw.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
/// Flat key-value file: one "key = value" per line, '#' starts a comment.
ExperimentConfig load_config(const std::filesystem::path& path);
std::string describe(const ExperimentConfig& config);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_length_list(const std::string& text);

/// Rough peak memory of one run at L: corrector solve on Q_{2L}.
double estimated_run_bytes(double L, double h, bool with_correctors);

/// Runs task(i) for i < count on a pool of threads; returns one error message
/// per task (empty on success).
std::vector<std::string> run_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

/// One completed (seed, L, algorithm) run.
struct RunRecord {
    std::uint64_t seed = 0;
    double L = 0.0;
    std::string medium;
    /// Non-empty for media redrawn outside a cube.
    std::string variant;
    RunMetadata meta;
};

struct RunFailure {
    std::uint64_t seed = 0;
    double L = 0.0;
    std::string what;
    std::string message;
};

/// In-process memo of runs keyed by (medium, variant, seed, L, algorithm set,
/// r_star flag). Thread safe.
class RunCache {
public:
    std::optional<std::vector<RunRecord>> find(const std::string& key) const;
    void store(const std::string& key, std::vector<RunRecord> runs);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<RunRecord>> runs_;
};

struct AhomRow {
    std::uint64_t seed = 0;
    double L = 0.0;
    HomogenizedTensor a_h;
    double seconds = 0.0;
    int iterations = 0;
};

struct AhomStudy {
    std::vector<AhomRow> rows;
    std::vector<RunFailure> failures;
};

struct GradientDifference {
    std::uint64_t seed = 0;
    AlgorithmKind kind = AlgorithmKind::full;
    double L = 0.0;
    double difference = 0.0;  // |grad u^(2L)(0) - grad u^(L)(0)|
    double ball_difference = 0.0;
};

struct RateFit {
    std::uint64_t seed = 0;
    AlgorithmKind kind = AlgorithmKind::full;
    double slope = 0.0;
    int points = 0;
};

struct ConvergenceStudy {
    std::vector<RunRecord> runs;
    std::vector<GradientDifference> differences;
    std::vector<RateFit> slopes;
    std::vector<RunFailure> failures;
};

struct SensitivityEntry {
    std::uint64_t seed = 0;
    double L = 0.0;
    /// 0 for the algorithm error row, k >= 1 for the k-th redraw.
    int row = 0;
    std::uint64_t resample_seed = 0;
    double value = 0.0;
};

struct SensitivityStudy {
    std::vector<RunRecord> reference;
    std::vector<RunRecord> runs;
    std::vector<SensitivityEntry> entries;
    std::vector<RunFailure> failures;
};

struct RStarRow {
    std::uint64_t seed = 0;
    double L = 0.0;
    RStarEstimate estimate;
    double predicted = 0.0;  // (l / L)^2 (r_star / L)^beta
    std::optional<double> measured;
};

struct RStarStudy {
    std::vector<RStarRow> rows;
    std::vector<RunFailure> failures;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Seed for the k-th redraw outside Q_{keep} (never equal to seed).
std::uint64_t resample_seed(std::uint64_t seed, double keep, int k);

AhomStudy run_ahom_study(const ExperimentConfig& config);
ConvergenceStudy run_convergence_study(const ExperimentConfig& config, RunCache* cache = nullptr);
SensitivityStudy run_sensitivity_study(const ExperimentConfig& config, RunCache* cache = nullptr);
RStarStudy run_rstar_study(const ExperimentConfig& config, RunCache* cache = nullptr);

/// a_h^(2L) - a_h^(L) entry-wise absolute differences.
struct AhomDifference {
    std::uint64_t seed = 0;
    double L = 0.0;
    Mat2 difference = Mat2::Zero();
};
std::vector<AhomDifference> ahom_differences(const std::vector<AhomRow>& rows);

std::vector<GradientDifference> gradient_differences(const std::vector<RunRecord>& runs);
std::vector<RateFit> fit_rates(const std::vector<GradientDifference>& diffs);

} // namespace abc2d
