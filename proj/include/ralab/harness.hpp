#pragma once

#include <map>
#include <string>
#include <vector>

#include "ralab/denoiser.hpp"
#include "ralab/detectors.hpp"
#include "ralab/model.hpp"

namespace ralab {

enum class Scenario {
    train_denoiser,
    eval_denoiser,
    detect_once,
    sweep_snr,
    sweep_m,
    throughput,
    dynamic_groups,
    bench_time,
    oracle_checks,
};

enum class DetectorKind { mcmc, svgd, nsvgd, blind };

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario scenario);
DetectorKind detector_from_name(const std::string& name);
std::string detector_name(DetectorKind kind);
LayerVariant variant_from_name(const std::string& name);
std::string variant_name(LayerVariant variant);

// Flat `key = value` config file ('#'/';' comment lines, blank lines ignored).
std::map<std::string, std::string> read_config_file(const std::string& path);

// One `key=value` from the command line, layered over the file entries.
void apply_override(std::map<std::string, std::string>& entries, const std::string& assignment);

// Everything a scenario run needs.  Built from defaults (some per scenario)
// plus the merged config entries; unknown keys are rejected by name.
struct ExperimentConfig {
    Scenario scenario = Scenario::detect_once;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int trials = 200;

    int k = 20;
    int l = 10;
    int m = 20;
    int t = 35;
    double beta = 1.0;
    double snr_db = 8.0;
    std::vector<double> snr_sweep = {6, 8, 10, 12, 14, 16};
    std::vector<int> m_sweep = {5, 10, 15, 20};

    std::vector<DetectorKind> detectors = {DetectorKind::mcmc, DetectorKind::svgd,
                                           DetectorKind::nsvgd, DetectorKind::blind};
    DetectorConfig detector;
    std::string denoiser_params; // empty -> identity layer for the blind detector

    // train-denoiser / eval-denoiser
    int train_count = 1750;
    double train_snr_db = 10.0;
    int test_count = 1750;
    double test_snr_db = 6.0;
    TrainConfig training;

    // dynamic-groups
    int group_m1_min = 3;
    int group_m1_max = 7;
    int group_m2_min = 8;
    int group_m2_max = 12;
    int group_split = 10;

    int bench_runs = 5;

    void validate() const;
};

ExperimentConfig make_config(Scenario scenario,
                             const std::map<std::string, std::string>& entries);

// One grid point of a detection experiment.
struct TrialPoint {
    int k = 20;
    int l = 10;
    int m = 20;
    int t = 35;
    double beta = 1.0;
    double snr_db = 8.0;
    bool grouped = false;
    int m1_min = 0, m1_max = 0, m2_min = 0, m2_max = 0, split = 0;
};

// Per-trial metric streams for one detector at one point.
struct DetectorStats {
    std::vector<double> mse;
    std::vector<double> pade;
    std::vector<double> throughput;
    std::vector<double> wall_ms;
};

double mean_of(const std::vector<double>& values);
double se_of(const std::vector<double>& values); // sample-sd / sqrt(n)

// Run `trials` paired trials: every detector sees the same frames, each with
// its own derived RNG stream.  The blind detector runs on the frame after the
// given layer; the others consume the raw frame.  `point_ordinal`
// disambiguates seeds between grid points.
std::map<DetectorKind, DetectorStats> run_point(const TrialPoint& point,
                                                const std::vector<DetectorKind>& detectors,
                                                const DetectorConfig& cfg,
                                                const BmhtParams& denoiser_params, int trials,
                                                std::uint64_t seed, std::uint64_t point_ordinal);

// One row of results.csv.
struct PointResult {
    std::string scenario;
    std::string detector;
    int n = 0, k = 0, l = 0, m = 0, t = 0;
    double snr_db = 0.0;
    int trials = 0;
    double mse_mean = 0.0, mse_se = 0.0;
    double pade_mean = 0.0, pade_se = 0.0;
    double throughput_mean = 0.0, throughput_se = 0.0;
    double wall_ms_mean = 0.0;
};

PointResult summarize_point(const std::string& scenario, DetectorKind detector,
                            const TrialPoint& point, int particles, const DetectorStats& stats,
                            int trials);

void write_results_csv(const std::string& path, const std::vector<PointResult>& rows);
void write_training_curve_csv(const std::string& path, const std::vector<EpochStats>& curve);
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::map<std::string, std::string>& entries, double wall_ms);

struct OracleCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Small self-contained correctness oracles: transform identities, analytic
// scores against central finite differences, and the tiny-instance exhaustive
// maximum-likelihood comparison for the blind detector.
std::vector<OracleCheck> oracle_checks(std::uint64_t seed);

// Pieces of oracle_checks that the acceptance suite reuses directly.
double worst_blind_score_fd_error(int instances, std::uint64_t seed);
double worst_aware_score_fd_error(int instances, std::uint64_t seed);
double worst_denoiser_gradient_fd_error(int points, std::uint64_t seed);

struct MleOracleStats {
    int seeds = 0;
    // Blind objective at the swarm mean within 5% of the exhaustive integer
    // maximum of the same objective (a converged swarm lands at or above it).
    int within_tolerance = 0;
    // Rounded estimate equals the noise-aware exhaustive argmax.
    int argmax_agreement = 0;
};
MleOracleStats tiny_mle_oracle(int seeds, std::uint64_t seed);

// Exhaustive search over {0..x_max}^K; returns the maximizing integer vector.
IntVector exhaustive_mle(const ReceivedFrame& frame, const PreamblePool& pool, int x_max,
                         double beta, bool blind_objective, double noise_power);

// Full scenario execution: writes results/manifest (and curve/params for the
// training scenario) under cfg.out_dir.  Returns a process exit status.
int run(const ExperimentConfig& cfg, const std::map<std::string, std::string>& entries);

} // namespace ralab
