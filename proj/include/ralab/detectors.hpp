#pragma once

#include <functional>

#include "ralab/likelihood.hpp"
#include "ralab/rng.hpp"
#include "ralab/types.hpp"

namespace ralab {

// Knobs shared by the particle detectors and the sampling baseline.  The
// normalized pipeline (velocity accumulator, weight decay, momentum) applies
// to the biased and blind variants; plain SVGD uses only step_size.
struct DetectorConfig {
    int particles = 6;             // n
    int iterations = 1000;         // N
    double step_size = 0.01;       // lambda
    double beta = 1.0;             // channel scale
    double stability = 1.0;        // epsilon added to the accumulator root
    double weight_decay = 0.1;     // gamma
    double momentum = 0.9;         // alpha
    double accum_decay = 0.9;      // rho for the squared-velocity accumulator
    double bias_weight = 0.1;      // nu for the population-size bias
    double particle_floor = 1e-3;  // x_min
    double bandwidth_floor = 1e-6; // h_min
    double init_low = 1.0;         // particles start uniform in [init_low,
    double init_high = 1.1;        //   init_high]
    int mcmc_state_max = 30;       // integer search box is {0..mcmc_state_max}^K
    double mcmc_burn_fraction = 0.5;

    void validate() const;
};

// One swarm: positions (one particle per row) plus the iteration counter.
struct ParticleSet {
    RealMatrix positions; // n x K
    int iteration = 0;

    int count() const { return static_cast<int>(positions.rows()); }
    int dim() const { return static_cast<int>(positions.cols()); }
};

ParticleSet init_particles(int n, int k, const DetectorConfig& cfg, Rng& rng);

// Median heuristic: h = med^2 / ln n over the n(n-1)/2 pairwise particle
// distances (an even count takes the mean of the two central values), floored
// at h_min.  Needs at least two particles.
double median_bandwidth(const ParticleSet& particles, double h_min = 1e-6);

using ScoreFn = std::function<RealVector(const RealVector&)>;

// Stein variational velocity for every particle under the RBF kernel
// k(x, x') = exp(-|x - x'|^2 / h):
//   w(x) = 1/n sum_i [ k(x_i, x) score(x_i) - (2/h)(x_i - x) k(x_i, x) ].
RealMatrix svgd_velocity(const RealMatrix& positions, const ScoreFn& score_fn, double h);

// Rounded particle mean, half away from zero, clamped below at 0.
IntVector estimate_counts(const ParticleSet& particles);

struct DetectionResult {
    IntVector estimate;
    RealVector particle_mean;
    int iterations_run = 0;
    double wall_ms = 0.0;
};

// Plain SVGD on the noise-aware likelihood (noise power taken from the
// frame's metadata): x <- x + lambda w each iteration, no normalization.
DetectionResult run_svgd(const ReceivedFrame& frame, const PreamblePool& pool,
                         const DetectorConfig& cfg, Rng& rng);

// Noise-aware SVGD with the population-size bias nu (n m_known - sum_u
// |x_u|_1) / n added to every velocity component, then the normalized
// pipeline (accumulator, weight decay, momentum, floored update).
DetectionResult run_nsvgd(const ReceivedFrame& frame, const PreamblePool& pool,
                          const DetectorConfig& cfg, int m_known, Rng& rng);

// Noise-blind variant: the score of the noise-free covariance on an already
// denoised frame, pushed through the same normalized pipeline.  Uses neither
// the noise power nor the device count.
DetectionResult run_blind_nsvgd(const ReceivedFrame& frame, const PreamblePool& pool,
                                const DetectorConfig& cfg, Rng& rng);

// Random-walk Metropolis baseline on the integer box {0..mcmc_state_max}^K
// under the noise-aware likelihood: +-1 proposals on one uniformly chosen
// coordinate (reflected at the box edges), estimate = rounded mean of the
// post-burn-in states.
DetectionResult run_mcmc(const ReceivedFrame& frame, const PreamblePool& pool,
                         const DetectorConfig& cfg, Rng& rng);

} // namespace ralab
