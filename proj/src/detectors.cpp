#include "ralab/detectors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "ralab/errors.hpp"

namespace ralab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

RealMatrix score_all(const RealMatrix& positions, const ScoreFn& score_fn) {
    RealMatrix scores(positions.rows(), positions.cols());
    for (Eigen::Index u = 0; u < positions.rows(); ++u)
        scores.row(u) = score_fn(positions.row(u).transpose()).transpose();
    return scores;
}

double bandwidth_for(const ParticleSet& set, const DetectorConfig& cfg) {
    return set.count() < 2 ? 1.0 : median_bandwidth(set, cfg.bandwidth_floor);
}

// Squared-velocity normalization, weight decay and momentum of the biased and
// blind variants, applied in place.  r is the 1-based iteration index; the
// first iteration seeds both accumulators instead of mixing.
struct PipelineState {
    RealMatrix accum; // q_r, one row per particle
    RealMatrix mom;   // b_r
};

void normalized_update(const DetectorConfig& cfg, int r, const RealMatrix& positions,
                       PipelineState& state, RealMatrix& velocity) {
    if (cfg.accum_decay != 0.0) {
        const RealMatrix squared = velocity.cwiseProduct(velocity);
        state.accum = r == 1 ? squared
                             : (cfg.accum_decay * state.accum + (1.0 - cfg.accum_decay) * squared);
    }
    velocity = velocity.cwiseQuotient(
        (state.accum.cwiseSqrt().array() + cfg.stability).matrix());
    if (cfg.weight_decay != 0.0) velocity -= cfg.weight_decay * positions;
    if (cfg.momentum != 0.0) {
        state.mom = r == 1 ? velocity
                           : (cfg.momentum * state.mom + (1.0 - cfg.momentum) * velocity);
        velocity = state.mom;
    }
}

DetectionResult finish(ParticleSet& set, Clock::time_point start) {
    DetectionResult result;
    result.particle_mean = set.positions.colwise().mean().transpose();
    result.estimate = estimate_counts(set);
    result.iterations_run = set.iteration;
    result.wall_ms = elapsed_ms(start);
    return result;
}

void check_frame(const ReceivedFrame& frame, const PreamblePool& pool, const char* who) {
    if (frame.samples() != pool.samples())
        throw shape_error(std::string(who) + ": frame/pool sample counts differ");
}

} // namespace

void DetectorConfig::validate() const {
    if (particles < 1) throw config_error("DetectorConfig: need at least one particle");
    if (iterations < 1) throw config_error("DetectorConfig: need at least one iteration");
    if (step_size <= 0.0) throw config_error("DetectorConfig: step_size must be positive");
    if (beta <= 0.0) throw config_error("DetectorConfig: beta must be positive");
    if (stability <= 0.0) throw config_error("DetectorConfig: stability must be positive");
    if (weight_decay < 0.0) throw config_error("DetectorConfig: weight_decay must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0)
        throw config_error("DetectorConfig: momentum must lie in [0, 1)");
    if (accum_decay < 0.0 || accum_decay >= 1.0)
        throw config_error("DetectorConfig: accum_decay must lie in [0, 1)");
    if (bias_weight < 0.0) throw config_error("DetectorConfig: bias_weight must be >= 0");
    if (particle_floor <= 0.0) throw config_error("DetectorConfig: particle_floor must be positive");
    if (bandwidth_floor <= 0.0)
        throw config_error("DetectorConfig: bandwidth_floor must be positive");
    if (init_low > init_high) throw config_error("DetectorConfig: init_low must be <= init_high");
    if (mcmc_state_max < 1) throw config_error("DetectorConfig: mcmc_state_max must be >= 1");
    if (mcmc_burn_fraction < 0.0 || mcmc_burn_fraction >= 1.0)
        throw config_error("DetectorConfig: mcmc_burn_fraction must lie in [0, 1)");
}

ParticleSet init_particles(int n, int k, const DetectorConfig& cfg, Rng& rng) {
    if (n < 1 || k < 1) throw config_error("init_particles: need n >= 1 and k >= 1");
    std::uniform_real_distribution<double> uniform(cfg.init_low, cfg.init_high);
    ParticleSet set;
    set.positions.resize(n, k);
    for (int u = 0; u < n; ++u)
        for (int i = 0; i < k; ++i) set.positions(u, i) = uniform(rng);
    return set;
}

double median_bandwidth(const ParticleSet& particles, double h_min) {
    const int n = particles.count();
    if (n < 2)
        throw config_error("median_bandwidth: needs at least two particles (single-particle "
                           "runs use h = 1 by convention)");
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist.push_back((particles.positions.row(i) - particles.positions.row(j)).norm());
    std::sort(dist.begin(), dist.end());
    const std::size_t mid = dist.size() / 2;
    const double med =
        dist.size() % 2 == 1 ? dist[mid] : 0.5 * (dist[mid - 1] + dist[mid]);
    return std::max(med * med / std::log(static_cast<double>(n)), h_min);
}

RealMatrix svgd_velocity(const RealMatrix& positions, const ScoreFn& score_fn, double h) {
    if (h <= 0.0) throw config_error("svgd_velocity: bandwidth must be positive");
    const Eigen::Index n = positions.rows();
    const RealMatrix scores = score_all(positions, score_fn);
    RealMatrix kernel(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kernel(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double sq = (positions.row(i) - positions.row(j)).squaredNorm();
            kernel(i, j) = kernel(j, i) = std::exp(-sq / h);
        }
    }
    const RealVector ksum = kernel.rowwise().sum();
    return (kernel * scores + (2.0 / h) * (ksum.asDiagonal() * positions - kernel * positions)) /
           static_cast<double>(n);
}

IntVector estimate_counts(const ParticleSet& particles) {
    if (particles.count() < 1) throw shape_error("estimate_counts: empty particle set");
    const RealVector mean = particles.positions.colwise().mean().transpose();
    IntVector estimate(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        estimate[i] = static_cast<int>(std::max(0L, std::lround(mean[i])));
    return estimate;
}

DetectionResult run_svgd(const ReceivedFrame& frame, const PreamblePool& pool,
                         const DetectorConfig& cfg, Rng& rng) {
    cfg.validate();
    check_frame(frame, pool, "run_svgd");
    const auto start = Clock::now();
    const ScoreFn score_fn = [&](const RealVector& x) {
        return score(frame, pool, x, cfg.beta, frame.noise_power);
    };
    ParticleSet set = init_particles(cfg.particles, pool.preambles(), cfg, rng);
    for (int r = 1; r <= cfg.iterations; ++r) {
        const double h = bandwidth_for(set, cfg);
        set.positions += cfg.step_size * svgd_velocity(set.positions, score_fn, h);
        set.iteration = r;
    }
    return finish(set, start);
}

namespace {

// Shared driver for the two normalized variants; `bias` is evaluated before
// the accumulator each iteration (zero for the blind detector).
DetectionResult run_normalized(const PreamblePool& pool, const DetectorConfig& cfg,
                               const ScoreFn& score_fn,
                               const std::function<double(const RealMatrix&)>& bias, Rng& rng,
                               const char* who) {
    const auto start = Clock::now();
    ParticleSet set = init_particles(cfg.particles, pool.preambles(), cfg, rng);
    PipelineState state;
    state.accum = RealMatrix::Zero(set.count(), set.dim());
    state.mom = RealMatrix::Zero(set.count(), set.dim());
    for (int r = 1; r <= cfg.iterations; ++r) {
        const double h = bandwidth_for(set, cfg);
        RealMatrix velocity;
        try {
            velocity = svgd_velocity(set.positions, score_fn, h);
        } catch (const numerical_error& e) {
            throw numerical_error(std::string(who) + " at iteration " + std::to_string(r) + ": " +
                                  e.what());
        }
        if (bias) velocity.array() += bias(set.positions);
        normalized_update(cfg, r, set.positions, state, velocity);
        set.positions = (set.positions + cfg.step_size * velocity).cwiseMax(cfg.particle_floor);
        set.iteration = r;
    }
    return finish(set, start);
}

} // namespace

DetectionResult run_nsvgd(const ReceivedFrame& frame, const PreamblePool& pool,
                          const DetectorConfig& cfg, int m_known, Rng& rng) {
    cfg.validate();
    check_frame(frame, pool, "run_nsvgd");
    if (m_known < 1) throw config_error("run_nsvgd: m_known must be >= 1");
    const ScoreFn score_fn = [&](const RealVector& x) {
        return score(frame, pool, x, cfg.beta, frame.noise_power);
    };
    const double n = cfg.particles;
    const auto bias = [&, m_known](const RealMatrix& positions) {
        const double mass = positions.cwiseAbs().sum();
        return cfg.bias_weight * (n * m_known - mass) / n;
    };
    return run_normalized(pool, cfg, score_fn, bias, rng, "run_nsvgd");
}

DetectionResult run_blind_nsvgd(const ReceivedFrame& frame, const PreamblePool& pool,
                                const DetectorConfig& cfg, Rng& rng) {
    cfg.validate();
    check_frame(frame, pool, "run_blind_nsvgd");
    const ScoreFn score_fn = [&](const RealVector& x) {
        return score_blind(frame, pool, x, cfg.beta, cfg.particle_floor);
    };
    return run_normalized(pool, cfg, score_fn, nullptr, rng, "run_blind_nsvgd");
}

DetectionResult run_mcmc(const ReceivedFrame& frame, const PreamblePool& pool,
                         const DetectorConfig& cfg, Rng& rng) {
    cfg.validate();
    check_frame(frame, pool, "run_mcmc");
    if (frame.noise_power <= 0.0)
        throw config_error("run_mcmc: frame must carry a positive noise power");
    const auto start = Clock::now();
    const int k = pool.preambles();
    IntVector state = IntVector::Ones(k);
    double ll = log_likelihood(frame, pool, state.cast<double>(), cfg.beta, frame.noise_power);
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::uniform_int_distribution<int> step(0, 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int burn = static_cast<int>(cfg.iterations * cfg.mcmc_burn_fraction);
    RealVector sum = RealVector::Zero(k);
    int kept = 0;
    for (int r = 1; r <= cfg.iterations; ++r) {
        const int coord = pick(rng);
        const int delta = step(rng) == 0 ? -1 : 1;
        int proposed = state[coord] + delta;
        // Proposals off the box edge are reflected back onto the edge, i.e.
        // the chain proposes its current state and stays.
        proposed = std::clamp(proposed, 0, cfg.mcmc_state_max);
        double ll_prop = ll;
        if (proposed != state[coord]) {
            IntVector candidate = state;
            candidate[coord] = proposed;
            ll_prop = log_likelihood(frame, pool, candidate.cast<double>(), cfg.beta,
                                     frame.noise_power);
            if (ll_prop >= ll || std::log(1.0 - unit(rng)) < ll_prop - ll) {
                state = candidate;
                ll = ll_prop;
            }
        }
        if (r > burn) {
            sum += state.cast<double>();
            ++kept;
        }
    }
    DetectionResult result;
    result.particle_mean = sum / std::max(1, kept);
    result.estimate = IntVector(k);
    for (int i = 0; i < k; ++i)
        result.estimate[i] = std::max(0, static_cast<int>(std::lround(result.particle_mean[i])));
    result.iterations_run = cfg.iterations;
    result.wall_ms = elapsed_ms(start);
    return result;
}

} // namespace ralab
