#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ralab/detectors.hpp"
#include "ralab/errors.hpp"
#include "ralab/model.hpp"

using namespace ralab;

namespace {

ParticleSet set_from(const RealMatrix& positions) {
    ParticleSet set;
    set.positions = positions;
    return set;
}

ReceivedFrame scalar_frame(double amplitude, int antennas, double noise_power) {
    ReceivedFrame frame;
    frame.y = ComplexMatrix::Constant(1, antennas, Complex(amplitude, 0.0));
    frame.noise_power = noise_power;
    frame.truth.counts = IntVector::Zero(1);
    return frame;
}

PreamblePool scalar_pool() {
    PreamblePool pool;
    pool.z = ComplexMatrix::Ones(1, 1);
    return pool;
}

} // namespace

TEST_CASE("particle initialization lands in the configured interval") {
    DetectorConfig cfg;
    Rng rng = make_rng(1);
    const ParticleSet set = init_particles(40, 7, cfg, rng);
    CHECK(set.count() == 40);
    CHECK(set.dim() == 7);
    CHECK(set.positions.minCoeff() >= 1.0);
    CHECK(set.positions.maxCoeff() <= 1.1);
    Rng r1 = make_rng(4), r2 = make_rng(4);
    const ParticleSet a = init_particles(5, 3, cfg, r1);
    const ParticleSet b = init_particles(5, 3, cfg, r2);
    CHECK((a.positions - b.positions).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(init_particles(0, 3, cfg, rng), config_error);
    CHECK_THROWS_AS(init_particles(3, 0, cfg, rng), config_error);
}

TEST_CASE("median bandwidth worked examples") {
    // Two particles at 0 and 1: the only distance is 1, h = 1 / ln 2.
    RealMatrix two(2, 1);
    two << 0.0, 1.0;
    CHECK(median_bandwidth(set_from(two)) == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));

    // Four collinear particles: distances {1, 2, 4, 1, 3, 2}; the even count
    // takes the mean of the middle two (2, 2), so h = 4 / ln 4.
    RealMatrix four(4, 1);
    four << 0.0, 1.0, 2.0, 4.0;
    CHECK(median_bandwidth(set_from(four)) == doctest::Approx(4.0 / std::log(4.0)).epsilon(1e-12));

    // Coincident particles fall back to the floor.
    RealMatrix same = RealMatrix::Ones(3, 2);
    CHECK(median_bandwidth(set_from(same)) == 1e-6);
    CHECK(median_bandwidth(set_from(same), 1e-3) == 1e-3);

    RealMatrix one = RealMatrix::Zero(1, 2);
    CHECK_THROWS_AS(median_bandwidth(set_from(one)), config_error);
}

TEST_CASE("svgd velocity matches the brute-force double loop") {
    Rng rng = make_rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    RealMatrix positions(5, 3);
    for (int i = 0; i < positions.size(); ++i) positions.data()[i] = normal(rng);
    const ScoreFn score_fn = [](const RealVector& x) { return RealVector(-x); };
    const double h = 0.7;
    const RealMatrix velocity = svgd_velocity(positions, score_fn, h);
    REQUIRE(velocity.rows() == 5);
    REQUIRE(velocity.cols() == 3);
    for (int a = 0; a < 5; ++a) {
        RealVector expected = RealVector::Zero(3);
        for (int i = 0; i < 5; ++i) {
            const double kern =
                std::exp(-(positions.row(i) - positions.row(a)).squaredNorm() / h);
            expected += kern * (-positions.row(i).transpose()) -
                        (2.0 / h) * (positions.row(i) - positions.row(a)).transpose() * kern;
        }
        expected /= 5.0;
        CHECK((velocity.row(a).transpose() - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("single-particle velocity is the bare score") {
    RealMatrix one(1, 4);
    one << 0.5, -1.0, 2.0, 0.0;
    const ScoreFn score_fn = [](const RealVector& x) { return RealVector(3.0 * x); };
    const RealMatrix velocity = svgd_velocity(one, score_fn, 2.0);
    CHECK((velocity - 3.0 * one).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero score leaves pure repulsion") {
    RealMatrix positions(2, 1);
    positions << 0.0, 1.0;
    const ScoreFn zero = [](const RealVector& x) { return RealVector(RealVector::Zero(x.size())); };
    const RealMatrix velocity = svgd_velocity(positions, zero, 1.0);
    // The lower particle is pushed down, the upper one up.
    CHECK(velocity(0, 0) < 0.0);
    CHECK(velocity(1, 0) > 0.0);
    CHECK(velocity(0, 0) == doctest::Approx(-velocity(1, 0)).epsilon(1e-12));
    CHECK_THROWS_AS(svgd_velocity(positions, zero, 0.0), config_error);
}

TEST_CASE("count estimates round half away from zero and clamp at zero") {
    RealMatrix positions(2, 5);
    positions.row(0) << 0.3, 0.4, 1.4, -0.5, 2.1;
    positions.row(1) << 0.5, 0.6, 1.6, 0.1, 2.9;
    // Column means: 0.4, 0.5, 1.5, -0.2, 2.5.
    const IntVector estimate = estimate_counts(set_from(positions));
    CHECK(estimate[0] == 0);
    CHECK(estimate[1] == 1);
    CHECK(estimate[2] == 2);
    CHECK(estimate[3] == 0);
    CHECK(estimate[4] == 3);
}

TEST_CASE("detector configuration validation") {
    DetectorConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto expect_throw = [](auto mutate) {
        DetectorConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), config_error);
    };
    expect_throw([](DetectorConfig& c) { c.particles = 0; });
    expect_throw([](DetectorConfig& c) { c.iterations = 0; });
    expect_throw([](DetectorConfig& c) { c.step_size = 0.0; });
    expect_throw([](DetectorConfig& c) { c.beta = 0.0; });
    expect_throw([](DetectorConfig& c) { c.stability = 0.0; });
    expect_throw([](DetectorConfig& c) { c.momentum = 1.0; });
    expect_throw([](DetectorConfig& c) { c.accum_decay = -0.1; });
    expect_throw([](DetectorConfig& c) { c.particle_floor = 0.0; });
    expect_throw([](DetectorConfig& c) { c.init_low = 2.0; });
    expect_throw([](DetectorConfig& c) { c.mcmc_burn_fraction = 1.0; });
}

TEST_CASE("degenerate pipeline settings reduce the biased variant to plain svgd") {
    // With no accumulator, no decay, no momentum and no bias, the normalized
    // update divides the velocity by the stability constant; doubling the step
    // and the stability together must reproduce the plain trajectory.
    Rng data_rng = make_rng(5);
    const PreamblePool pool = generate_preamble_pool(6, 4, data_rng, true);
    const ActivityVector activity = draw_activity(5, 6, data_rng);
    const ChannelRealization channel = draw_channel(5, 2, 1.0, data_rng);
    const ReceivedFrame frame =
        synthesize_frame(pool, activity, channel, snr_to_noise_power(10.0), data_rng);

    DetectorConfig plain;
    plain.iterations = 5;
    plain.step_size = 0.01;

    DetectorConfig degenerate = plain;
    degenerate.step_size = 0.02;
    degenerate.stability = 2.0;
    degenerate.accum_decay = 0.0;
    degenerate.weight_decay = 0.0;
    degenerate.momentum = 0.0;
    degenerate.bias_weight = 0.0;

    Rng r1 = make_rng(77), r2 = make_rng(77);
    const DetectionResult a = run_svgd(frame, pool, plain, r1);
    const DetectionResult b = run_nsvgd(frame, pool, degenerate, 5, r2);
    CHECK((a.particle_mean - b.particle_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.estimate - b.estimate).cwiseAbs().sum() == 0);
}

TEST_CASE("particle floor is respected by the normalized variants") {
    // A nearly silent frame drives the activity estimates toward zero; the
    // blind pipeline must stop at the floor instead of crossing it.
    PreamblePool pool;
    Rng rng = make_rng(6);
    pool = generate_preamble_pool(6, 4, rng, true);
    ReceivedFrame frame;
    frame.y = ComplexMatrix::Constant(4, 2, Complex(1e-4, -1e-4));
    frame.noise_power = 0.1;
    frame.truth.counts = IntVector::Zero(6);
    DetectorConfig cfg;
    cfg.iterations = 300;
    Rng det_rng = make_rng(7);
    const DetectionResult result = run_blind_nsvgd(frame, pool, cfg, det_rng);
    CHECK(result.particle_mean.minCoeff() >= cfg.particle_floor);
    CHECK(result.estimate.maxCoeff() == 0);
}

TEST_CASE("plain svgd finds the scalar stationary point") {
    // One preamble, z = 1, twenty antennas with |y|^2 = 3.5 each: the
    // noise-aware optimum is x* = 3.5 - delta = 3 at delta = 0.5.
    const PreamblePool pool = scalar_pool();
    const ReceivedFrame frame = scalar_frame(std::sqrt(3.5), 20, 0.5);
    DetectorConfig cfg;
    cfg.iterations = 1500;
    cfg.step_size = 0.05;
    Rng rng = make_rng(8);
    const DetectionResult result = run_svgd(frame, pool, cfg, rng);
    CHECK(result.iterations_run == 1500);
    CHECK(std::abs(result.particle_mean[0] - 3.0) < 0.5);
    CHECK(result.estimate[0] == 3);
}

TEST_CASE("metropolis baseline concentrates near the scalar optimum") {
    const PreamblePool pool = scalar_pool();
    const ReceivedFrame frame = scalar_frame(std::sqrt(3.5), 20, 0.5);
    DetectorConfig cfg;
    cfg.iterations = 6000;
    Rng rng = make_rng(9);
    const DetectionResult result = run_mcmc(frame, pool, cfg, rng);
    CHECK(result.estimate[0] == 3);
    CHECK(result.particle_mean[0] > 2.5);
    CHECK(result.particle_mean[0] < 4.0);

    ReceivedFrame noiseless = frame;
    noiseless.noise_power = 0.0;
    CHECK_THROWS_AS(run_mcmc(noiseless, pool, cfg, rng), config_error);
}

TEST_CASE("detectors are deterministic given the generator state") {
    Rng data_rng = make_rng(10);
    const PreamblePool pool = generate_preamble_pool(8, 4, data_rng, true);
    const ActivityVector activity = draw_activity(6, 8, data_rng);
    const ChannelRealization channel = draw_channel(6, 3, 1.0, data_rng);
    const ReceivedFrame frame =
        synthesize_frame(pool, activity, channel, snr_to_noise_power(8.0), data_rng);
    DetectorConfig cfg;
    cfg.iterations = 50;

    Rng a1 = make_rng(11), a2 = make_rng(11);
    const DetectionResult r1 = run_blind_nsvgd(frame, pool, cfg, a1);
    const DetectionResult r2 = run_blind_nsvgd(frame, pool, cfg, a2);
    CHECK((r1.particle_mean - r2.particle_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r1.estimate - r2.estimate).cwiseAbs().sum() == 0);

    Rng b1 = make_rng(12), b2 = make_rng(12);
    const DetectionResult m1 = run_mcmc(frame, pool, cfg, b1);
    const DetectionResult m2 = run_mcmc(frame, pool, cfg, b2);
    CHECK((m1.particle_mean - m2.particle_mean).cwiseAbs().maxCoeff() == 0.0);

    Rng c1 = make_rng(13), c2 = make_rng(13);
    const DetectionResult n1 = run_nsvgd(frame, pool, cfg, 6, c1);
    const DetectionResult n2 = run_nsvgd(frame, pool, cfg, 6, c2);
    CHECK((n1.particle_mean - n2.particle_mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("biased variant anchors the total mass near the known count") {
    // Identical frames, wildly different m_known: the bias pulls the particle
    // mass toward n * m_known, so the reported totals must order accordingly.
    Rng data_rng = make_rng(14);
    const PreamblePool pool = generate_preamble_pool(8, 4, data_rng, true);
    const ActivityVector activity = draw_activity(6, 8, data_rng);
    const ChannelRealization channel = draw_channel(6, 3, 1.0, data_rng);
    const ReceivedFrame frame =
        synthesize_frame(pool, activity, channel, snr_to_noise_power(8.0), data_rng);
    DetectorConfig cfg;
    cfg.iterations = 400;
    Rng r1 = make_rng(15), r2 = make_rng(15);
    const DetectionResult low = run_nsvgd(frame, pool, cfg, 1, r1);
    const DetectionResult high = run_nsvgd(frame, pool, cfg, 24, r2);
    CHECK(low.particle_mean.sum() < high.particle_mean.sum());
    CHECK_THROWS_AS(run_nsvgd(frame, pool, cfg, 0, r1), config_error);
}

TEST_CASE("detectors validate frame and pool dimensions") {
    Rng rng = make_rng(16);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    ReceivedFrame frame;
    frame.y = ComplexMatrix::Ones(3, 2); // three samples, pool expects four
    frame.noise_power = 0.1;
    DetectorConfig cfg;
    cfg.iterations = 3;
    CHECK_THROWS_AS(run_svgd(frame, pool, cfg, rng), shape_error);
    CHECK_THROWS_AS(run_blind_nsvgd(frame, pool, cfg, rng), shape_error);
    CHECK_THROWS_AS(run_mcmc(frame, pool, cfg, rng), shape_error);
}
