#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ralab/errors.hpp"
#include "ralab/likelihood.hpp"
#include "ralab/model.hpp"

using namespace ralab;

namespace {

PreamblePool unit_pool() {
    PreamblePool pool;
    pool.z = ComplexMatrix::Ones(1, 1);
    return pool;
}

ReceivedFrame frame_from(const ComplexMatrix& y, double noise_power = 0.0) {
    ReceivedFrame frame;
    frame.y = y;
    frame.noise_power = noise_power;
    return frame;
}

ReceivedFrame random_frame(const PreamblePool& pool, int m, int t, double delta, Rng& rng) {
    const ActivityVector activity = draw_activity(m, pool.preambles(), rng);
    const ChannelRealization channel = draw_channel(m, t, 1.0, rng);
    return synthesize_frame(pool, activity, channel, delta, rng);
}

} // namespace

TEST_CASE("scalar log-likelihood closed form") {
    // One sample, one preamble, z = 1: phi = beta^2 x + delta.
    const PreamblePool pool = unit_pool();
    const ReceivedFrame frame = frame_from(ComplexMatrix::Ones(1, 1), 0.5);
    RealVector x(1);
    x << 2.0;
    const double value = log_likelihood(frame, pool, x, 1.0, 0.5);
    CHECK(value == doctest::Approx(-1.0 / 2.5 - std::log(2.5)).epsilon(1e-12));
    CHECK(value == doctest::Approx(-1.3163).epsilon(1e-4));
}

TEST_CASE("scalar blind log-likelihood closed form") {
    const PreamblePool pool = unit_pool();
    const ReceivedFrame frame = frame_from(ComplexMatrix::Ones(1, 1));
    RealVector x(1);
    x << 2.0;
    const double value = blind_log_likelihood(frame, pool, x, 1.0);
    CHECK(value == doctest::Approx(-0.5 - std::log(2.0)).epsilon(1e-12));
    CHECK(value == doctest::Approx(-1.1931).epsilon(1e-4));
}

TEST_CASE("scalar blind score closed form") {
    // x = 1, y = 2: score = |y|^2 / x^2 - T / x = 4 - 1 = 3.
    const PreamblePool pool = unit_pool();
    ComplexMatrix y(1, 1);
    y(0, 0) = 2.0;
    const ReceivedFrame frame = frame_from(y);
    RealVector x(1);
    x << 1.0;
    const RealVector g = score_blind(frame, pool, x, 1.0);
    CHECK(g.size() == 1);
    CHECK(g[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("blind score vanishes at the scalar stationary point") {
    // For z = 1 the maximizer is x* = sum_t |y_t|^2 / (T beta^2).
    const PreamblePool pool = unit_pool();
    ComplexMatrix y(1, 3);
    y(0, 0) = Complex(1.0, 0.0);
    y(0, 1) = Complex(0.0, 2.0);
    y(0, 2) = Complex(-1.0, 0.0);
    const ReceivedFrame frame = frame_from(y);
    RealVector x(1);
    x << 2.0;
    CHECK(score_blind(frame, pool, x, 1.0)[0] == doctest::Approx(0.0).epsilon(1e-10));
    x << 1.5;
    CHECK(score_blind(frame, pool, x, 1.0)[0] > 0.0);
    x << 2.5;
    CHECK(score_blind(frame, pool, x, 1.0)[0] < 0.0);
}

TEST_CASE("log-likelihood with zero activity reduces to the noise term") {
    const double delta = 0.5;
    ComplexMatrix y(2, 1);
    y << Complex(1.0, 0.0), Complex(1.0, 0.0);
    ReceivedFrame frame = frame_from(y, delta);
    PreamblePool pool;
    Rng rng = make_rng(8);
    pool = generate_preamble_pool(3, 2, rng, true);
    const double value = log_likelihood(frame, pool, RealVector::Zero(3), 1.0, delta);
    CHECK(value == doctest::Approx(-4.0 - 2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("log-likelihood is additive over antennas") {
    Rng rng = make_rng(21);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const ReceivedFrame multi = random_frame(pool, 5, 3, 0.2, rng);
    RealVector x(6);
    x << 0.5, 1.0, 2.0, 0.1, 1.5, 0.7;
    double sum = 0.0;
    for (int t = 0; t < 3; ++t) {
        const ReceivedFrame single = frame_from(multi.y.col(t), multi.noise_power);
        sum += log_likelihood(single, pool, x, 1.0, 0.2);
    }
    CHECK(log_likelihood(multi, pool, x, 1.0, 0.2) == doctest::Approx(sum).epsilon(1e-10));
}

TEST_CASE("scores agree with central finite differences") {
    Rng rng = make_rng(33);
    const double h = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
        const double delta = snr_to_noise_power(10.0);
        const ReceivedFrame frame = random_frame(pool, 5, 3, delta, rng);
        std::uniform_real_distribution<double> coord(0.5, 3.0);
        RealVector x(6);
        for (int j = 0; j < 6; ++j) x[j] = coord(rng);

        const RealVector aware = score(frame, pool, x, 1.0, delta);
        const RealVector blind = score_blind(frame, pool, x, 1.0);
        for (int j = 0; j < 6; ++j) {
            RealVector hi = x, lo = x;
            hi[j] += h;
            lo[j] -= h;
            const double fd_aware = (log_likelihood(frame, pool, hi, 1.0, delta) -
                                     log_likelihood(frame, pool, lo, 1.0, delta)) /
                                    (2 * h);
            const double fd_blind = (blind_log_likelihood(frame, pool, hi, 1.0) -
                                     blind_log_likelihood(frame, pool, lo, 1.0)) /
                                    (2 * h);
            CHECK(aware[j] == doctest::Approx(fd_aware).epsilon(1e-4));
            CHECK(blind[j] == doctest::Approx(fd_blind).epsilon(1e-4));
        }
    }
}

TEST_CASE("negative activity evaluates as zero activity") {
    Rng rng = make_rng(44);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const ReceivedFrame frame = random_frame(pool, 5, 2, 0.3, rng);
    RealVector x(6), clamped(6);
    x << 1.0, -0.5, 2.0, -3.0, 0.0, 1.5;
    clamped = x.cwiseMax(0.0);
    CHECK(log_likelihood(frame, pool, x, 1.0, 0.3) ==
          doctest::Approx(log_likelihood(frame, pool, clamped, 1.0, 0.3)).epsilon(1e-14));
}

TEST_CASE("blind evaluation floors small activity entries") {
    Rng rng = make_rng(45);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const ReceivedFrame frame = random_frame(pool, 5, 2, 0.3, rng);
    const RealVector zero = RealVector::Zero(6);
    const RealVector floored = RealVector::Constant(6, 1e-3);
    CHECK(blind_log_likelihood(frame, pool, zero, 1.0) ==
          doctest::Approx(blind_log_likelihood(frame, pool, floored, 1.0)).epsilon(1e-14));
    CHECK(std::isfinite(blind_log_likelihood(frame, pool, zero, 1.0)));
    const RealVector g0 = score_blind(frame, pool, zero, 1.0);
    const RealVector g1 = score_blind(frame, pool, floored, 1.0);
    CHECK((g0 - g1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("score is equivariant under preamble permutation") {
    Rng rng = make_rng(46);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const double delta = 0.25;
    const ReceivedFrame frame = random_frame(pool, 5, 2, delta, rng);
    RealVector x(6);
    x << 0.5, 1.0, 2.0, 0.1, 1.5, 0.7;
    const int perm[6] = {3, 0, 5, 1, 4, 2};
    PreamblePool permuted;
    permuted.z.resize(4, 6);
    RealVector px(6);
    for (int j = 0; j < 6; ++j) {
        permuted.z.col(j) = pool.z.col(perm[j]);
        px[j] = x[perm[j]];
    }
    const RealVector g = score(frame, pool, x, 1.0, delta);
    const RealVector pg = score(frame, permuted, px, 1.0, delta);
    for (int j = 0; j < 6; ++j) CHECK(pg[j] == doctest::Approx(g[perm[j]]).epsilon(1e-12));
    CHECK(log_likelihood(frame, permuted, px, 1.0, delta) ==
          doctest::Approx(log_likelihood(frame, pool, x, 1.0, delta)).epsilon(1e-12));
}

TEST_CASE("likelihood scales consistently with beta") {
    // beta^2 Z diag(x) Z^H equals Z diag(beta^2 x) Z^H, so beta can be folded
    // into the activity for the blind form.
    Rng rng = make_rng(47);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const ReceivedFrame frame = random_frame(pool, 5, 2, 0.3, rng);
    RealVector x(6);
    x << 0.5, 1.0, 2.0, 0.1, 1.5, 0.7;
    const double beta = 1.7;
    CHECK(blind_log_likelihood(frame, pool, x, beta, 1e-9) ==
          doctest::Approx(blind_log_likelihood(frame, pool, beta * beta * x, 1.0, 1e-9))
              .epsilon(1e-12));
}

TEST_CASE("input validation raises typed errors") {
    Rng rng = make_rng(48);
    const PreamblePool pool = generate_preamble_pool(6, 4, rng, true);
    const ReceivedFrame frame = random_frame(pool, 5, 2, 0.3, rng);
    const RealVector x = RealVector::Ones(6);
    CHECK_THROWS_AS(log_likelihood(frame, pool, RealVector::Ones(5), 1.0, 0.3), shape_error);
    CHECK_THROWS_AS(log_likelihood(frame, pool, x, 1.0, 0.0), config_error);
    CHECK_THROWS_AS(log_likelihood(frame, pool, x, 1.0, -1.0), config_error);
    CHECK_THROWS_AS(log_likelihood(frame, pool, x, 0.0, 0.3), config_error);
    CHECK_THROWS_AS(blind_log_likelihood(frame, pool, x, 1.0, 0.0), config_error);
    const PreamblePool other = generate_preamble_pool(6, 5, rng, true);
    CHECK_THROWS_AS(log_likelihood(frame, other, x, 1.0, 0.3), shape_error);
}
