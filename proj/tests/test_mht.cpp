#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "ralab/errors.hpp"
#include "ralab/mht.hpp"

using namespace ralab;

namespace {

// Independent oracle: evaluate the DTFT magnitude of an FIR filter directly.
double dtft_magnitude(const std::vector<double>& h, double w) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < h.size(); ++n)
        acc += h[n] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(n)));
    return std::abs(acc);
}

} // namespace

TEST_CASE("hadamard matrices satisfy H H^T = D I and reject bad orders") {
    for (int d : {1, 2, 4, 8, 16, 64}) {
        const TransformMatrix h = hadamard_matrix(d);
        REQUIRE(h.dim() == d);
        CHECK(h.kind == TransformKind::hadamard);
        CHECK(((h.entries.array() == 1.0) || (h.entries.array() == -1.0)).all());
        const RealMatrix gram = h.entries * h.entries.transpose();
        CHECK((gram - double(d) * RealMatrix::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS(hadamard_matrix(0), config_error);
    CHECK_THROWS_AS(hadamard_matrix(3), config_error);
    CHECK_THROWS_AS(hadamard_matrix(12), config_error);
    CHECK_THROWS_AS(hadamard_matrix(-8), config_error);
}

TEST_CASE("modified analysis matrix has the documented integer rows") {
    const Matrix8 q = mht_matrix_8().entries;
    const double expected[8][8] = {
        {1, 1, 1, 1, 1, 1, 1, 1},
        {1, -1, 1, -1, 1, -1, 1, -1},
        {1, 1, -1, -1, 1, 1, -1, -1},
        {1, -1, -1, 1, 1, -1, -1, 1},
        {1, -2, 1, 0, 0, 0, 0, 0},
        {0, 0, 1, -2, 1, 0, 0, 0},
        {0, 0, 0, 1, -2, 1, 0, 0},
        {0, 0, 0, 0, 0, 1, -2, 1},
    };
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(q(r, c) == expected[r][c]);
    // First four rows coincide with the order-8 Hadamard averaging bank.
    CHECK((q.topRows<4>() - hadamard_matrix(8).entries.topRows<4>()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("inverse matrix is bit-exact: Q8inv 路 Q8 = I with zero residual") {
    const Matrix8 q = mht_matrix_8().entries;
    const Matrix8 qi = imht_matrix_8().entries;
    // Every product entry is a signed sum of multiples of 1/8, exact in
    // binary floating point, so the residual is not just small but zero.
    CHECK((qi * q - Matrix8::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((q * qi - Matrix8::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward/inverse round trip on 1e4 random blocks stays below 1e-10") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        Vector8 x;
        for (int i = 0; i < 8; ++i) x[i] = 3.0 * normal(rng);
        const Vector8 back = mht_inverse(mht_forward(x));
        worst = std::max(worst, (back - x).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("detail-filter magnitude response matches a numeric DTFT of {1,-2,1}") {
    const std::vector<double> h = {1.0, -2.0, 1.0};
    for (int i = 0; i < 64; ++i) {
        const double w = 2.0 * M_PI * i / 64.0;
        CHECK(second_derivative_response(w) == doctest::Approx(dtft_magnitude(h, w)).epsilon(1e-12));
    }
    CHECK(second_derivative_response(0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(second_derivative_response(M_PI) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(second_derivative_response(M_PI / 2) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("depth-1 haar packet equals the direct two-sample butterfly") {
    RealVector x(2);
    x << 3.25, -1.5;
    const RealVector out = haar_packet_analysis(x, 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(out[0] == doctest::Approx((3.25 - 1.5) * inv_sqrt2).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx((3.25 + 1.5) * inv_sqrt2).epsilon(1e-15));
}

TEST_CASE("depth-2 haar packet equals half the re-ordered order-4 Hadamard matrix") {
    // Build the bank's equivalent matrix by pushing basis vectors through it.
    RealMatrix bank(4, 4);
    for (int j = 0; j < 4; ++j) {
        RealVector e = RealVector::Zero(4);
        e[j] = 1.0;
        bank.col(j) = haar_packet_analysis(e, 2);
    }
    const RealMatrix h4 = hadamard_matrix(4).entries;
    // Subband order (ll, lh, hl, hh) picks Hadamard rows 0, 2, 1, 3.
    const int perm[4] = {0, 2, 1, 3};
    for (int r = 0; r < 4; ++r)
        CHECK((bank.row(r) - 0.5 * h4.row(perm[r])).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    RealVector x(4);
    for (int i = 0; i < 4; ++i) x[i] = normal(rng);
    RealMatrix permuted(4, 4);
    for (int r = 0; r < 4; ++r) permuted.row(r) = h4.row(perm[r]);
    CHECK((haar_packet_analysis(x, 2) - 0.5 * permuted * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("depth-3 haar packet matches order-8 Hadamard rows up to permutation") {
    RealMatrix bank(8, 8);
    for (int j = 0; j < 8; ++j) {
        RealVector e = RealVector::Zero(8);
        e[j] = 1.0;
        bank.col(j) = haar_packet_analysis(e, 3);
    }
    const RealMatrix h8 = hadamard_matrix(8).entries;
    const double scale = 1.0 / (2.0 * std::sqrt(2.0));
    std::vector<bool> used(8, false);
    for (int r = 0; r < 8; ++r) {
        bool matched = false;
        for (int s = 0; s < 8 && !matched; ++s) {
            if (used[s]) continue;
            if ((bank.row(r) - scale * h8.row(s)).cwiseAbs().maxCoeff() < 1e-12) {
                used[s] = true;
                matched = true;
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("haar packet analysis on longer signals keeps per-subband blocks") {
    // Length 8, depth 2: four subbands of two samples each; compare against
    // running the depth-2 bank on each length-4 half and interleaving.
    std::mt19937_64 rng(13);
    std::normal_distribution<double> normal(0.0, 1.0);
    RealVector x(8);
    for (int i = 0; i < 8; ++i) x[i] = normal(rng);
    const RealVector full = haar_packet_analysis(x, 2);
    const RealVector left = haar_packet_analysis(x.head(4), 2);
    const RealVector right = haar_packet_analysis(x.tail(4), 2);
    for (int band = 0; band < 4; ++band) {
        CHECK(full[2 * band] == doctest::Approx(left[band]).epsilon(1e-14));
        CHECK(full[2 * band + 1] == doctest::Approx(right[band]).epsilon(1e-14));
    }
}

TEST_CASE("haar packet analysis validates its arguments") {
    RealVector x(4);
    x.setZero();
    CHECK_THROWS_AS(haar_packet_analysis(x, 0), config_error);
    CHECK_THROWS_AS(haar_packet_analysis(x, 3), shape_error);
    RealVector odd(6);
    odd.setZero();
    CHECK_THROWS_AS(haar_packet_analysis(odd, 2), shape_error);
}
