#include "ralab/mht.hpp"

#include <cmath>

#include "ralab/errors.hpp"

namespace ralab {

TransformMatrix hadamard_matrix(int d) {
    if (d < 1 || (d & (d - 1)) != 0)
        throw config_error("hadamard_matrix: order must be a positive power of two, got " +
                           std::to_string(d));
    RealMatrix h = RealMatrix::Ones(1, 1);
    for (int n = 1; n < d; n *= 2) {
        RealMatrix next(2 * n, 2 * n);
        next.topLeftCorner(n, n) = h;
        next.topRightCorner(n, n) = h;
        next.bottomLeftCorner(n, n) = h;
        next.bottomRightCorner(n, n) = -h;
        h = std::move(next);
    }
    return {h, TransformKind::hadamard};
}

TransformMatrix mht_matrix_8() {
    Matrix8 q;
    q.topRows<4>() = hadamard_matrix(8).entries.topRows<4>();
    q.bottomRows<4>().setZero();
    // Second-derivative rows start at taps 0, 2, 3, 5.
    const int start[4] = {0, 2, 3, 5};
    for (int r = 0; r < 4; ++r) {
        q(4 + r, start[r]) = 1.0;
        q(4 + r, start[r] + 1) = -2.0;
        q(4 + r, start[r] + 2) = 1.0;
    }
    return {q, TransformKind::mht};
}

TransformMatrix imht_matrix_8() {
    Matrix8 qi;
    qi << 1.0 / 8, 5.0 / 8, 1.0 / 8, 5.0 / 8, -0.5, 0.5, 1.0, 0.0,
        1.0 / 8, 7.0 / 8, -1.0 / 8, 1.0 / 8, -1.0, 0.0, 0.5, 0.5,
        1.0 / 8, 9.0 / 8, -3.0 / 8, -3.0 / 8, -0.5, -0.5, 0.0, 1.0,
        1.0 / 8, 3.0 / 8, -1.0 / 8, -3.0 / 8, 0.0, -1.0, -0.5, 0.5,
        1.0 / 8, -3.0 / 8, 1.0 / 8, -3.0 / 8, 0.5, -0.5, -1.0, 0.0,
        1.0 / 8, -9.0 / 8, 3.0 / 8, -3.0 / 8, 1.0, 0.0, -0.5, -0.5,
        1.0 / 8, -7.0 / 8, 1.0 / 8, 1.0 / 8, 0.5, 0.5, 0.0, -1.0,
        1.0 / 8, -5.0 / 8, -1.0 / 8, 5.0 / 8, 0.0, 1.0, 0.5, -0.5;
    return {qi, TransformKind::imht};
}

namespace {
const Matrix8 kMht = mht_matrix_8().entries;
const Matrix8 kImht = imht_matrix_8().entries;
} // namespace

Vector8 mht_forward(const Vector8& x) { return kMht * x; }

Vector8 mht_inverse(const Vector8& y) { return kImht * y; }

double second_derivative_response(double w) {
    const double s = std::sin(0.5 * w);
    return 4.0 * s * s;
}

RealVector haar_packet_analysis(const RealVector& x, int levels) {
    if (levels < 1) throw config_error("haar_packet_analysis: levels must be >= 1");
    const Eigen::Index span = Eigen::Index(1) << levels;
    if (x.size() < span || x.size() % span != 0)
        throw shape_error("haar_packet_analysis: input length " + std::to_string(x.size()) +
                          " is not divisible by 2^levels = " + std::to_string(span));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    RealVector bands = x;
    Eigen::Index band_len = x.size();
    for (int lv = 0; lv < levels; ++lv) {
        RealVector next(bands.size());
        const Eigen::Index half = band_len / 2;
        for (Eigen::Index base = 0; base < bands.size(); base += band_len) {
            for (Eigen::Index i = 0; i < half; ++i) {
                const double a = bands[base + 2 * i];
                const double b = bands[base + 2 * i + 1];
                next[base + i] = (a + b) * inv_sqrt2;
                next[base + half + i] = (a - b) * inv_sqrt2;
            }
        }
        bands = std::move(next);
        band_len = half;
    }
    return bands;
}

} // namespace ralab
