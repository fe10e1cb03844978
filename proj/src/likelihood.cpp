#include "ralab/likelihood.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "ralab/errors.hpp"

namespace ralab {

namespace {

void check_shapes(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                  const char* who, double beta) {
    if (beta <= 0.0) throw config_error(std::string(who) + ": beta must be positive");
    if (frame.samples() != pool.samples())
        throw shape_error(std::string(who) + ": frame has " + std::to_string(frame.samples()) +
                          " samples, pool has " + std::to_string(pool.samples()));
    if (x.size() != pool.preambles())
        throw shape_error(std::string(who) + ": x has " + std::to_string(x.size()) +
                          " entries for a pool of " + std::to_string(pool.preambles()));
    if (frame.antennas() < 1) throw shape_error(std::string(who) + ": frame has no antennas");
}

// Hermitian Cholesky with the documented recovery: one jitter of
// 1e-9 tr(C)/L on the diagonal, then numerical_error.
Eigen::LLT<ComplexMatrix> factorize(ComplexMatrix cov, const char* who) {
    Eigen::LLT<ComplexMatrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-9 * cov.trace().real() / static_cast<double>(cov.rows());
    cov += jitter * ComplexMatrix::Identity(cov.rows(), cov.cols());
    llt.compute(cov);
    if (llt.info() == Eigen::Success) return llt;
    throw numerical_error(std::string(who) +
                          ": covariance factorization failed even after jitter " +
                          std::to_string(jitter));
}

double half_log_det(const Eigen::LLT<ComplexMatrix>& llt) {
    return llt.matrixLLT().diagonal().real().array().log().sum();
}

ComplexMatrix covariance_of(const PreamblePool& pool, const RealVector& x_eval, double beta,
                            double noise_power) {
    ComplexMatrix cov = beta * beta * (pool.z * x_eval.asDiagonal() * pool.z.adjoint());
    if (noise_power != 0.0)
        cov += noise_power * ComplexMatrix::Identity(pool.samples(), pool.samples());
    return cov;
}

double gaussian_log_likelihood(const ReceivedFrame& frame, const Eigen::LLT<ComplexMatrix>& llt,
                               const char* who) {
    const ComplexMatrix solved = llt.solve(frame.y);
    double quad = 0.0;
    for (int t = 0; t < frame.antennas(); ++t) {
        const Complex q = frame.y.col(t).dot(solved.col(t)); // y^H phi^-1 y
        if (std::abs(q.imag()) > 1e-8 * std::max(1.0, std::abs(q.real())))
            throw numerical_error(std::string(who) + ": quadratic form has imaginary residue " +
                                  std::to_string(q.imag()));
        quad += q.real();
    }
    const double log_det = 2.0 * half_log_det(llt);
    return -quad - frame.antennas() * log_det;
}

RealVector gaussian_score(const ReceivedFrame& frame, const PreamblePool& pool,
                          const Eigen::LLT<ComplexMatrix>& llt, double beta) {
    const ComplexMatrix solved_y = llt.solve(frame.y);         // L x T
    const ComplexMatrix projected = pool.z.adjoint() * solved_y; // K x T, rows z_k^H phi^-1 y_t
    const ComplexMatrix solved_z = llt.solve(pool.z);          // L x K
    const RealVector trace_terms =
        (pool.z.conjugate().cwiseProduct(solved_z)).colwise().sum().real().transpose();
    const RealVector data_terms = projected.rowwise().squaredNorm();
    return beta * beta * (data_terms - frame.antennas() * trace_terms);
}

} // namespace

double log_likelihood(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                      double beta, double noise_power) {
    check_shapes(frame, pool, x, "log_likelihood", beta);
    if (noise_power <= 0.0)
        throw config_error("log_likelihood: noise power must be positive (use the blind form "
                           "for the noise-free covariance)");
    const auto llt = factorize(covariance_of(pool, x.cwiseMax(0.0), beta, noise_power),
                               "log_likelihood");
    return gaussian_log_likelihood(frame, llt, "log_likelihood");
}

RealVector score(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                 double beta, double noise_power) {
    check_shapes(frame, pool, x, "score", beta);
    if (noise_power <= 0.0) throw config_error("score: noise power must be positive");
    const auto llt = factorize(covariance_of(pool, x.cwiseMax(0.0), beta, noise_power), "score");
    return gaussian_score(frame, pool, llt, beta);
}

double blind_log_likelihood(const ReceivedFrame& frame, const PreamblePool& pool,
                            const RealVector& x, double beta, double x_min) {
    check_shapes(frame, pool, x, "blind_log_likelihood", beta);
    if (x_min <= 0.0) throw config_error("blind_log_likelihood: x_min must be positive");
    const auto llt =
        factorize(covariance_of(pool, x.cwiseMax(x_min), beta, 0.0), "blind_log_likelihood");
    return gaussian_log_likelihood(frame, llt, "blind_log_likelihood");
}

RealVector score_blind(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                       double beta, double x_min) {
    check_shapes(frame, pool, x, "score_blind", beta);
    if (x_min <= 0.0) throw config_error("score_blind: x_min must be positive");
    const auto llt = factorize(covariance_of(pool, x.cwiseMax(x_min), beta, 0.0), "score_blind");
    return gaussian_score(frame, pool, llt, beta);
}

} // namespace ralab
