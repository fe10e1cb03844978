#pragma once

#include "ralab/types.hpp"

namespace ralab {

// Default evaluation floor for the noise-free covariance: particle entries
// below this are lifted before forming diag(x) so the factorization stays
// positive definite even when components sit at (or round to) zero.
inline constexpr double kDefaultParticleFloor = 1e-3;

// Log-likelihood of the frame under y_t ~ CN(0, phi(x)) with
// phi(x) = beta^2 Z diag(x) Z^H + delta I (additive constant dropped):
//   sum_t [ -y_t^H phi(x)^-1 y_t - ln det phi(x) ].
// Negative entries of x evaluate as 0.  The factorization is a Hermitian
// Cholesky; on failure one jitter of 1e-9 tr(phi)/L is added before giving up.
double log_likelihood(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                      double beta, double noise_power);

// Gradient of log_likelihood with respect to x, component k:
//   beta^2 sum_t |z_k^H phi^-1 y_t|^2 - T beta^2 z_k^H phi^-1 z_k.
RealVector score(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                 double beta, double noise_power);

// Noise-blind counterparts: the delta I term is dropped, so the covariance is
// eps(x) = beta^2 Z diag(x) Z^H and entries of x are floored at x_min before
// evaluation.  Intended for frames that already passed the denoising layer.
double blind_log_likelihood(const ReceivedFrame& frame, const PreamblePool& pool,
                            const RealVector& x, double beta,
                            double x_min = kDefaultParticleFloor);

RealVector score_blind(const ReceivedFrame& frame, const PreamblePool& pool, const RealVector& x,
                       double beta, double x_min = kDefaultParticleFloor);

} // namespace ralab
