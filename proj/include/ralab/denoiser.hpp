#pragma once

#include <string>
#include <vector>

#include "ralab/rng.hpp"
#include "ralab/types.hpp"

namespace ralab {

inline constexpr int kBlockSize = 8;

// Trainable layer parameters: one multiplicative scale and one soft-threshold
// per transform coefficient, shared across all blocks of a signal.  The
// identity configuration (u = 1, thresholds = 0) passes blocks through
// bit-exactly.
struct BmhtParams {
    Vector8 u = Vector8::Ones();
    Vector8 thresholds = Vector8::Zero();
};

// Layer variants used by the ablation studies.  All share the block pipeline;
// they differ in which parameters train, whether the sparsity penalty is on,
// and which transform pair is used.
//   full              - scaling + thresholding + penalty on the modified pair
//   no_penalty        - full pipeline, penalty weight forced to zero
//   no_scaling        - u frozen at 1 (thresholds only)
//   no_threshold      - thresholds frozen at 0 and penalty off (scaling only)
//   standard_hadamard - orthonormal order-8 Hadamard pair instead of the
//                       modified pair, everything else as in full
enum class LayerVariant { full, no_penalty, no_scaling, no_threshold, standard_hadamard };

// A real signal cut into length-8 blocks (one per column), zero-padded at the
// tail; original_length remembers the unpadded size.
struct BlockView {
    Eigen::Matrix<double, kBlockSize, Eigen::Dynamic> blocks;
    int original_length = 0;
};

// Complex antenna observation of length L -> 2L reals (real parts then
// imaginary parts), padded to a multiple of 8 and cut into blocks.
BlockView preprocess(const ComplexVector& y);

// Inverse of preprocess: strip the padding and recombine into L complex
// samples.  Exact inverse whenever the blocks are untouched.
ComplexVector postprocess(const BlockView& view);

struct BlockForward {
    Vector8 denoised;
    Vector8 latent; // thresholded coefficients p
};

// One block through the layer: p = softthresh((Q8 b) o u, thresholds),
// denoised = Q8^-1 p.  Computed in residual form b + Q8^-1 (p - Q8 b) so the
// identity configuration returns the input bit-exactly.
BlockForward forward(const BmhtParams& params, const Vector8& block);

// Training objective for one block: mean squared reconstruction error plus
// rho * sum_j KL(kappa || sigmoid(p_j)), with the sigmoid clamped away from
// {0, 1} before the logs.
double loss(const BmhtParams& params, const Vector8& noisy, const Vector8& clean, double kappa,
            double rho);

struct BlockGradients {
    Vector8 u;
    Vector8 thresholds;
};

// Analytic gradient of loss() with respect to u and thresholds.  At the
// soft-threshold kinks (|scaled coefficient| = threshold) and at sign(0) the
// subgradient 0 is used.
BlockGradients gradients(const BmhtParams& params, const Vector8& noisy, const Vector8& clean,
                         double kappa, double rho);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int epochs = 200;
    double kappa = 1e-3;
    double rho = 0.5;
    double beta1 = 0.9;         // first-moment decay
    double beta2 = 0.999;       // second-moment decay
    double adam_eps = 1e-8;
    double weight_decay = 0.01; // decoupled
    double val_fraction = 0.1;
    LayerVariant variant = LayerVariant::full;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_rms = 0.0; // percent, over the held-out pairs
};

struct TrainResult {
    BmhtParams params;
    std::vector<EpochStats> curve;
};

// Mini-batch AdamW on the per-block objective.  A seeded shuffle holds out
// val_fraction of the pairs, every epoch reshuffles the training portion, and
// the returned parameters are the best-validation-RMS checkpoint.
TrainResult train(const DenoiseDataset& dataset, const TrainConfig& cfg, Rng& rng);

// Apply the layer to each row of a [count x 2L] signal matrix.
RealMatrix denoise_rows(const BmhtParams& params, LayerVariant variant, const RealMatrix& rows);

// Apply the layer to every antenna column of a frame; truth and metadata are
// preserved, only y is replaced.
ReceivedFrame denoise_frame(const BmhtParams& params, const ReceivedFrame& frame);

// JSON persistence: {"u": [8], "thresholds": [8], "s": 8, "format_version": 1}.
void save_params(const BmhtParams& params, const std::string& path);
BmhtParams load_params(const std::string& path);

struct ComplexityReport {
    int n_params = 0;
    long macs = 0;       // documented convention (see `convention`)
    long macs_dense = 0; // naive dense count of the same pipeline
    std::string convention;
};

// Multiply-accumulate accounting for a length-L complex observation.
// Convention: the forward transform's {0, +-1, +-2} entries are adds/shifts
// (0 MACs), scaling is 8 MACs per block, soft-thresholding is sign-bit work
// (0 MACs), and the inverse transform is a dense 8x8 product (64 MACs per
// block); blocks = ceil(2L/8).
ComplexityReport layer_complexity(LayerVariant variant, int l);
ComplexityReport count_params_and_macs(const BmhtParams& params, int l = 10);

} // namespace ralab
