#include "ralab/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ralab/errors.hpp"
#include "ralab/mht.hpp"

namespace ralab {

namespace {

constexpr double kSigmoidClamp = 1e-7;

double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

double soft_threshold(double s, double t) {
    return sign_of(s) * std::max(std::abs(s) - t, 0.0);
}

double sigmoid(double p) { return 1.0 / (1.0 + std::exp(-p)); }

double kl_bernoulli(double kappa, double q) {
    return kappa * std::log(kappa / q) + (1.0 - kappa) * std::log((1.0 - kappa) / (1.0 - q));
}

// The transform pair and trainability mask for one layer variant.
struct LayerOperator {
    Matrix8 analysis;
    Matrix8 synthesis;
    bool train_u = true;
    bool train_thresholds = true;
    bool penalty = true;
};

LayerOperator layer_operator(LayerVariant variant) {
    LayerOperator op;
    if (variant == LayerVariant::standard_hadamard) {
        // Structural parity with the modified pair: the +-1 matrix applied
        // unnormalized (multiplier-free forward) and its exact dyadic inverse
        // H/8, so the identity configuration stays bit-exact.
        const Matrix8 h = hadamard_matrix(kBlockSize).entries;
        op.analysis = h;
        op.synthesis = h / double(kBlockSize);
    } else {
        op.analysis = mht_matrix_8().entries;
        op.synthesis = imht_matrix_8().entries;
    }
    switch (variant) {
        case LayerVariant::no_penalty: op.penalty = false; break;
        case LayerVariant::no_scaling: op.train_u = false; break;
        case LayerVariant::no_threshold:
            op.train_thresholds = false;
            op.penalty = false;
            break;
        default: break;
    }
    return op;
}

struct CoreForward {
    Vector8 coeffs;   // c = A b
    Vector8 scaled;   // s = c o u
    Vector8 latent;   // p = softthresh(s, T)
    Vector8 denoised; // b + S (p - c)
};

CoreForward core_forward(const LayerOperator& op, const BmhtParams& params, const Vector8& block) {
    CoreForward f;
    f.coeffs = op.analysis * block;
    f.scaled = f.coeffs.cwiseProduct(params.u);
    for (int j = 0; j < kBlockSize; ++j) f.latent[j] = soft_threshold(f.scaled[j], params.thresholds[j]);
    // Residual form: identical to S p in exact arithmetic, but bit-exact
    // whenever the layer leaves the coefficients untouched.
    f.denoised = block + op.synthesis * (f.latent - f.coeffs);
    return f;
}

double core_loss(const LayerOperator& op, const BmhtParams& params, const Vector8& noisy,
                 const Vector8& clean, double kappa, double rho) {
    const CoreForward f = core_forward(op, params, noisy);
    double value = (f.denoised - clean).squaredNorm() / kBlockSize;
    if (rho != 0.0)
        for (int j = 0; j < kBlockSize; ++j)
            value += rho * kl_bernoulli(kappa, std::clamp(sigmoid(f.latent[j]), kSigmoidClamp,
                                                          1.0 - kSigmoidClamp));
    return value;
}

struct CoreGradients {
    Vector8 u = Vector8::Zero();
    Vector8 thresholds = Vector8::Zero();
    double loss = 0.0;
};

CoreGradients core_gradients(const LayerOperator& op, const BmhtParams& params,
                             const Vector8& noisy, const Vector8& clean, double kappa,
                             double rho) {
    const CoreForward f = core_forward(op, params, noisy);
    const Vector8 residual = f.denoised - clean;

    CoreGradients g;
    g.loss = residual.squaredNorm() / kBlockSize;
    Vector8 dloss_dp = (2.0 / kBlockSize) * (op.synthesis.transpose() * residual);
    if (rho != 0.0) {
        for (int j = 0; j < kBlockSize; ++j) {
            const double sig = sigmoid(f.latent[j]);
            const double q = std::clamp(sig, kSigmoidClamp, 1.0 - kSigmoidClamp);
            g.loss += rho * kl_bernoulli(kappa, q);
            dloss_dp[j] += rho * (-kappa / q + (1.0 - kappa) / (1.0 - q)) * sig * (1.0 - sig);
        }
    }
    for (int j = 0; j < kBlockSize; ++j) {
        // Subgradient 0 both at the shrinkage kink |s| = T and at s = 0.
        const bool active = std::abs(f.scaled[j]) > params.thresholds[j] && f.scaled[j] != 0.0;
        if (!active) continue;
        g.u[j] = dloss_dp[j] * f.coeffs[j];
        g.thresholds[j] = -dloss_dp[j] * sign_of(f.scaled[j]);
    }
    return g;
}

void check_kappa_rho(double kappa, double rho) {
    if (kappa <= 0.0 || kappa >= 1.0) throw config_error("denoiser: kappa must lie in (0, 1)");
    if (rho < 0.0) throw config_error("denoiser: rho must be >= 0");
}

Vector8 row_block(const RealMatrix& rows, int row, int block, int width) {
    Vector8 b = Vector8::Zero();
    const int base = block * kBlockSize;
    for (int j = 0; j < kBlockSize && base + j < width; ++j) b[j] = rows(row, base + j);
    return b;
}

} // namespace

BlockView preprocess(const ComplexVector& y) {
    if (y.size() < 1) throw shape_error("preprocess: empty observation");
    const int l = static_cast<int>(y.size());
    const int length = 2 * l;
    const int blocks = (length + kBlockSize - 1) / kBlockSize;
    BlockView view;
    view.original_length = length;
    view.blocks.setZero(kBlockSize, blocks);
    for (int i = 0; i < l; ++i) {
        view.blocks(i % kBlockSize, i / kBlockSize) = y[i].real();
        const int j = l + i;
        view.blocks(j % kBlockSize, j / kBlockSize) = y[i].imag();
    }
    return view;
}

ComplexVector postprocess(const BlockView& view) {
    const int length = view.original_length;
    if (length < 2 || length % 2 != 0)
        throw shape_error("postprocess: original_length must be a positive even number");
    const int blocks = static_cast<int>(view.blocks.cols());
    if (blocks * kBlockSize < length)
        throw shape_error("postprocess: view holds " + std::to_string(blocks) +
                          " blocks, too few for length " + std::to_string(length));
    const int l = length / 2;
    ComplexVector y(l);
    for (int i = 0; i < l; ++i) {
        const double re = view.blocks(i % kBlockSize, i / kBlockSize);
        const int j = l + i;
        const double im = view.blocks(j % kBlockSize, j / kBlockSize);
        y[i] = Complex(re, im);
    }
    return y;
}

BlockForward forward(const BmhtParams& params, const Vector8& block) {
    const CoreForward f = core_forward(layer_operator(LayerVariant::full), params, block);
    return {f.denoised, f.latent};
}

double loss(const BmhtParams& params, const Vector8& noisy, const Vector8& clean, double kappa,
            double rho) {
    check_kappa_rho(kappa, rho);
    return core_loss(layer_operator(LayerVariant::full), params, noisy, clean, kappa, rho);
}

BlockGradients gradients(const BmhtParams& params, const Vector8& noisy, const Vector8& clean,
                         double kappa, double rho) {
    check_kappa_rho(kappa, rho);
    const CoreGradients g =
        core_gradients(layer_operator(LayerVariant::full), params, noisy, clean, kappa, rho);
    return {g.u, g.thresholds};
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw config_error("TrainConfig: learning_rate must be positive");
    if (batch_size < 1) throw config_error("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw config_error("TrainConfig: epochs must be >= 1");
    check_kappa_rho(kappa, rho);
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw config_error("TrainConfig: moment decays must lie in [0, 1)");
    if (adam_eps <= 0.0) throw config_error("TrainConfig: adam_eps must be positive");
    if (weight_decay < 0.0) throw config_error("TrainConfig: weight_decay must be >= 0");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw config_error("TrainConfig: val_fraction must lie in [0, 1)");
}

TrainResult train(const DenoiseDataset& dataset, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (dataset.count() < 2) throw config_error("train: need at least two sample pairs");
    const LayerOperator op = layer_operator(cfg.variant);
    const double rho_eff = op.penalty ? cfg.rho : 0.0;
    const int width = static_cast<int>(dataset.noisy.cols());
    const int blocks = (width + kBlockSize - 1) / kBlockSize;

    // Seeded split: shuffle once, hold out the tail for validation.
    std::vector<int> order(dataset.count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    int val_count = static_cast<int>(std::lround(cfg.val_fraction * dataset.count()));
    val_count = std::min(val_count, dataset.count() - 1);
    const std::vector<int> val_rows(order.end() - val_count, order.end());
    std::vector<int> train_rows(order.begin(), order.end() - val_count);

    BmhtParams params;
    BmhtParams m_moment, v_moment; // Adam moments, same shapes as the parameters
    m_moment.u.setZero();
    m_moment.thresholds.setZero();
    v_moment.u.setZero();
    v_moment.thresholds.setZero();
    long step = 0;

    const auto evaluate = [&](const std::vector<int>& rows, const BmhtParams& p, double& out_loss,
                              double& out_rms) {
        double loss_sum = 0.0;
        long block_count = 0;
        double err_sq = 0.0;
        for (const int row : rows) {
            for (int blk = 0; blk < blocks; ++blk) {
                const Vector8 noisy = row_block(dataset.noisy, row, blk, width);
                const Vector8 clean = row_block(dataset.clean, row, blk, width);
                const CoreForward f = core_forward(op, p, noisy);
                loss_sum += core_loss(op, p, noisy, clean, cfg.kappa, rho_eff);
                const int base = blk * kBlockSize;
                for (int j = 0; j < kBlockSize && base + j < width; ++j) {
                    const double d = f.denoised[j] - clean[j];
                    err_sq += d * d;
                }
                ++block_count;
            }
        }
        out_loss = block_count > 0 ? loss_sum / block_count : 0.0;
        const long scalars = static_cast<long>(rows.size()) * width;
        out_rms = scalars > 0 ? std::sqrt(err_sq / scalars) * 100.0 : 0.0;
    };

    TrainResult result;
    result.params = params;
    double best_rms = std::numeric_limits<double>::infinity();
    {
        double init_loss = 0.0, init_rms = 0.0;
        if (!val_rows.empty()) evaluate(val_rows, params, init_loss, init_rms);
        best_rms = init_rms;
    }

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), rng);
        double epoch_loss = 0.0;
        long epoch_blocks = 0;
        for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train_rows.size(), start + cfg.batch_size);
            Vector8 gu = Vector8::Zero();
            Vector8 gt = Vector8::Zero();
            long batch_blocks = 0;
            for (std::size_t i = start; i < stop; ++i) {
                for (int blk = 0; blk < blocks; ++blk) {
                    const Vector8 noisy = row_block(dataset.noisy, train_rows[i], blk, width);
                    const Vector8 clean = row_block(dataset.clean, train_rows[i], blk, width);
                    const CoreGradients g = core_gradients(op, params, noisy, clean, cfg.kappa,
                                                           rho_eff);
                    gu += g.u;
                    gt += g.thresholds;
                    epoch_loss += g.loss;
                    ++batch_blocks;
                }
            }
            epoch_blocks += batch_blocks;
            gu /= batch_blocks;
            gt /= batch_blocks;

            // Decoupled AdamW step on whichever parameters this variant trains.
            ++step;
            const double corr1 = 1.0 - std::pow(cfg.beta1, double(step));
            const double corr2 = 1.0 - std::pow(cfg.beta2, double(step));
            const auto update = [&](Vector8& theta, Vector8& m, Vector8& v, const Vector8& grad) {
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
                const Vector8 m_hat = m / corr1;
                const Vector8 v_hat = v / corr2;
                theta -= cfg.learning_rate *
                         (m_hat.cwiseQuotient(v_hat.cwiseSqrt() +
                                              Vector8::Constant(cfg.adam_eps)) +
                          cfg.weight_decay * theta);
            };
            if (op.train_u) update(params.u, m_moment.u, v_moment.u, gu);
            if (op.train_thresholds)
                update(params.thresholds, m_moment.thresholds, v_moment.thresholds, gt);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_blocks > 0 ? epoch_loss / epoch_blocks : 0.0;
        if (!val_rows.empty()) {
            evaluate(val_rows, params, stats.val_loss, stats.val_rms);
            if (stats.val_rms < best_rms) {
                best_rms = stats.val_rms;
                result.params = params;
            }
        } else {
            result.params = params;
        }
        result.curve.push_back(stats);
    }
    if (val_rows.empty()) result.params = params;
    return result;
}

RealMatrix denoise_rows(const BmhtParams& params, LayerVariant variant, const RealMatrix& rows) {
    const LayerOperator op = layer_operator(variant);
    const int width = static_cast<int>(rows.cols());
    const int blocks = (width + kBlockSize - 1) / kBlockSize;
    RealMatrix out(rows.rows(), width);
    for (int row = 0; row < rows.rows(); ++row) {
        for (int blk = 0; blk < blocks; ++blk) {
            const Vector8 denoised =
                core_forward(op, params, row_block(rows, row, blk, width)).denoised;
            const int base = blk * kBlockSize;
            for (int j = 0; j < kBlockSize && base + j < width; ++j) out(row, base + j) = denoised[j];
        }
    }
    return out;
}

ReceivedFrame denoise_frame(const BmhtParams& params, const ReceivedFrame& frame) {
    ReceivedFrame out = frame;
    for (int t = 0; t < frame.antennas(); ++t) {
        BlockView view = preprocess(frame.y.col(t));
        for (Eigen::Index blk = 0; blk < view.blocks.cols(); ++blk)
            view.blocks.col(blk) = forward(params, view.blocks.col(blk)).denoised;
        out.y.col(t) = postprocess(view);
    }
    return out;
}

void save_params(const BmhtParams& params, const std::string& path) {
    nlohmann::json doc;
    doc["u"] = std::vector<double>(params.u.data(), params.u.data() + kBlockSize);
    doc["thresholds"] =
        std::vector<double>(params.thresholds.data(), params.thresholds.data() + kBlockSize);
    doc["s"] = kBlockSize;
    doc["format_version"] = 1;
    std::ofstream out(path);
    if (!out) throw persistence_error("save_params: cannot open " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw persistence_error("save_params: write failed for " + path);
}

BmhtParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw persistence_error("load_params: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("load_params: bad JSON in " + path + ": " + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw data_error("load_params: unsupported format_version in " + path);
        if (doc.at("s").get<int>() != kBlockSize)
            throw data_error("load_params: unsupported block size in " + path);
        const auto u = doc.at("u").get<std::vector<double>>();
        const auto t = doc.at("thresholds").get<std::vector<double>>();
        if (u.size() != kBlockSize || t.size() != kBlockSize)
            throw data_error("load_params: parameter arrays in " + path + " must have length 8");
        BmhtParams params;
        for (int j = 0; j < kBlockSize; ++j) {
            params.u[j] = u[j];
            params.thresholds[j] = t[j];
        }
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("load_params: missing fields in " + path + ": " + e.what());
    }
}

ComplexityReport layer_complexity(LayerVariant variant, int l) {
    if (l < 1) throw config_error("layer_complexity: l must be >= 1");
    const long blocks = (2L * l + kBlockSize - 1) / kBlockSize;
    const long inverse_dense = kBlockSize * kBlockSize; // 64
    const long scaling = kBlockSize;                    // 8
    ComplexityReport report;
    report.convention =
        "forward transform entries in {0,+-1,+-2} are adds/shifts (0 MACs); scaling 8 MACs/block; "
        "soft-threshold sign-bit ops (0 MACs); inverse transform dense 8x8 (64 MACs/block); "
        "blocks = ceil(2L/8)";
    const bool has_scaling = variant != LayerVariant::no_scaling;
    report.n_params = (has_scaling ? kBlockSize : 0) +
                      (variant != LayerVariant::no_threshold ? kBlockSize : 0);
    report.macs = blocks * (inverse_dense + (has_scaling ? scaling : 0));
    report.macs_dense = blocks * (2 * inverse_dense + (has_scaling ? scaling : 0));
    return report;
}

ComplexityReport count_params_and_macs(const BmhtParams& params, int l) {
    (void)params; // structure-dependent, not value-dependent
    return layer_complexity(LayerVariant::full, l);
}

} // namespace ralab
