#include "ralab/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ralab/errors.hpp"

namespace ralab {

namespace {

void check_same_size(Eigen::Index a, Eigen::Index b, const char* who) {
    if (a != b)
        throw shape_error(std::string(who) + ": operand lengths differ (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
    if (a == 0) throw shape_error(std::string(who) + ": empty operands");
}

} // namespace

double rms(const RealVector& clean, const RealVector& denoised) {
    check_same_size(clean.size(), denoised.size(), "rms");
    return std::sqrt((clean - denoised).squaredNorm() / static_cast<double>(clean.size())) * 100.0;
}

double prd(const RealVector& clean, const RealVector& denoised) {
    check_same_size(clean.size(), denoised.size(), "prd");
    const double energy = clean.squaredNorm();
    if (energy == 0.0) throw std::domain_error("prd: clean signal has zero power");
    return std::sqrt((clean - denoised).squaredNorm() / energy) * 100.0;
}

double mse(const IntVector& truth, const IntVector& estimate) {
    check_same_size(truth.size(), estimate.size(), "mse");
    return (truth - estimate).cast<double>().squaredNorm() / static_cast<double>(truth.size());
}

double p_ade(const IntVector& truth, const IntVector& estimate) {
    check_same_size(truth.size(), estimate.size(), "p_ade");
    int wrong = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i)
        if (truth[i] != estimate[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

int throughput(const IntVector& truth, const IntVector& estimate) {
    check_same_size(truth.size(), estimate.size(), "throughput");
    int served = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i)
        if (truth[i] == 1 && estimate[i] == 1) ++served;
    return served;
}

} // namespace ralab
