#pragma once

#include <cstdint>
#include <vector>

#include "iuq/stats.hpp"
#include "iuq/types.hpp"

namespace iuq {

/// For each design, draw theta_true from the truth spec, evaluate the model
/// at the transformed parameter values, and add zero-mean Gaussian noise with
/// the given per-QoI standard deviations. Records carry
/// noise_var = noise_sd^2. Fully reproducible from the seed.
std::vector<ExperimentRecord> generate_synthetic_experiments(
    const ModelSpec& model, const GaussianParamSpec& truth,
    const std::vector<DesignPoint>& designs, const Eigen::VectorXd& noise_sd,
    std::uint64_t seed);

}  // namespace iuq
