#pragma once

#include <cstdint>

#include "tpayield/schema.hpp"

namespace tpayield {

/// Noise-free yield for one record under the fixed synthetic ground truth:
/// each continuous feature is min-max normalized to u in [0,1] by its schema
/// range (missing pressure counts as 1 atm), categorical labels contribute
/// fixed offsets, and
///   z = -2.6 + 3.0*u_temp + 1.6*u_time + 1.2*u_conc + 0.8*u_temp*u_conc
///       + 0.5*u_pressure - 0.7*u_amount + 0.4*u_solution + offsets
///   yield = 100 / (1 + exp(-z))
/// The surface is monotone increasing in temperature, time, and catalyst
/// concentration.
double synth_ground_truth(const Record& record);

/// Deterministic synthetic dataset: features drawn uniformly within the
/// schema ranges (categoricals uniform over their vocabularies), yield =
/// ground truth + N(0, noise_sd^2), clamped to [0,100]. Record i uses its own
/// sub-stream derived from (seed, i), so a record's content depends only on
/// (seed, i, noise_sd) and not on n.
Dataset synth_generate(long n, std::uint64_t seed, double noise_sd);

}  // namespace tpayield
