#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selret/errors.hpp"

namespace selret::riskctl {

// P(Bin(n, b) <= k), evaluated with a log-space term recurrence so n up
// to 1e5 stays stable.
double binomial_cdf(std::size_t k, std::size_t n, double b);

// Exact one-sided upper confidence bound on a Bernoulli parameter: the b
// solving P(Bin(n, b) <= k) = delta_prime, found by bisection (absolute
// tolerance well below 1e-10). Returns 1 for k = n.
double clopper_pearson_upper(std::size_t k, std::size_t n, double delta_prime);

struct SgrResult {
    double tau_star = 0.0;
    double bound_b_star = 1.0;
    double target_risk = 0.0;
    double delta = 0.0;
    double coverage_cal = 0.0;
    double empirical_risk_cal = 0.0;
    std::size_t iterations = 0;  // probe budget ceil(log2 n)
    bool feasible = false;
};

// Threshold selection with a guaranteed selective-risk bound: binary
// search over the sorted calibration scores, at most ceil(log2 n) probes,
// each probe bounded by clopper_pearson_upper at significance delta /
// ceil(log2 n). Returns the examined feasible threshold of maximum
// coverage; an infeasible search is returned as a flagged result with
// coverage 0, not an error. Losses must be exactly 0 or 1.
SgrResult sgr_select(std::span<const double> kappa_cal,
                     std::span<const double> losses_cal, double target_risk,
                     double delta);

// Deterministic 50/50 partition of [0, n) given a seed; the first half
// (the larger one for odd n) is the calibration side.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> calibration_split(
    std::size_t n, std::uint64_t seed);

std::pair<std::vector<std::string>, std::vector<std::string>> calibration_split(
    const std::vector<std::string>& ids, std::uint64_t seed);

}  // namespace selret::riskctl
