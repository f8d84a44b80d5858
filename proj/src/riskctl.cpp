#include "selret/riskctl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "selret/rng.hpp"

namespace selret::riskctl {

double binomial_cdf(std::size_t k, std::size_t n, double b) {
    if (n < 1) throw DomainError("binomial_cdf: n must be >= 1");
    if (k > n) throw DomainError("binomial_cdf: k > n");
    if (b <= 0.0) return 1.0;
    if (b >= 1.0) return k == n ? 1.0 : 0.0;
    if (k == n) return 1.0;

    // Streaming logsumexp over log C(n,j) + j log b + (n-j) log(1-b).
    const double log_b = std::log(b);
    const double log_1mb = std::log1p(-b);
    double log_term = static_cast<double>(n) * log_1mb;  // j = 0
    double max_log = log_term;
    double scaled_sum = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        log_term += std::log(static_cast<double>(n - j) / static_cast<double>(j + 1)) +
                    log_b - log_1mb;
        if (log_term <= max_log) {
            scaled_sum += std::exp(log_term - max_log);
        } else {
            scaled_sum = scaled_sum * std::exp(max_log - log_term) + 1.0;
            max_log = log_term;
        }
    }
    const double cdf = std::exp(max_log) * scaled_sum;
    return std::min(cdf, 1.0);
}

double clopper_pearson_upper(std::size_t k, std::size_t n, double delta_prime) {
    if (n < 1) throw DomainError("clopper_pearson_upper: n must be >= 1");
    if (k > n) throw DomainError("clopper_pearson_upper: k > n");
    if (!(delta_prime > 0.0 && delta_prime < 1.0))
        throw DomainError("clopper_pearson_upper: delta' must lie in (0, 1)");
    if (k == n) return 1.0;  // the tail sum is identically 1

    double lo = 0.0, hi = 1.0;
    // The tail is decreasing in b. Bisect to machine precision: near b = 1
    // the tail slope approaches n, so a coarser stop would leak into the
    // 1e-9 residual contract for k close to n.
    for (int iteration = 0; iteration < 100 && hi - lo > 1e-15; ++iteration) {
        const double mid = 0.5 * (lo + hi);
        if (binomial_cdf(k, n, mid) > delta_prime)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

std::size_t ceil_log2(std::size_t n) {
    if (n <= 1) return 0;
    return static_cast<std::size_t>(std::bit_width(n - 1));
}

}  // namespace

SgrResult sgr_select(std::span<const double> kappa_cal,
                     std::span<const double> losses_cal, double target_risk,
                     double delta) {
    const std::size_t n = kappa_cal.size();
    if (n < 1) throw DomainError("sgr_select: empty calibration set");
    if (losses_cal.size() != n)
        throw DomainError("sgr_select: kappa/loss size mismatch");
    if (!(target_risk > 0.0))
        throw DomainError("sgr_select: target risk must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError("sgr_select: delta must lie in (0, 1)");
    for (double l : losses_cal)
        if (l != 0.0 && l != 1.0)
            throw DomainError("sgr_select: losses must be exactly 0 or 1");

    // Ascending kappa with index tie-break for a reproducible ordering.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return kappa_cal[a] < kappa_cal[b];
    });
    std::vector<double> sorted_kappa(n);
    std::vector<double> sorted_loss(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_kappa[i] = kappa_cal[order[i]];
        sorted_loss[i] = losses_cal[order[i]];
    }
    // suffix_errors[i] = errors among positions [i, n).
    std::vector<std::size_t> suffix_errors(n + 1, 0);
    for (std::size_t i = n; i-- > 0;)
        suffix_errors[i] = suffix_errors[i + 1] + (sorted_loss[i] == 1.0 ? 1 : 0);
    // run_start[i] = first position of the equal-kappa run containing i;
    // acceptance at tau = kappa_(i) takes the whole run (>= comparison).
    std::vector<std::size_t> run_start(n);
    for (std::size_t i = 0; i < n; ++i)
        run_start[i] =
            (i > 0 && sorted_kappa[i] == sorted_kappa[i - 1]) ? run_start[i - 1] : i;

    const std::size_t budget = std::max<std::size_t>(1, ceil_log2(n));
    const double delta_adjusted = delta / static_cast<double>(budget);

    SgrResult best;
    best.target_risk = target_risk;
    best.delta = delta;
    best.iterations = budget;
    best.tau_star = std::numeric_limits<double>::infinity();
    best.bound_b_star = 1.0;

    std::size_t lo = 0, hi = n - 1, probes = 0;
    std::size_t best_accepted = 0;
    while (lo <= hi && probes < budget) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const std::size_t start = run_start[mid];
        const std::size_t accepted = n - start;
        const std::size_t errors = suffix_errors[start];
        const double bound = accepted == 0
                                 ? 1.0
                                 : clopper_pearson_upper(errors, accepted, delta_adjusted);
        ++probes;
        if (bound < target_risk) {
            if (!best.feasible || accepted > best_accepted) {
                best.feasible = true;
                best_accepted = accepted;
                best.tau_star = sorted_kappa[mid];
                best.bound_b_star = bound;
                best.coverage_cal =
                    static_cast<double>(accepted) / static_cast<double>(n);
                best.empirical_risk_cal =
                    static_cast<double>(errors) / static_cast<double>(accepted);
            }
            if (mid == 0) break;  // already at full coverage
            hi = mid - 1;
        } else {
            lo = mid + 1;
            if (lo > hi) break;
        }
    }
    return best;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> calibration_split(
    std::size_t n, std::uint64_t seed) {
    if (n < 2) throw DomainError("calibration_split: need at least 2 instances");
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    Rng rng(Rng::derive_seed(seed, /*stream=*/71));
    deterministic_shuffle(indices, rng);
    const std::size_t cal_size = (n + 1) / 2;
    std::vector<std::size_t> cal(indices.begin(),
                                 indices.begin() + static_cast<std::ptrdiff_t>(cal_size));
    std::vector<std::size_t> eval(indices.begin() + static_cast<std::ptrdiff_t>(cal_size),
                                  indices.end());
    return {std::move(cal), std::move(eval)};
}

std::pair<std::vector<std::string>, std::vector<std::string>> calibration_split(
    const std::vector<std::string>& ids, std::uint64_t seed) {
    auto [cal_idx, eval_idx] = calibration_split(ids.size(), seed);
    std::vector<std::string> cal, eval;
    cal.reserve(cal_idx.size());
    eval.reserve(eval_idx.size());
    for (std::size_t i : cal_idx) cal.push_back(ids[i]);
    for (std::size_t i : eval_idx) eval.push_back(ids[i]);
    return {std::move(cal), std::move(eval)};
}

}  // namespace selret::riskctl
