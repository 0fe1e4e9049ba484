#pragma once

// Convergence-rate studies: Monte Carlo field errors and deterministic
// covariance errors across mesh levels, with least-squares rate fits and the
// auxiliary validation checks (eigenpair convergence, sinc decay, spectral
// truncation).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wmfield/errors.hpp"
#include "wmfield/types.hpp"

namespace wmfield {

struct StudyConfig {
  double kappa = 0.5;
  int n0 = 9;       // coarse node count for the L2 / H1 studies
  int n0_sup = 17;  // coarse node count for the sup-norm studies
  int max_level = 4;
  std::vector<int> degrees{1, 2};
  std::vector<double> betas;   // empty: defaults for the study kind
  std::vector<NormTag> norms;  // empty: defaults for the study kind
  int n_mc = 100;
  int n_kl = 1000;
  int n_ok = 1001;
  std::uint64_t base_seed = 20190101;
  int fit_first = 2;  // level window of the rate fit
  int fit_last = 4;
  int threads = 0;  // 0: take WM_THREADS from the environment, else 1
};

struct ErrorRecord {
  double beta = 0.0;
  int degree = 0;
  NormTag norm = NormTag::L2;
  int level = 0;
  double h = 0.0;
  double error = 0.0;
};

struct RateRecord {
  double beta = 0.0;
  int degree = 0;
  NormTag norm = NormTag::L2;
  double observed = 0.0;
  std::optional<double> expected;  // empty when no positive order is predicted
  std::optional<bool> within;      // |observed - expected| <= rate_tolerance
};

struct CellTiming {
  double beta = 0.0;  // 0 marks shared per-level setup
  int degree = 0;
  int n0 = 0;
  int level = 0;
  double seconds = 0.0;
};

struct StudyResult {
  std::vector<ErrorRecord> errors;
  std::vector<RateRecord> rates;
  std::vector<CellTiming> timings;
  int nan_failures = 0;  // always 0 on successful return
};

// Theoretical convergence order for the given norm; empty when nonpositive.
std::optional<double> expected_rate(double beta, int degree, NormTag norm);

// Acceptance half-width for the within-tolerance column.
double rate_tolerance(NormTag norm);

struct RateFit {
  double slope = 0.0;      // positive slope = convergence order
  double intercept = 0.0;  // ln of the fitted constant
};

// Least-squares line through (ln xs, ln ys); ys must be positive.
RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys);

// Monte Carlo field study: per (beta, degree, level) draws n_mc coupled
// (reference, sample) pairs and aggregates the requested norms, RMS for L2
// and the H1 seminorm, mean for the sup norm.  L2/H1 run on the n0 mesh
// family, the sup norm on n0_sup.
StudyResult run_field_study(const StudyConfig& config);

// Deterministic covariance study on the lattice; CovL2 runs on the n0 mesh
// family, CovLinf on n0_sup.
StudyResult run_cov_study(const StudyConfig& config);

struct EigConvergence {
  std::vector<double> value_errors;   // lambda_{j,h} - lambda_j per level
  std::vector<double> vector_errors;  // || e_j - e_{j,h} ||_{L2} per level
  double value_slope = 0.0;
  double vector_slope = 0.0;
};

// Convergence of the j-th discrete eigenpair over levels 0..max_level.
EigConvergence eig_convergence_check(int n0, int max_level, int degree, int j, double kappa);

struct SincDecay {
  std::vector<double> errors;  // one per step size
  double fitted_rate = 0.0;    // c in ln err = a - c / k
};

// Sinc quadrature error against the exact discrete fractional solve for a
// fixed normalized probe vector, across the given step sizes.
SincDecay sinc_decay_check(double beta_star, int n0, int level, int degree, double kappa,
                           const std::vector<double>& ks);

struct TruncationRates {
  double beta = 0.0;
  double field_slope = 0.0;  // expected -(2 beta - 1/2)
  double cov_slope = 0.0;    // expected -(4 beta - 1/2)
};

// Slopes of the exact KL truncation tails against the cutoff N.
std::vector<TruncationRates> truncation_rate_check(double kappa, const std::vector<double>& betas,
                                                   const std::vector<int>& ns);

// Worker count: requested if positive, else WM_THREADS, else 1.
int resolve_threads(int requested);

// Runs fn(0..n-1) on n_threads workers with a static stride partition, so
// results are independent of the worker count.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace wmfield
