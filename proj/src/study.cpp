#include "wmfield/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <tuple>

#include "wmfield/fractional.hpp"
#include "wmfield/rng.hpp"

namespace wmfield {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate_config(const StudyConfig& c, const char* where) {
  const std::string who(where);
  if (c.kappa < 0.0) throw std::invalid_argument(who + ": kappa must be >= 0");
  if (c.n0 < 3 || c.n0_sup < 3) throw std::invalid_argument(who + ": coarse meshes need n0 >= 3");
  if (c.max_level < 0 || c.max_level > 12)
    throw std::invalid_argument(who + ": max_level out of range");
  if (c.n_mc < 1) throw std::invalid_argument(who + ": n_mc must be >= 1");
  if (c.n_kl < 1) throw std::invalid_argument(who + ": n_kl must be >= 1");
  if (c.n_ok < 2) throw std::invalid_argument(who + ": n_ok must be >= 2");
  if (c.fit_first < 0 || c.fit_last > c.max_level || c.fit_first >= c.fit_last)
    throw std::invalid_argument(who + ": rate fit window must hold >= 2 levels within 0..max_level");
  if (c.degrees.empty()) throw std::invalid_argument(who + ": no polynomial degrees requested");
  for (int p : c.degrees)
    if (p != 1 && p != 2) throw std::invalid_argument(who + ": degrees must be 1 or 2");
}

struct MeshGroup {
  int n0 = 0;
  std::vector<NormTag> norms;
};

double aggregate_errors(NormTag norm, const std::vector<double>& samples) {
  double acc = 0.0;
  for (double e : samples) acc += norm == NormTag::Linf ? e : e * e;
  acc /= samples.size();
  return norm == NormTag::Linf ? acc : std::sqrt(acc);
}

// Collects per-level errors into rate records over the configured window.
void append_rates(StudyResult& result, const StudyConfig& config) {
  std::map<std::tuple<int, int, double>, std::map<int, std::pair<double, double>>> cells;
  for (const ErrorRecord& r : result.errors)
    cells[{r.degree, static_cast<int>(r.norm), r.beta}][r.level] = {r.h, r.error};
  for (const auto& [key, levels] : cells) {
    std::vector<double> hs, es;
    for (int l = config.fit_first; l <= config.fit_last; ++l) {
      const auto it = levels.find(l);
      if (it == levels.end())
        throw std::invalid_argument("rate fit window covers a level the study did not run");
      hs.push_back(it->second.first);
      es.push_back(it->second.second);
    }
    RateRecord rate;
    rate.degree = std::get<0>(key);
    rate.norm = static_cast<NormTag>(std::get<1>(key));
    rate.beta = std::get<2>(key);
    rate.observed = fit_rate(hs, es).slope;
    rate.expected = expected_rate(rate.beta, rate.degree, rate.norm);
    if (rate.expected)
      rate.within = std::abs(rate.observed - *rate.expected) <= rate_tolerance(rate.norm);
    result.rates.push_back(rate);
  }
}

void sort_errors(std::vector<ErrorRecord>& errors) {
  std::stable_sort(errors.begin(), errors.end(), [](const ErrorRecord& a, const ErrorRecord& b) {
    return std::tie(a.degree, a.norm, a.beta, a.level) < std::tie(b.degree, b.norm, b.beta, b.level);
  });
}

}  // namespace

std::optional<double> expected_rate(double beta, int degree, NormTag norm) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("expected_rate: degree must be 1 or 2");
  if (!(beta > 0.0)) throw std::invalid_argument("expected_rate: beta must be > 0");
  double rate = 0.0;
  switch (norm) {
    case NormTag::L2:
    case NormTag::Linf:
      rate = std::min(2.0 * beta - 0.5, degree + 1.0);
      break;
    case NormTag::H1semi:
      rate = std::min(2.0 * beta - 1.5, static_cast<double>(degree));
      break;
    case NormTag::CovL2:
      rate = std::min(4.0 * beta - 0.5, degree + 1.0);
      break;
    case NormTag::CovLinf:
      rate = std::min(4.0 * beta - 1.0, degree + 1.0);
      break;
  }
  if (rate <= 0.0) return std::nullopt;
  return rate;
}

double rate_tolerance(NormTag norm) {
  switch (norm) {
    case NormTag::L2:
    case NormTag::H1semi:
      return 0.2;
    case NormTag::Linf:
      return 0.25;
    case NormTag::CovL2:
      return 0.15;
    default:
      return 0.2;
  }
}

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_rate: need two matching arrays with >= 2 points");
  const int n = static_cast<int>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_rate: data must be positive");
    const double x = std::log(xs[i]);
    const double y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("fit_rate: degenerate abscissae");
  RateFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

int resolve_threads(int requested) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("WM_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = 1;
  return std::min(t, 64);
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  n_threads = std::clamp(n_threads, 1, std::max(1, n));
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += n_threads) fn(i);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
}

StudyResult run_field_study(const StudyConfig& config) {
  validate_config(config, "run_field_study");
  const std::vector<double> betas =
      config.betas.empty() ? std::vector<double>{0.5, 0.8, 1.1, 1.4, 1.7} : config.betas;
  for (double beta : betas)
    if (!(2.0 * beta > 0.5))
      throw std::invalid_argument(
          "run_field_study: beta <= 1/4 violates 2 beta > 1/2, the field has no L2 sample paths");
  const std::vector<NormTag> norms =
      config.norms.empty() ? std::vector<NormTag>{NormTag::L2, NormTag::H1semi, NormTag::Linf}
                           : config.norms;

  std::vector<MeshGroup> groups{{config.n0, {}}, {config.n0_sup, {}}};
  for (NormTag norm : norms) {
    if (norm == NormTag::L2 || norm == NormTag::H1semi)
      groups[0].norms.push_back(norm);
    else if (norm == NormTag::Linf)
      groups[1].norms.push_back(norm);
    else
      throw std::invalid_argument("run_field_study: covariance norms belong to run_cov_study");
  }

  const int threads = resolve_threads(config.threads);
  const ContinuousSpectrum spectrum = continuous_spectrum(config.kappa, config.n_kl);
  const EvalGrid grid = make_eval_grid(config.n_ok);

  StudyResult result;
  for (int degree : config.degrees) {
    for (const MeshGroup& group : groups) {
      if (group.norms.empty()) continue;
      for (int level = 0; level <= config.max_level; ++level) {
        auto t0 = Clock::now();
        const FeSpace fe = make_fespace(build_mesh(group.n0, level), degree);
        if (fe.n_dofs > config.n_kl)
          throw std::invalid_argument("run_field_study: n_kl smaller than the dof count");
        const Matrix M = assemble_mass(fe);
        const Matrix L = assemble_stiffness(fe, config.kappa);
        DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
        align_signs(basis, fe);
        const Matrix R = coupling_matrix(M, basis);
        const ErrorContext ctx(fe, spectrum, grid);
        result.timings.push_back({0.0, degree, group.n0, level, elapsed(t0)});

        for (double beta : betas) {
          t0 = Clock::now();
          const FractionalExponent frac = split_beta(beta);
          const SampleOperator op(frac, calibrate_k(beta, fe.mesh.h), M, L);

          std::vector<std::vector<double>> errs(group.norms.size(),
                                                std::vector<double>(config.n_mc));
          std::atomic<int> nan_failures{0};
          parallel_for(config.n_mc, threads, [&](int m) {
            FieldSample sample;
            sample.beta = beta;
            sample.degree = degree;
            sample.level = level;
            sample.seed = sample_seed(config.base_seed, m);
            sample.xi = NormalSampler(sample.seed).draw(config.n_kl);
            sample.coeffs = op.apply(R * sample.xi.head(fe.n_dofs));
            for (std::size_t ni = 0; ni < group.norms.size(); ++ni) {
              double value = std::numeric_limits<double>::quiet_NaN();
              try {
                switch (group.norms[ni]) {
                  case NormTag::L2:
                    value = field_error_l2(ctx, sample, sample.xi);
                    break;
                  case NormTag::H1semi:
                    value = field_error_h1(ctx, sample, sample.xi);
                    break;
                  default:
                    value = field_error_sup(ctx, sample, sample.xi);
                    break;
                }
              } catch (const NumericalError&) {
                ++nan_failures;
              }
              errs[ni][m] = value;
            }
          });
          if (nan_failures > 0) {
            result.nan_failures = nan_failures;
            throw NumericalError("run_field_study: " + std::to_string(nan_failures) +
                                 " sample errors were non-finite");
          }

          for (std::size_t ni = 0; ni < group.norms.size(); ++ni)
            result.errors.push_back(
                {beta, degree, group.norms[ni], level, fe.mesh.h, aggregate_errors(group.norms[ni], errs[ni])});
          result.timings.push_back({beta, degree, group.n0, level, elapsed(t0)});
        }
      }
    }
  }
  sort_errors(result.errors);
  append_rates(result, config);
  return result;
}

StudyResult run_cov_study(const StudyConfig& config) {
  validate_config(config, "run_cov_study");
  const std::vector<double> betas =
      config.betas.empty() ? std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9, 1.0} : config.betas;
  for (double beta : betas)
    if (!(4.0 * beta > 1.0))
      throw std::invalid_argument("run_cov_study: beta <= 1/4 gives a divergent covariance");
  const std::vector<NormTag> norms =
      config.norms.empty() ? std::vector<NormTag>{NormTag::CovL2, NormTag::CovLinf} : config.norms;

  std::vector<MeshGroup> groups{{config.n0, {}}, {config.n0_sup, {}}};
  for (NormTag norm : norms) {
    if (norm == NormTag::CovL2)
      groups[0].norms.push_back(norm);
    else if (norm == NormTag::CovLinf)
      groups[1].norms.push_back(norm);
    else
      throw std::invalid_argument("run_cov_study: field norms belong to run_field_study");
  }

  const ContinuousSpectrum spectrum = continuous_spectrum(config.kappa, config.n_kl);
  const EvalGrid grid = make_eval_grid(config.n_ok);
  std::map<double, Matrix> rho_ref_cache;

  StudyResult result;
  for (int degree : config.degrees) {
    for (const MeshGroup& group : groups) {
      if (group.norms.empty()) continue;
      for (int level = 0; level <= config.max_level; ++level) {
        auto t0 = Clock::now();
        const FeSpace fe = make_fespace(build_mesh(group.n0, level), degree);
        const Matrix M = assemble_mass(fe);
        const Matrix L = assemble_stiffness(fe, config.kappa);
        const ErrorContext ctx(fe, spectrum, grid);
        result.timings.push_back({0.0, degree, group.n0, level, elapsed(t0)});

        for (double beta : betas) {
          t0 = Clock::now();
          auto cached = rho_ref_cache.find(beta);
          if (cached == rho_ref_cache.end())
            cached = rho_ref_cache.emplace(beta, reference_covariance(ctx, beta)).first;
          const Matrix& rho_ref = cached->second;

          const FractionalExponent frac = split_beta(beta);
          const SampleOperator op(frac, calibrate_k(beta, fe.mesh.h), M, L);
          const Matrix cov = covariance_from_operator(op, M);
          const Matrix rho_h = grid_covariance(ctx, cov);

          for (NormTag norm : group.norms)
            result.errors.push_back({beta, degree, norm, level, fe.mesh.h,
                                     norm == NormTag::CovL2 ? cov_error_l2(ctx, rho_h, rho_ref)
                                                            : cov_error_sup(rho_h, rho_ref)});
          result.timings.push_back({beta, degree, group.n0, level, elapsed(t0)});
        }
      }
    }
  }
  sort_errors(result.errors);
  append_rates(result, config);
  return result;
}

EigConvergence eig_convergence_check(int n0, int max_level, int degree, int j, double kappa) {
  if (j < 1) throw std::invalid_argument("eig_convergence_check: j must be >= 1");
  EigConvergence out;
  std::vector<double> hs;
  for (int level = 0; level <= max_level; ++level) {
    const FeSpace fe = make_fespace(build_mesh(n0, level), degree);
    if (fe.n_dofs < j)
      throw std::invalid_argument("eig_convergence_check: mode beyond the coarse space");
    const Matrix M = assemble_mass(fe);
    const Matrix L = assemble_stiffness(fe, kappa);
    DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
    align_signs(basis, fe);

    const double jpi = j * std::numbers::pi;
    const double lambda = jpi * jpi + kappa * kappa;
    out.value_errors.push_back(basis.eigenvalues[j - 1] - lambda);
    const double overlap = sine_inner_products(fe, j).dot(basis.eigenvectors.col(j - 1));
    out.vector_errors.push_back(std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap)));
    hs.push_back(fe.mesh.h);
  }
  out.value_slope = fit_rate(hs, out.value_errors).slope;
  out.vector_slope = fit_rate(hs, out.vector_errors).slope;
  return out;
}

SincDecay sinc_decay_check(double beta_star, int n0, int level, int degree, double kappa,
                           const std::vector<double>& ks) {
  if (ks.size() < 2) throw std::invalid_argument("sinc_decay_check: need >= 2 step sizes");
  const FeSpace fe = make_fespace(build_mesh(n0, level), degree);
  const Matrix M = assemble_mass(fe);
  const Matrix L = assemble_stiffness(fe, kappa);
  const DiscreteEigenbasis basis = solve_discrete_eigs(M, L);

  Vector v = NormalSampler(424242).draw(fe.n_dofs);
  v /= v.norm();
  Vector w = basis.eigenvectors.transpose() * v;
  w.array() *= basis.eigenvalues.array().pow(-beta_star);
  const Vector exact = basis.eigenvectors * w;

  SincDecay out;
  double su = 0.0, sy = 0.0, suu = 0.0, suy = 0.0;
  for (double k : ks) {
    const SincRule rule = make_sinc_rule(beta_star, k);
    const double err = (apply_sinc(beta_star, rule, M, L, v) - exact).norm();
    if (!(err > 0.0)) throw NumericalError("sinc_decay_check: error underflowed");
    out.errors.push_back(err);
    const double u = 1.0 / k;
    const double y = std::log(err);
    su += u;
    sy += y;
    suu += u * u;
    suy += u * y;
  }
  const int n = static_cast<int>(ks.size());
  const double denom = n * suu - su * su;
  if (denom <= 0.0) throw std::invalid_argument("sinc_decay_check: step sizes must differ");
  out.fitted_rate = -(n * suy - su * sy) / denom;
  return out;
}

std::vector<TruncationRates> truncation_rate_check(double kappa, const std::vector<double>& betas,
                                                   const std::vector<int>& ns) {
  if (ns.size() < 2) throw std::invalid_argument("truncation_rate_check: need >= 2 cutoffs");
  std::vector<TruncationRates> out;
  for (double beta : betas) {
    std::vector<double> xs, field, cov;
    for (int n : ns) {
      xs.push_back(n);
      field.push_back(std::sqrt(spectral_tail_sum(kappa, -2.0 * beta, n)));
      cov.push_back(std::sqrt(spectral_tail_sum(kappa, -4.0 * beta, n)));
    }
    TruncationRates rates;
    rates.beta = beta;
    rates.field_slope = fit_rate(xs, field).slope;
    rates.cov_slope = fit_rate(xs, cov).slope;
    out.push_back(rates);
  }
  return out;
}

}  // namespace wmfield
