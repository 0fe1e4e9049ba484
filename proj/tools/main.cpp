// Command-line front end: convergence studies, single realizations, and
// self-validation.  All numeric output uses shortest round-trip formatting,
// and files are written to a temporary name and renamed into place.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wmfield/errors.hpp"
#include "wmfield/fem.hpp"
#include "wmfield/fractional.hpp"
#include "wmfield/rng.hpp"
#include "wmfield/spectrum.hpp"
#include "wmfield/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wmfield;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

struct StudyOptions {
  StudyConfig config;
  std::vector<double> betas;
  std::vector<std::string> norms;
  std::string out_dir = ".";
  std::string config_path;
  CLI::App* cmd = nullptr;
};

void add_study_options(CLI::App* cmd, StudyOptions& opts) {
  opts.cmd = cmd;
  cmd->add_option("--config", opts.config_path,
                  "Key=value config file; flags and WM_* variables override it");
  cmd->add_option("--kappa", opts.config.kappa, "Shift kappa in L = -Laplace + kappa^2")
      ->capture_default_str();
  cmd->add_option("--n0", opts.config.n0, "Coarse node count, L2 family")->capture_default_str();
  cmd->add_option("--n0-sup", opts.config.n0_sup, "Coarse node count, sup-norm family")
      ->capture_default_str();
  cmd->add_option("--max-level", opts.config.max_level, "Finest refinement level")
      ->capture_default_str();
  cmd->add_option("--p", opts.config.degrees, "Polynomial degrees (1 and/or 2)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--betas", opts.betas, "Fractional exponents")->delimiter(',');
  cmd->add_option("--norms", opts.norms, "Error norms")->delimiter(',');
  cmd->add_option("--n-mc", opts.config.n_mc, "Monte Carlo sample count")->capture_default_str();
  cmd->add_option("--n-kl", opts.config.n_kl, "Reference expansion length")->capture_default_str();
  cmd->add_option("--n-ok", opts.config.n_ok, "Evaluation grid size")->capture_default_str();
  cmd->add_option("--seed", opts.config.base_seed, "Base seed for the sample streams")
      ->envname("WM_SEED")
      ->capture_default_str();
  cmd->add_option("--fit-first", opts.config.fit_first, "First level of the rate fit")
      ->capture_default_str();
  cmd->add_option("--fit-last", opts.config.fit_last, "Last level of the rate fit")
      ->capture_default_str();
  cmd->add_option("--threads", opts.config.threads, "Worker threads (0: WM_THREADS or 1)")
      ->envname("WM_THREADS")
      ->capture_default_str();
  cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
}

std::vector<NormTag> parse_norms(const std::vector<std::string>& names) {
  std::vector<NormTag> out;
  for (const std::string& name : names) {
    const auto tag = parse_norm(name);
    if (!tag)
      throw std::invalid_argument("--norms: unknown norm '" + name +
                                  "' (use L2, H1semi, Linf, CovL2, CovLinf)");
    out.push_back(*tag);
  }
  return out;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return text.substr(first, text.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T config_number(const std::string& key, const std::string& value) {
  T parsed{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw std::invalid_argument("--config: key '" + key + "' has unusable value '" + value + "'");
  return parsed;
}

// Key=value settings; command-line flags (and env-backed options) win over
// the file, so only options never given elsewhere are filled in.
void apply_config_file(StudyOptions& opts) {
  if (opts.config_path.empty()) return;
  std::ifstream in(opts.config_path);
  if (!in) throw std::invalid_argument("--config: cannot read '" + opts.config_path + "'");

  StudyConfig& c = opts.config;
  const auto given = [&](const char* flag) { return opts.cmd->count(flag) > 0; };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#' || entry[0] == ';' || entry[0] == '[') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--config: line " + std::to_string(line_no) +
                                  " is not key=value: '" + entry + "'");
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));

    if (key == "kappa") {
      if (!given("--kappa")) c.kappa = config_number<double>(key, value);
    } else if (key == "n0") {
      if (!given("--n0")) c.n0 = config_number<int>(key, value);
    } else if (key == "n0-sup") {
      if (!given("--n0-sup")) c.n0_sup = config_number<int>(key, value);
    } else if (key == "max-level") {
      if (!given("--max-level")) c.max_level = config_number<int>(key, value);
    } else if (key == "p") {
      if (!given("--p")) {
        c.degrees.clear();
        for (const std::string& item : split_list(value))
          c.degrees.push_back(config_number<int>(key, item));
      }
    } else if (key == "betas") {
      if (!given("--betas")) {
        opts.betas.clear();
        for (const std::string& item : split_list(value))
          opts.betas.push_back(config_number<double>(key, item));
      }
    } else if (key == "norms") {
      if (!given("--norms")) opts.norms = split_list(value);
    } else if (key == "n-mc") {
      if (!given("--n-mc")) c.n_mc = config_number<int>(key, value);
    } else if (key == "n-kl") {
      if (!given("--n-kl")) c.n_kl = config_number<int>(key, value);
    } else if (key == "n-ok") {
      if (!given("--n-ok")) c.n_ok = config_number<int>(key, value);
    } else if (key == "seed") {
      if (!given("--seed")) c.base_seed = config_number<std::uint64_t>(key, value);
    } else if (key == "fit-first") {
      if (!given("--fit-first")) c.fit_first = config_number<int>(key, value);
    } else if (key == "fit-last") {
      if (!given("--fit-last")) c.fit_last = config_number<int>(key, value);
    } else if (key == "threads") {
      if (!given("--threads")) c.threads = config_number<int>(key, value);
    } else if (key == "out-dir") {
      if (!given("--out-dir")) opts.out_dir = value;
    } else {
      throw std::invalid_argument("--config: unknown key '" + key + "'");
    }
  }
}

std::string errors_csv(const std::vector<ErrorRecord>& errors) {
  std::string out = "beta,p,norm,level,h,error\n";
  for (const ErrorRecord& r : errors) {
    out += fmt(r.beta) + ',' + std::to_string(r.degree) + ',' + norm_name(r.norm) + ',' +
           std::to_string(r.level) + ',' + fmt(r.h) + ',' + fmt(r.error) + '\n';
  }
  return out;
}

std::string rates_csv(const std::vector<RateRecord>& rates) {
  std::string out = "beta,p,norm,observed_rate,expected_rate,within_tolerance\n";
  for (const RateRecord& r : rates) {
    out += fmt(r.beta) + ',' + std::to_string(r.degree) + ',' + norm_name(r.norm) + ',' +
           fmt(r.observed) + ',';
    out += r.expected ? fmt(*r.expected) : std::string("--");
    out += ',';
    out += r.within ? (*r.within ? "yes" : "no") : "--";
    out += '\n';
  }
  return out;
}

json config_json(const StudyConfig& c, const std::string& out_dir) {
  json norms = json::array();
  for (NormTag n : c.norms) norms.push_back(norm_name(n));
  return json{{"kappa", c.kappa},
              {"n0", c.n0},
              {"n0_sup", c.n0_sup},
              {"max_level", c.max_level},
              {"degrees", c.degrees},
              {"betas", c.betas},
              {"norms", norms},
              {"n_mc", c.n_mc},
              {"n_kl", c.n_kl},
              {"n_ok", c.n_ok},
              {"base_seed", c.base_seed},
              {"fit_first", c.fit_first},
              {"fit_last", c.fit_last},
              {"threads", c.threads},
              {"out_dir", out_dir}};
}

// Runs one study and writes CSVs, plot data, and the run manifest.
int run_study_cmd(const std::string& study, StudyOptions& opts) {
  apply_config_file(opts);
  StudyConfig& config = opts.config;
  config.betas = opts.betas;
  config.norms = parse_norms(opts.norms);

  const StudyResult result = study == "field" ? run_field_study(config) : run_cov_study(config);

  std::vector<std::pair<fs::path, std::string>> files;
  const fs::path dir(opts.out_dir);
  files.emplace_back(dir / (study + "_errors.csv"), errors_csv(result.errors));
  files.emplace_back(dir / (study + "_rates.csv"), rates_csv(result.rates));

  std::map<std::tuple<double, int, int>, std::string> plots;
  for (const ErrorRecord& r : result.errors)
    plots[{r.beta, r.degree, static_cast<int>(r.norm)}] +=
        fmt(std::log(r.h)) + ' ' + fmt(std::log(r.error)) + '\n';
  for (const auto& [key, body] : plots) {
    const std::string name = study + '_' + fmt(std::get<0>(key)) + '_' +
                             std::to_string(std::get<1>(key)) + '_' +
                             norm_name(static_cast<NormTag>(std::get<2>(key))) + ".dat";
    files.emplace_back(dir / name, body);
  }

  json manifest{{"tool", "wmfield"},
                {"version", kVersion},
                {"command", study + "-study"},
                {"base_seed", config.base_seed},
                {"config", config_json(config, opts.out_dir)}};
  json outputs = json::array();
  for (const auto& [path, body] : files) outputs.push_back(path.string());
  outputs.push_back((dir / "run_manifest.json").string());
  manifest["outputs"] = outputs;
  json cells = json::array();
  for (const CellTiming& t : result.timings)
    cells.push_back(json{{"beta", t.beta},
                         {"p", t.degree},
                         {"n0", t.n0},
                         {"level", t.level},
                         {"seconds", t.seconds}});
  manifest["cells"] = cells;

  fs::create_directories(dir);
  for (const auto& [path, body] : files) write_atomic(path, body);
  write_atomic(dir / "run_manifest.json", manifest.dump(2) + "\n");

  std::cout << study << " study: " << result.errors.size() << " error records, "
            << result.rates.size() << " rate rows -> " << opts.out_dir << "\n";
  for (const RateRecord& r : result.rates) {
    std::cout << "  beta=" << fmt(r.beta) << " p=" << r.degree << ' ' << norm_name(r.norm)
              << ": observed " << fmt(r.observed);
    if (r.expected)
      std::cout << ", expected " << fmt(*r.expected) << (*r.within ? " (within" : " (outside")
                << " tolerance)";
    else
      std::cout << ", expected --";
    std::cout << "\n";
  }
  return 0;
}

struct SampleOptions {
  double beta = 1.4;
  int level = 3;
  int degree = 1;
  int n0 = 9;
  double kappa = 0.5;
  int n_ok = 1001;
  std::uint64_t seed = 1;
  std::string out = "sample.dat";
};

int run_sample_cmd(const SampleOptions& opts) {
  if (!(2.0 * opts.beta > 0.5)) {
    std::cerr << "--beta " << fmt(opts.beta)
              << " rejected: sample paths need 2 beta > 1/2, but 2 beta - 1/2 = "
              << fmt(2.0 * opts.beta - 0.5) << "\n";
    return 2;
  }
  const FeSpace fe = make_fespace(build_mesh(opts.n0, opts.level), opts.degree);
  const Matrix M = assemble_mass(fe);
  const Matrix L = assemble_stiffness(fe, opts.kappa);
  DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
  align_signs(basis, fe);
  const Matrix R = coupling_matrix(M, basis);

  const FractionalExponent frac = split_beta(opts.beta);
  const SampleOperator op(frac, calibrate_k(opts.beta, fe.mesh.h), M, L);
  const Vector xi = NormalSampler(opts.seed).draw(fe.n_dofs);
  const Vector coeffs = op.apply(R * xi);

  const EvalGrid grid = make_eval_grid(opts.n_ok);
  const Vector values = basis_eval_matrix(fe, grid.nodes) * coeffs;

  std::string body;
  for (int i = 0; i < grid.nodes.size(); ++i)
    body += fmt(grid.nodes[i]) + ' ' + fmt(values[i]) + '\n';
  std::string coeff_body;
  for (int i = 0; i < coeffs.size(); ++i) coeff_body += fmt(coeffs[i]) + '\n';

  const fs::path out(opts.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_atomic(out, body);
  write_atomic(fs::path(opts.out + ".coeffs"), coeff_body);
  std::cout << "wrote " << opts.out << " (" << grid.nodes.size() << " points) and " << opts.out
            << ".coeffs (" << coeffs.size() << " coefficients)\n";
  return 0;
}

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

SuiteResult validate_eigs(bool quick) {
  const double tol = quick ? 0.45 : 0.3;
  double worst = 0.0;
  std::string worst_what = "none";
  for (int p : {1, 2}) {
    // Quadratic eigenpair errors sink below the cancellation floor of the
    // overlap computation past level 2, so their fit stops there.
    const int max_level = (quick || p == 2) ? 2 : 4;
    for (int j : {1, 2}) {
      const EigConvergence ec = eig_convergence_check(9, max_level, p, j, 0.5);
      const double dv = std::abs(ec.value_slope - 2.0 * p);
      const double dx = std::abs(ec.vector_slope - (p + 1.0));
      if (dv > worst) {
        worst = dv;
        worst_what = "value slope p=" + std::to_string(p) + " j=" + std::to_string(j);
      }
      if (dx > worst) {
        worst = dx;
        worst_what = "vector slope p=" + std::to_string(p) + " j=" + std::to_string(j);
      }
    }
  }
  return {"eigenpair convergence", worst <= tol,
          "worst slope deviation " + fmt(worst) + " (" + worst_what + "), tol " + fmt(tol)};
}

SuiteResult validate_minmax(bool quick) {
  const int max_level = quick ? 2 : 4;
  double worst = -1.0;
  for (int p : {1, 2}) {
    for (int level = 0; level <= max_level; ++level) {
      const FeSpace fe = make_fespace(build_mesh(9, level), p);
      const DiscreteEigenbasis basis =
          solve_discrete_eigs(assemble_mass(fe), assemble_stiffness(fe, 0.5));
      for (int j = 1; j <= fe.n_dofs; ++j) {
        const double lambda = j * std::numbers::pi * j * std::numbers::pi + 0.25;
        worst = std::max(worst, (lambda - basis.eigenvalues[j - 1]) / lambda);
      }
    }
  }
  return {"min-max ordering", worst <= 1e-8,
          "largest relative excess of lambda_j over lambda_{j,h}: " + fmt(worst)};
}

SuiteResult validate_sinc(bool quick) {
  const int level = quick ? 1 : 2;
  const std::vector<double> ks = quick ? std::vector<double>{1.0, 0.5, 1.0 / 3.0}
                                       : std::vector<double>{1.0, 0.5, 1.0 / 3.0, 0.25, 0.2};
  const double target = std::numbers::pi * std::numbers::pi / 2.0;
  double worst = 0.0;
  for (int p : {1, 2}) {
    for (double beta_star : {0.1, 0.4, 0.5, 0.7}) {
      const SincDecay decay = sinc_decay_check(beta_star, 9, level, p, 0.5, ks);
      worst = std::max(worst, std::abs(decay.fitted_rate - target) / target);
    }
  }
  return {"sinc quadrature decay", worst <= 0.15,
          "worst relative deviation from pi^2/2: " + fmt(worst)};
}

SuiteResult validate_truncation(bool quick) {
  const std::vector<int> ns =
      quick ? std::vector<int>{200, 400, 800} : std::vector<int>{200, 400, 800, 1600, 3200};
  double worst = 0.0;
  for (const TruncationRates& r : truncation_rate_check(0.5, {0.5, 1.0, 1.7}, ns)) {
    worst = std::max(worst, std::abs(r.field_slope + (2.0 * r.beta - 0.5)));
    worst = std::max(worst, std::abs(r.cov_slope + (4.0 * r.beta - 0.5)));
  }
  return {"spectral truncation", worst <= 0.1, "worst slope deviation " + fmt(worst)};
}

SuiteResult validate_equivalence(bool quick) {
  const int max_level = quick ? 1 : 2;
  double worst = 0.0;
  for (int p : {1, 2}) {
    for (int level = 0; level <= max_level; ++level) {
      const FeSpace fe = make_fespace(build_mesh(9, level), p);
      const Matrix M = assemble_mass(fe);
      const Matrix L = assemble_stiffness(fe, 0.5);
      DiscreteEigenbasis basis = solve_discrete_eigs(M, L);
      align_signs(basis, fe);
      const Matrix R = coupling_matrix(M, basis);
      for (double beta : {0.5, 1.1, 1.7}) {
        const FractionalExponent frac = split_beta(beta);
        worst = std::max(
            worst, covariance_equivalence_check(frac, calibrate_k(beta, fe.mesh.h), M, L, R));
      }
    }
  }
  return {"covariance equivalence", worst <= 1e-8, "largest residual " + fmt(worst)};
}

SuiteResult validate_deterministic(bool quick) {
  const int max_level = quick ? 2 : 4;
  const double tol = quick ? 0.5 : 0.35;
  Vector g(1);
  g << 1.0;
  double worst = 0.0;
  std::string worst_what = "none";
  for (int p : {1, 2}) {
    for (double beta : {0.5, 1.5}) {
      for (int sigma : {0, 1}) {
        const std::vector<double> errs =
            deterministic_frac_error(9, max_level, p, 0.5, beta, sigma, g);
        std::vector<double> hs, tail_err;
        // Cubic-rate errors reach the rounding floor of the error norm by
        // level 3; fit the quadratic space on the coarse levels instead.
        const int first = (quick || p == 2) ? 0 : max_level - 2;
        const int last = p == 2 ? std::min(2, max_level) : max_level;
        for (int level = first; level <= last; ++level) {
          hs.push_back(0.125 / (1 << level));
          tail_err.push_back(errs[level]);
        }
        const double expected = sigma == 0 ? p + 1.0 : p;
        const double dev = std::abs(fit_rate(hs, tail_err).slope - expected);
        if (dev > worst) {
          worst = dev;
          worst_what = "p=" + std::to_string(p) + " beta=" + fmt(beta) +
                       " sigma=" + std::to_string(sigma);
        }
      }
    }
  }
  return {"deterministic fractional solve", worst <= tol,
          "worst slope deviation " + fmt(worst) + " (" + worst_what + "), tol " + fmt(tol)};
}

int run_validate_cmd(bool quick) {
  const std::vector<SuiteResult> results = {validate_eigs(quick),    validate_minmax(quick),
                                            validate_sinc(quick),    validate_truncation(quick),
                                            validate_equivalence(quick), validate_deterministic(quick)};
  bool all = true;
  for (const SuiteResult& r : results) {
    std::cout << (r.pass ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  std::cout << (all ? "all suites passed" : "some suites FAILED") << "\n";
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle-Matern random fields on (0,1): sampling and convergence studies"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  StudyOptions field_opts;
  field_opts.betas = {0.5, 0.8, 1.1, 1.4, 1.7};
  field_opts.norms = {"L2", "H1semi", "Linf"};
  CLI::App* field = app.add_subcommand("field-study", "Monte Carlo field convergence study");
  add_study_options(field, field_opts);

  StudyOptions cov_opts;
  cov_opts.betas = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  cov_opts.norms = {"CovL2", "CovLinf"};
  CLI::App* cov = app.add_subcommand("cov-study", "Deterministic covariance convergence study");
  add_study_options(cov, cov_opts);

  SampleOptions sample_opts;
  CLI::App* sample = app.add_subcommand("sample", "Draw one field realization");
  sample->add_option("--beta", sample_opts.beta, "Fractional exponent")->capture_default_str();
  sample->add_option("--level", sample_opts.level, "Refinement level")->capture_default_str();
  sample->add_option("--p", sample_opts.degree, "Polynomial degree (1 or 2)")
      ->capture_default_str();
  sample->add_option("--n0", sample_opts.n0, "Coarse node count")->capture_default_str();
  sample->add_option("--kappa", sample_opts.kappa, "Shift kappa")->capture_default_str();
  sample->add_option("--n-ok", sample_opts.n_ok, "Evaluation grid size")->capture_default_str();
  sample->add_option("--seed", sample_opts.seed, "RNG seed")
      ->envname("WM_SEED")
      ->capture_default_str();
  sample->add_option("--out", sample_opts.out, "Output path")->capture_default_str();

  bool quick = false;
  CLI::App* validate = app.add_subcommand("validate", "Run the self-check suites");
  validate->add_flag("--quick", quick, "Levels 0-2 only, coarser tolerances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (field->parsed()) return run_study_cmd("field", field_opts);
    if (cov->parsed()) return run_study_cmd("cov", cov_opts);
    if (sample->parsed()) return run_sample_cmd(sample_opts);
    return run_validate_cmd(quick);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
