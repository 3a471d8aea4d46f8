#include "snorelab/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "snorelab/cli/pgm.hpp"
#include "snorelab/cli/problem.hpp"
#include "snorelab/core/metrics.hpp"
#include "snorelab/oracles/oracles.hpp"
#include "snorelab/solvers/solvers.hpp"

namespace snorelab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ostream& out_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "trace.csv" -> "trace-007.csv"
std::string indexed_name(const std::string& name, std::size_t i) {
  const fs::path p(name);
  char idx[16];
  std::snprintf(idx, sizeof idx, "-%03zu", i);
  return (p.parent_path() / (p.stem().string() + idx + p.extension().string())).string();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json stamp_json(const std::string& hash, std::uint64_t seed) {
  return {{"config_hash", hash}, {"seed", seed}, {"version", kVersion}};
}

std::string stamp_comment(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + "\n# seed=" + std::to_string(seed) + "\n# version=" + kVersion + "\n";
}

Vector as_image(const Vector& x) {
  if (x.shape()) return x;
  return x.with_shape(Shape{1, x.size()});
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> seeds) {
  if (seed) cfg.solver.seed = *seed;
  if (seeds) cfg.n_seeds = *seeds;
  validate(cfg);
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const ExperimentConfig& cfg, const CommandContext& ctx) {
  std::ostream& out = out_of(ctx);
  const Problem p = build_problem(cfg);
  const std::string hash = config_hash(cfg);

  RunOptions opts;
  opts.ground_truth = p.ground_truth;
  opts.config_hash = hash;
  opts.notes = p.notes;
  const auto traces = run_ensemble(cfg.solver, p.fidelity, *p.denoiser, p.x0, cfg.n_seeds, ctx.threads, opts);

  const fs::path dir(ctx.out_dir);
  fs::create_directories(dir);
  json meta;
  meta["stamp"] = stamp_json(hash, cfg.seed());
  meta["config"] = json::parse(serialize_config(cfg));
  meta["notes"] = p.notes;
  if (p.ground_truth) meta["observation_psnr"] = number_or_null(psnr(p.fidelity.y(), *p.ground_truth));
  json runs = json::array();

  bool aborted = false;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const RunTrace& t = traces[r];
    const std::string name = traces.size() == 1 ? cfg.outputs.trace : indexed_name(cfg.outputs.trace, r);
    write_text(dir / name, trace_to_csv(t));
    const TraceRecord& last = t.records.back();
    json jr = {{"run", r},
               {"trace", name},
               {"aborted", t.meta.aborted},
               {"iterations", t.iterations()},
               {"F_final", number_or_null(last.f_est)},
               {"gradF_sq_final", number_or_null(last.grad_sq_est)}};
    if (last.psnr) jr["psnr_final"] = number_or_null(*last.psnr);
    runs.push_back(jr);
    aborted = aborted || t.meta.aborted;

    out << "run " << r << ": k=" << t.iterations() << " F=" << format_double(last.f_est)
        << " gradF_sq=" << format_double(last.grad_sq_est);
    if (last.psnr) out << " psnr=" << format_double(*last.psnr);
    out << (t.meta.aborted ? " ABORTED" : "") << "\n";
    for (const auto& note : t.meta.notes) out << "  note: " << note << "\n";
  }
  meta["runs"] = runs;

  const ImageStamp stamp{hash, cfg.seed(), kVersion};
  const Vector img = as_image(traces.front().final_x.empty() ? p.x0 : traces.front().final_x);
  write_pgm((dir / cfg.outputs.image).string(), img, stamp);
  write_sidecar(sidecar_path((dir / cfg.outputs.image).string()), img, stamp);
  write_text(dir / "run.json", meta.dump(2) + "\n");
  if (meta.contains("observation_psnr")) out << "observation psnr=" << format_double(psnr(p.fidelity.y(), *p.ground_truth)) << "\n";
  return aborted ? kExitFailed : kExitOk;
}

// ---------------------------------------------------------------------------
// verify

ExperimentConfig default_verify_config() {
  ExperimentConfig cfg;
  cfg.problem.kind = FidelityKind::DenoiseQuadratic;
  cfg.problem.dim = 4;
  cfg.problem.sigma_y = 1.0;
  cfg.problem.observation = std::vector<double>{1.0, -0.5, 0.25, 2.0};
  cfg.problem.ground_truth = "none";
  cfg.problem.x0 = std::vector<double>{3.0};
  cfg.prior.weights = {1.0};
  cfg.prior.means = {MeanSpec{}};
  cfg.prior.variances = {1.0};
  cfg.solver.method = Method::SnoreProx;
  cfg.solver.lambda = 1.0;
  cfg.solver.sigma = 1.0;
  cfg.n_seeds = 64;
  return cfg;
}

namespace {

class Refusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<RunTrace> load_ensemble(const fs::path& dir, const std::string& prefix) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw Refusal("trace directory '" + dir.string() + "' does not exist");
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.rfind(prefix + "-", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunTrace> out;
  for (const auto& f : files) out.push_back(parse_trace_csv(read_text(f)));
  return out;
}

json report_json(const BoundReport& r) {
  json details = json::object();
  for (const auto& [k, v] : r.details) details[k] = number_or_null(v);
  return {{"name", r.name},
          {"lhs", number_or_null(r.lhs)},
          {"rhs", number_or_null(r.rhs)},
          {"margin", number_or_null(r.margin)},
          {"mc_stderr", number_or_null(r.mc_stderr)},
          {"verdict", to_string(r.verdict)},
          {"details", details}};
}

std::string reports_csv(const std::vector<BoundReport>& reports, const std::string& hash, std::uint64_t seed) {
  std::string s = stamp_comment(hash, seed) + "name,lhs,rhs,margin,mc_stderr,verdict\n";
  for (const auto& r : reports) {
    s += r.name + "," + format_double(r.lhs) + "," + format_double(r.rhs) + "," + format_double(r.margin) + "," +
         format_double(r.mc_stderr) + "," + to_string(r.verdict) + "\n";
  }
  return s;
}

}  // namespace

VerifyResult verify(const ExperimentConfig& cfg, const CommandContext& ctx,
                    const std::optional<std::string>& from_traces) {
  std::ostream& out = out_of(ctx);
  const Problem p = build_problem(cfg);
  const std::string hash = config_hash(cfg);

  if (p.prior.components() != 1) {
    throw Refusal("verify requires a single Gaussian prior component (K = 1); got K = " +
                  std::to_string(p.prior.components()));
  }
  if (!p.fidelity.differentiable()) {
    throw Refusal("verify requires a differentiable data term; " + std::string(to_string(p.fidelity.kind())) +
                  " is an indicator");
  }
  if (cfg.solver.method != Method::SnoreProx && cfg.solver.method != Method::RedProx) {
    throw Refusal("verify certifies the proximal iteration only (snore-prox or red-prox); got " +
                  std::string(to_string(cfg.solver.method)));
  }
  if (cfg.solver.anneal) throw Refusal("verify requires fixed lambda and sigma; remove the anneal block");

  const double lambda = cfg.solver.lambda, sigma = cfg.solver.sigma;
  const double L = certified_L(p, cfg, sigma);
  const FidelityConstants fc = p.fidelity.constants();
  const double dmax = max_step(lambda, sigma, L, fc.rho);
  const double delta0 = cfg.verify.delta0.value_or(cfg.verify.step_fraction * dmax);
  const double c_decay = cfg.verify.decay_fraction * dmax;

  TheoryBounds tb_const, tb_decay;
  try {
    tb_const = constants(lambda, sigma, L, fc.rho, fc.M, delta0);
    tb_decay = constants(lambda, sigma, L, fc.rho, fc.M, c_decay);
  } catch (const StepRegimeError& e) {
    throw Refusal(std::string(e.what()) + " (require delta_0 <= sigma^2 / (lambda (L + 1) + rho sigma^2))");
  }

  const StepSchedule constant_schedule = StepSchedule::constant(delta0);
  const StepSchedule decay_schedule = StepSchedule::power_decay(c_decay, cfg.verify.alpha);
  const std::uint64_t n_const = cfg.verify.iters, n_decay = cfg.verify.decay_iters;

  std::vector<RunTrace> constant_runs, decay_runs;
  const fs::path dir(ctx.out_dir);
  if (from_traces) {
    constant_runs = load_ensemble(*from_traces, "constant");
    decay_runs = load_ensemble(*from_traces, "decay");
    if (constant_runs.empty() && decay_runs.empty()) throw Refusal("no constant-*.csv or decay-*.csv traces in '" + *from_traces + "'");
    for (const auto* ens : {&constant_runs, &decay_runs}) {
      for (const auto& t : *ens) {
        if (t.meta.config_hash != hash) {
          throw Refusal("trace config hash " + t.meta.config_hash + " does not match configuration " + hash);
        }
      }
    }
  } else {
    SolverConfig sc = cfg.solver;
    sc.anneal.reset();
    sc.telemetry.record_every = 1;
    RunOptions opts;
    opts.config_hash = hash;
    opts.notes = p.notes;

    sc.schedule = constant_schedule;
    sc.iters = n_const;
    constant_runs = run_ensemble(sc, p.fidelity, *p.denoiser, p.x0, cfg.n_seeds, ctx.threads, opts);
    for (std::size_t r = 0; r < constant_runs.size(); ++r) {
      write_text(dir / indexed_name("constant.csv", r), trace_to_csv(constant_runs[r]));
    }

    sc.schedule = decay_schedule;
    sc.iters = 2 * n_decay;
    decay_runs = run_ensemble(sc, p.fidelity, *p.denoiser, p.x0, cfg.n_seeds, ctx.threads, opts);
  }

  // F*: closed form when both terms are quadratic, otherwise the best value
  // seen, which makes any failure inconclusive rather than violated.
  std::optional<double> f_star = analytic_minimum(p.fidelity, p.prior, lambda, sigma);
  const bool exact = f_star.has_value();
  if (!f_star) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto* ens : {&constant_runs, &decay_runs}) {
      for (const auto& t : *ens) {
        for (const auto& r : t.records) best = std::min(best, r.f_est);
      }
    }
    f_star = best;
  }
  for (auto* tb : {&tb_const, &tb_decay}) {
    tb->F_star = f_star;
    tb->F_star_exact = exact;
  }

  VerifyResult res;
  if (!constant_runs.empty()) {
    BoundReport lemma = check_residual_bound(constant_runs, tb_const, constant_schedule);
    lemma.name = "residual-sum-constant";
    res.reports.push_back(lemma);
    res.reports.push_back(check_constant_step_bound(constant_runs, tb_const, delta0, constant_runs.front().iterations()));
  }
  if (!decay_runs.empty()) {
    const std::uint64_t end = decay_runs.front().iterations();
    const std::uint64_t n = std::min(n_decay, end);
    std::vector<RunTrace> head;
    head.reserve(decay_runs.size());
    for (const auto& t : decay_runs) head.push_back(t.truncated(n));
    BoundReport lemma = check_residual_bound(head, tb_decay, decay_schedule);
    lemma.name = "residual-sum-decreasing";
    res.reports.push_back(lemma);
    res.reports.push_back(check_decreasing_bound(head, tb_decay, decay_schedule, n).report);
    if (end > n) res.reports.push_back(check_summability(decay_runs, n));
    res.reports.push_back(check_residual_decay(head));
    res.rate = rate_slope(head, cfg.verify.alpha);
    res.rate_within_tolerance = std::abs(res.rate.slope - res.rate.expected) <= kRateSlopeTolerance;
  }

  bool violated = false;
  for (const auto& r : res.reports) violated = violated || r.verdict == Verdict::Violated;
  res.exit_code = violated ? kExitFailed : kExitOk;

  json j;
  j["stamp"] = stamp_json(hash, cfg.seed());
  j["from_traces"] = from_traces ? json(*from_traces) : json(nullptr);
  j["runs"] = cfg.n_seeds;
  j["delta0"] = delta0;
  j["decay_c"] = c_decay;
  j["alpha"] = cfg.verify.alpha;
  j["delta_max"] = dmax;
  j["F_star"] = number_or_null(*f_star);
  j["F_star_exact"] = exact;
  json reps = json::array();
  for (const auto& r : res.reports) reps.push_back(report_json(r));
  j["reports"] = reps;
  if (!decay_runs.empty()) {
    j["rate_slope"] = {{"slope", number_or_null(res.rate.slope)},
                       {"expected", res.rate.expected},
                       {"tolerance", kRateSlopeTolerance},
                       {"points", res.rate.points},
                       {"within_tolerance", res.rate_within_tolerance}};
  }
  j["exit_code"] = res.exit_code;
  write_text(dir / cfg.outputs.report, j.dump(2) + "\n");
  write_text(dir / (fs::path(cfg.outputs.report).stem().string() + ".csv"), reports_csv(res.reports, hash, cfg.seed()));

  out << "config_hash=" << hash << " seed=" << cfg.seed() << " runs=" << cfg.n_seeds
      << " delta0=" << format_double(delta0) << " delta_max=" << format_double(dmax)
      << " F*=" << format_double(*f_star) << (exact ? " (exact)" : " (estimated)") << "\n";
  for (const auto& r : res.reports) {
    out << std::left << std::setw(26) << r.name << " lhs=" << format_double(r.lhs) << " rhs=" << format_double(r.rhs)
        << " se=" << format_double(r.mc_stderr) << " -> " << to_string(r.verdict) << "\n";
  }
  if (!decay_runs.empty()) {
    out << std::left << std::setw(26) << "rate-slope" << " slope=" << format_double(res.rate.slope)
        << " expected=" << format_double(res.rate.expected) << " tolerance=" << kRateSlopeTolerance << " -> "
        << (res.rate_within_tolerance ? "within" : "outside") << " tolerance (informational)\n";
  }
  return res;
}

int cmd_verify(const ExperimentConfig& cfg, const CommandContext& ctx, const std::optional<std::string>& from_traces) {
  try {
    return verify(cfg, ctx, from_traces).exit_code;
  } catch (const Refusal& e) {
    err_of(ctx) << "verify refused: " << e.what() << "\n";
    return kExitRefused;
  }
}

// ---------------------------------------------------------------------------
// counterexample

int cmd_counterexample(const CounterexampleArgs& a, const CommandContext& ctx) {
  std::ostream& out = out_of(ctx);
  for (double v : {a.a, a.lambda_g, a.delta}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      err_of(ctx) << "counterexample: a, lambda_g and delta must be positive\n";
      return kExitRefused;
    }
  }
  if (!(a.sigma_noise >= 0.0) || a.iters == 0 || a.seeds < 2) {
    err_of(ctx) << "counterexample: sigma_noise >= 0, iters >= 1 and seeds >= 2 required\n";
    return kExitRefused;
  }
  const CounterexampleReport r = counterexample(a.a, a.lambda_g, a.delta, a.sigma_noise, a.iters, a.seeds, a.seed);
  json j = {{"a", r.a},
            {"lambda_g", r.lambda_g},
            {"delta", r.delta},
            {"sigma_noise", r.sigma_noise},
            {"iters", r.iters},
            {"seeds", r.seeds},
            {"seed", a.seed},
            {"dim", r.dim},
            {"x0", r.x0},
            {"min_mean_grad_sq", r.min_mean_grad_sq},
            {"min_stderr", r.min_stderr},
            {"argmin_k", r.argmin_k},
            {"floor", r.lower_bound},
            {"steady_closed_form", r.steady_closed_form},
            {"steady_empirical", r.steady_empirical},
            {"steady_stderr", r.steady_stderr},
            {"floor_respected", r.floor_respected},
            {"steady_match", r.steady_match},
            {"deterministic_regime", r.deterministic},
            {"version", kVersion}};
  write_text(fs::path(ctx.out_dir) / "counterexample.json", j.dump(2) + "\n");

  out << "inputs: a=" << format_double(r.a) << " lambda_g=" << format_double(r.lambda_g)
      << " delta=" << format_double(r.delta) << " sigma_noise=" << format_double(r.sigma_noise) << " N=" << r.iters
      << " seeds=" << r.seeds << " seed=" << a.seed << " dim=" << r.dim << " x0=" << format_double(r.x0) << "\n";
  out << "min_k mean ||grad F||^2 = " << format_double(r.min_mean_grad_sq) << " (se " << format_double(r.min_stderr)
      << ", k=" << r.argmin_k << ")\n";
  out << "floor sigma_noise^2/4   = " << format_double(r.lower_bound) << " -> "
      << (r.floor_respected ? "respected" : "NOT respected") << "\n";
  out << "steady state: closed form " << format_double(r.steady_closed_form) << ", empirical "
      << format_double(r.steady_empirical) << " (se " << format_double(r.steady_stderr) << ") -> "
      << (r.steady_match ? "match" : "mismatch") << "\n";
  if (r.deterministic) out << "deterministic regime: sigma_noise = 0, no positive floor applies\n";
  return r.floor_respected && !r.deterministic ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------
// prox-oracle

namespace {

// The sweep keeps every minimiser inside [-60, 60]; a wider grid is tried if
// the oracle still lands on the boundary.
double oracle_prox(const oracles::ScalarFn& f, double delta, double x, const std::vector<double>& extra = {}) {
  oracles::OracleConfig oc;
  oc.grid = {-60.0, 60.0, 24001};
  for (int attempt = 0;; ++attempt) {
    try {
      return oracles::grid_prox(f, delta, x, oc, extra);
    } catch (const std::runtime_error&) {
      if (attempt == 3) throw;
      oc.grid.lo *= 10.0;
      oc.grid.hi *= 10.0;
      oc.grid.steps = oc.grid.steps * 10 + 1;
    }
  }
}

double lerp(double lo, double hi, double u) { return lo + (hi - lo) * u; }

// 2x2 orthonormal Walsh-Hadamard basis (symmetric, its own inverse). It
// diagonalises every 2x2 periodic convolution.
constexpr double kH[4][4] = {{0.5, 0.5, 0.5, 0.5},
                             {0.5, -0.5, 0.5, -0.5},
                             {0.5, 0.5, -0.5, -0.5},
                             {0.5, -0.5, -0.5, 0.5}};

std::array<double, 4> hadamard(const std::array<double, 4>& v) {
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i] += kH[i][j] * v[j];
  }
  return out;
}

}  // namespace

ProxOracleResult prox_oracle_sweep(std::uint64_t seed, std::size_t cases, const ProxFn& prox_override) {
  const ProxFn prox = prox_override ? prox_override : ProxFn([](const Fidelity& f, double d, const Vector& x) {
    return f.prox(d, x);
  });
  const RngStream root = RngStream(seed).derive("prox-oracle");
  ProxOracleResult res;
  res.tolerance = 1e-4;

  const auto quadratic = [](double y, double sy) {
    return [y, sy](double z) { return (z - y) * (z - y) / (2.0 * sy * sy); };
  };
  const auto zero = [](double) { return 0.0; };

  const std::array<FidelityKind, 4> kinds = {FidelityKind::DenoiseQuadratic, FidelityKind::InpaintNoisy,
                                             FidelityKind::InpaintNoiseless, FidelityKind::DeblurCirculant};
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    const FidelityKind kind = kinds[ki];
    ProxKindResult kr;
    kr.kind = kind;
    const auto record = [&](double a, double b) { kr.max_error = std::max(kr.max_error, std::abs(a - b)); };

    if (kind == FidelityKind::InpaintNoisy) {
      // Reference case: x = 2, y = 0, sigma_y = 1, delta = 1 gives 1.
      const Fidelity f = Fidelity::inpaint(Vector{1.0}, Vector{0.0}, 1.0);
      const double got = prox(f, 1.0, Vector{2.0})[0];
      record(got, 1.0);
      record(got, oracle_prox(quadratic(0.0, 1.0), 1.0, 2.0));
      ++kr.cases;
    }

    for (std::size_t c = 0; c < cases; ++c) {
      const auto u = uniform_draw(root.with_run(ki).with_sample(c), 16);
      const double delta = lerp(0.05, 5.0, u[0]);
      const double sy = lerp(0.2, 2.0, u[1]);
      const double x = lerp(-3.0, 3.0, u[2]);
      const double y = lerp(-2.0, 2.0, u[3]);
      switch (kind) {
        case FidelityKind::DenoiseQuadratic: {
          const Fidelity f = Fidelity::denoise_quadratic(Vector{y}, sy);
          record(prox(f, delta, Vector{x})[0], oracle_prox(quadratic(y, sy), delta, x));
          break;
        }
        case FidelityKind::InpaintNoisy:
        case FidelityKind::InpaintNoiseless: {
          // One observed and one missing pixel per case.
          const bool noiseless = kind == FidelityKind::InpaintNoiseless;
          const double s = noiseless ? 0.0 : sy;
          const double x2 = lerp(-3.0, 3.0, u[4]);
          const Fidelity f = Fidelity::inpaint(Vector{1.0, 0.0}, Vector{y, 0.0}, s);
          const Vector got = prox(f, delta, Vector{x, x2});
          if (noiseless) {
            const auto indicator = [y](double z) {
              return z == y ? 0.0 : std::numeric_limits<double>::infinity();
            };
            record(got[0], oracle_prox(indicator, delta, x, {y}));
          } else {
            record(got[0], oracle_prox(quadratic(y, s), delta, x));
          }
          record(got[1], oracle_prox(zero, delta, x2));
          break;
        }
        case FidelityKind::DeblurCirculant: {
          // 2x2 image, 2x2 kernel. The explicit circulant matrix is rotated
          // into the Hadamard basis, where the prox splits per coordinate.
          std::array<double, 4> taps{};
          double total = 0.0;
          for (int i = 0; i < 4; ++i) total += taps[i] = lerp(0.1, 1.0, u[4 + i]);
          for (auto& t : taps) t /= total;
          std::array<double, 4> yv{}, xv{};
          for (int i = 0; i < 4; ++i) {
            yv[i] = i == 0 ? y : lerp(-2.0, 2.0, u[8 + i]);
            xv[i] = i == 0 ? x : lerp(-3.0, 3.0, u[12 + i]);
          }
          // On a 2x2 periodic grid every offset is its own negative, so
          // convolution and correlation coincide: A[p][q] = k[(p - q) mod 2].
          double A[4][4];
          for (int p = 0; p < 4; ++p) {
            for (int q = 0; q < 4; ++q) {
              const int dr = ((p / 2) - (q / 2) + 2) % 2, dc = ((p % 2) - (q % 2) + 2) % 2;
              // Tap (a, b) sits at offset (a - 1, b - 1) mod 2 = ((a + 1) % 2, (b + 1) % 2).
              const int a = (dr + 1) % 2, b = (dc + 1) % 2;
              A[p][q] = taps[static_cast<std::size_t>(a * 2 + b)];
            }
          }
          std::array<double, 4> eig{};
          for (int j = 0; j < 4; ++j) {
            for (int p = 0; p < 4; ++p) {
              for (int q = 0; q < 4; ++q) eig[j] += kH[j][p] * A[p][q] * kH[q][j];
            }
          }
          const auto hx = hadamard(xv), hy = hadamard(yv);
          std::array<double, 4> hu{};
          for (int j = 0; j < 4; ++j) {
            const double lam = eig[j], b = hy[j];
            hu[j] = oracle_prox([lam, b, sy](double z) { return (lam * z - b) * (lam * z - b) / (2.0 * sy * sy); },
                                delta, hx[j]);
          }
          const auto want = hadamard(hu);
          BlurKernel k{Shape{2, 2}, std::vector<double>(taps.begin(), taps.end())};
          const Fidelity f = Fidelity::deblur(k, Vector({yv[0], yv[1], yv[2], yv[3]}, Shape{2, 2}), sy);
          const Vector got = prox(f, delta, Vector({xv[0], xv[1], xv[2], xv[3]}, Shape{2, 2}));
          for (int i = 0; i < 4; ++i) record(got[static_cast<std::size_t>(i)], want[i]);
          break;
        }
      }
      ++kr.cases;
    }
    res.kinds.push_back(kr);
  }
  res.pass = std::all_of(res.kinds.begin(), res.kinds.end(),
                         [&](const ProxKindResult& k) { return k.max_error < res.tolerance; });
  return res;
}

int cmd_prox_oracle(std::uint64_t seed, const CommandContext& ctx, const ProxFn& prox) {
  std::ostream& out = out_of(ctx);
  const ProxOracleResult r = prox_oracle_sweep(seed, 100, prox);
  json kinds = json::array();
  for (const auto& k : r.kinds) {
    out << std::left << std::setw(20) << to_string(k.kind) << " cases=" << k.cases
        << " max_error=" << format_double(k.max_error) << (k.max_error < r.tolerance ? " ok" : " FAIL") << "\n";
    kinds.push_back({{"kind", to_string(k.kind)}, {"cases", k.cases}, {"max_error", k.max_error}});
  }
  out << (r.pass ? "pass" : "fail") << " (tolerance " << r.tolerance << ")\n";
  const json j = {{"seed", seed}, {"version", kVersion}, {"tolerance", r.tolerance}, {"pass", r.pass}, {"kinds", kinds}};
  write_text(fs::path(ctx.out_dir) / "prox-oracle.json", j.dump(2) + "\n");
  return r.pass ? kExitOk : kExitFailed;
}

}  // namespace snorelab::cli
