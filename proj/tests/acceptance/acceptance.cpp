// Acceptance harness: one PASS/FAIL line per criterion.
//
//   snorelab_acceptance                 all criteria
//   snorelab_acceptance --criterion 5   one criterion (repeatable)
//
// Exit status is 0 iff every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "snorelab/cli/commands.hpp"
#include "snorelab/cli/config.hpp"
#include "snorelab/cli/problem.hpp"
#include "snorelab/core/rng.hpp"
#include "snorelab/core/trace.hpp"
#include "snorelab/oracles/oracles.hpp"
#include "snorelab/prior/denoiser.hpp"
#include "snorelab/regularizer/regularizer.hpp"
#include "snorelab/solvers/solvers.hpp"
#include "snorelab/theory/theory.hpp"

using namespace snorelab;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 0;

// Pinned tolerances.
constexpr double kIdentityTol = 1e-5;        // 1: sup-norm, residual vs fd gradient of h
constexpr double kLipschitzSlack = 1e-9;     // 2: absolute slack on (L + 1) / sigma^2
constexpr double kBiasSe = 4.0;              // 3: estimate <= bound + 4 se
constexpr double kProxTol = 1e-4;            // 4
constexpr double kSummabilityGrowth = 0.05;  // 7
constexpr double kRateTarget = -0.25;        // 8: alpha - 1
constexpr double kRateTol = 0.15;            // 8
constexpr double kDecayRatio = 0.10;         // 9
constexpr double kRestorationGainDb = 3.0;   // 11
constexpr double kTrendWindow = 0.10;        // 6: final 10% of the iterations

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  std::size_t threads = 1;
};

std::string num(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::CommandContext quiet(const fs::path& dir, std::size_t threads, std::ostringstream& sink) {
  fs::create_directories(dir);
  return cli::CommandContext{dir.string(), threads, &sink, &sink};
}

const BoundReport& find_report(const std::vector<BoundReport>& reps, const std::string& name) {
  for (const auto& r : reps) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing report " + name);
}

std::string describe(const BoundReport& r) {
  return r.name + " lhs=" + num(r.lhs, 6) + " rhs=" + num(r.rhs, 6) + " se=" + num(r.mc_stderr, 3) + " -> " +
         to_string(r.verdict);
}

// ---------------------------------------------------------------------------
// 1. residual of the denoiser equals the gradient of its potential

Outcome identity(const Context&) {
  const RngStream root = RngStream(kSeed).derive("acceptance-identity");
  const double h = oracles::OracleConfig{}.fd_step;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto u = uniform_draw(root.at(i), 32);
    std::size_t p = 0;
    const std::size_t K = 1 + static_cast<std::size_t>(u[p++] * 3.0);
    const std::size_t d = 1 + static_cast<std::size_t>(u[p++] * 4.0);
    std::vector<double> w(K), var(K);
    std::vector<Vector> mu;
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = 0.1 + u[p++];
      wsum += w[k];
      var[k] = 0.1 + 0.9 * u[p++];
      Vector m(d);
      for (std::size_t j = 0; j < d; ++j) m[j] = -2.0 + 4.0 * u[p++];
      mu.push_back(std::move(m));
    }
    for (double& x : w) x /= wsum;
    const double sigma = 0.2 + 1.3 * u[p++];
    Vector x = mu.front();
    for (std::size_t j = 0; j < d; ++j) x[j] += -2.0 + 4.0 * u[p++];

    const GmmDenoiser den(GmmPrior(w, mu, var));
    const Vector resid = x - den.denoise(x, sigma);
    const Vector fd = oracles::fd_gradient([&](const Vector& v) { return den.potential(v, sigma); }, x, h);
    worst = std::max(worst, (resid - fd).max_abs());
  }
  return {worst <= kIdentityTol, "100 cases, max |r - fd grad h| = " + num(worst, 3) + " (tol " + num(kIdentityTol) + ")"};
}

// ---------------------------------------------------------------------------
// 2. Lipschitz ratios of grad g_sigma

struct PriorCase {
  std::string name;
  GmmPrior prior;
  double sigma;
};

std::vector<PriorCase> lipschitz_cases() {
  return {
      {"K=1,d=4", GmmPrior::gaussian(Vector{0.1, -0.3, 0.5, 0.2}, 0.5), 0.7},
      {"K=2,d=1", GmmPrior({0.5, 0.5}, {Vector{-1.0}, Vector{1.0}}, {0.05, 0.05}), 0.5},
      {"K=2,d=2", GmmPrior({0.3, 0.7}, {Vector{0.0, 0.0}, Vector{1.5, 0.5}}, {0.1, 0.3}), 0.3},
  };
}

Outcome lipschitz(const Context&) {
  const RngStream root = RngStream(kSeed).derive("acceptance-lipschitz");
  bool pass = true;
  std::string detail;
  std::uint64_t c = 0;
  for (const auto& pc : lipschitz_cases()) {
    const GmmDenoiser den(pc.prior);
    const double L = certified_lipschitz(den.lipschitz(pc.sigma));
    const double bound = (L + 1.0) / (pc.sigma * pc.sigma);
    const std::size_t d = pc.prior.dim();
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      const auto u = uniform_draw(root.at(c, i), 2 * d + 1);
      Vector x(d), y(d);
      // Alternate close pairs (local slope) with far pairs.
      const double scale = i % 2 == 0 ? 1e-3 : 0.05 + 3.0 * u[2 * d];
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = -2.5 + 5.0 * u[j];
        y[j] = x[j] + scale * (2.0 * u[d + j] - 1.0);
      }
      const double gap = (x - y).norm();
      if (gap == 0.0) continue;
      const double ratio = (exact_grad_g(den, pc.sigma, x) - exact_grad_g(den, pc.sigma, y)).norm() / gap;
      worst = std::max(worst, ratio / bound);
      pass = pass && ratio <= bound + kLipschitzSlack;
    }
    ++c;
    detail += (detail.empty() ? "" : "; ") + pc.name + " max ratio/bound=" + num(worst, 4);
  }
  return {pass, "200 pairs each: " + detail};
}

// ---------------------------------------------------------------------------
// 3. second moment of the stochastic-gradient bias

Outcome bias(const Context&) {
  const RngStream root = RngStream(kSeed).derive("acceptance-bias");
  const std::vector<PriorCase> cases = {
      {"K=1", GmmPrior::gaussian(Vector{0.0}, 1.0), 1.0},
      {"K=2", GmmPrior({0.5, 0.5}, {Vector{-1.0}, Vector{1.0}}, {0.05, 0.05}), 0.5},
  };
  bool pass = true;
  double worst = -1e300;
  std::size_t probes = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const GmmDenoiser den(cases[c].prior);
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Vector x{-2.5 + 5.0 * static_cast<double>(i) / 9.0};
      const BiasReport r = bias_second_moment(den, cases[c].sigma, x, 10000, root.at(c, i));
      pass = pass && r.estimate <= r.bound + kBiasSe * r.std_error;
      worst = std::max(worst, (r.estimate - r.bound) / r.bound);
      ++probes;
    }
  }
  return {pass, std::to_string(probes) + " probes, n=10000, d=1: max (E|zeta|^2 - 2L^2/sigma^2)/bound = " +
                    num(worst, 4)};
}

// ---------------------------------------------------------------------------
// 4. closed-form proxes against the grid oracle

Outcome prox(const Context&) {
  const auto res = cli::prox_oracle_sweep(kSeed, 100);
  double worst = 0.0;
  std::string per;
  for (const auto& k : res.kinds) {
    worst = std::max(worst, k.max_error);
    per += std::string(per.empty() ? "" : " ") + to_string(k.kind) + "=" + num(k.max_error, 2);
  }
  const Fidelity f = Fidelity::inpaint(Vector{1.0}, Vector{0.0}, 1.0);
  const double fixed = f.prox(1.0, Vector{2.0})[0];
  const bool fixed_ok = std::abs(fixed - 1.0) < kProxTol;
  return {res.pass && worst < kProxTol && fixed_ok,
          "max error " + per + "; noisy inpaint x=2,y=0,sigma_y=1,delta=1 -> " + num(fixed, 10)};
}

// ---------------------------------------------------------------------------
// 5-9. certified suite (shared runs)

struct Suite {
  cli::VerifyResult result;
  double delta_max = 0.0;
};

std::map<std::string, std::shared_ptr<Suite>> g_suites;

const Suite& suite(const Context& ctx) {
  const fs::path dir = ctx.work / "verify";
  auto& slot = g_suites[dir.string() + "#" + std::to_string(ctx.threads)];
  if (!slot) {
    slot = std::make_shared<Suite>();
    std::ostringstream sink;
    const auto cfg = cli::default_verify_config();
    slot->result = cli::verify(cfg, quiet(dir, ctx.threads, sink));
    const auto p = cli::build_problem(cfg);
    slot->delta_max = cli::delta_max_for(p, cfg);
  }
  return *slot;
}

Outcome lemma2(const Context& ctx) {
  const auto& r = find_report(suite(ctx).result.reports, "residual-sum-constant");
  return {r.verdict == Verdict::Certified, "delta=delta_max/2, N=500, 64 seeds: " + describe(r)};
}

Outcome constant_step(const Context& ctx) {
  const auto& s = suite(ctx);
  const auto& r = find_report(s.result.reports, "constant-step");

  auto cfg = cli::default_verify_config();
  const auto p = cli::build_problem(cfg);
  SolverConfig sc = cfg.solver;
  sc.iters = cfg.verify.iters;
  std::vector<double> means;
  std::ostringstream csv;
  csv << "delta,run,final_window_mean_gradF_sq\n";
  const auto w = static_cast<std::size_t>(kTrendWindow * static_cast<double>(sc.iters));
  for (double frac : {1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0}) {
    sc.schedule = StepSchedule::constant(frac * s.delta_max);
    const auto runs = run_ensemble(sc, p.fidelity, *p.denoiser, p.x0, cfg.n_seeds, ctx.threads);
    double total = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& rec = runs[i].records;
      double m = 0.0;
      for (std::size_t k = rec.size() - w; k < rec.size(); ++k) m += rec[k].grad_sq_est;
      m /= static_cast<double>(w);
      total += m;
      csv << format_double(sc.schedule.value(0)) << "," << i << "," << format_double(m) << "\n";
    }
    means.push_back(total / static_cast<double>(runs.size()));
  }
  fs::create_directories(ctx.work / "trend");
  std::ofstream(ctx.work / "trend" / "trend.csv", std::ios::binary) << csv.str();

  const bool increasing = means[0] < means[1] && means[1] < means[2];
  return {r.verdict == Verdict::Certified && increasing,
          describe(r) + "; final-window mean |grad F|^2 at delta_max/{8,4,2} = " + num(means[0]) + ", " +
              num(means[1]) + ", " + num(means[2]) + (increasing ? " (increasing)" : " (NOT increasing)")};
}

Outcome decreasing(const Context& ctx) {
  const auto& reps = suite(ctx).result.reports;
  const auto& r = find_report(reps, "decreasing-step");
  const auto& s = find_report(reps, "summability");
  const bool ok = r.verdict == Verdict::Certified && s.lhs < kSummabilityGrowth;
  return {ok, "alpha=0.75, N=10^4, 64 seeds: " + describe(r) + "; worst partial-sum growth N->2N = " +
                  num(100.0 * s.lhs, 3) + "% (limit " + num(100.0 * kSummabilityGrowth) + "%)"};
}

Outcome rate(const Context& ctx) {
  const auto& fit = suite(ctx).result.rate;
  const bool ok = std::abs(fit.slope - kRateTarget) <= kRateTol;
  return {ok, "log-log slope of running-min mean |grad F|^2 = " + num(fit.slope) + ", target " + num(kRateTarget) +
                  " +/- " + num(kRateTol) + " (" + std::to_string(fit.points) + " points)"};
}

Outcome residual_decay(const Context& ctx) {
  const auto& r = find_report(suite(ctx).result.reports, "residual-decay");
  double ratio = 0.0;
  for (const auto& [k, v] : r.details) {
    if (k == "ratio") ratio = v;
  }
  return {r.lhs < r.rhs, "last-5% / first-5% mean residual = " + num(ratio, 4) + " (limit " + num(kDecayRatio) + ")"};
}

// ---------------------------------------------------------------------------
// 10. counterexample

Outcome counterexample_floor(const Context& ctx) {
  cli::CounterexampleArgs a;
  a.a = 1.0;
  a.lambda_g = 1.0;
  a.delta = 0.1;
  a.sigma_noise = 1.0;
  a.iters = 10000;
  a.seeds = 256;
  a.seed = kSeed;
  std::ostringstream sink;
  cli::cmd_counterexample(a, quiet(ctx.work / "counterexample", ctx.threads, sink));
  const auto j = nlohmann::json::parse(slurp(ctx.work / "counterexample" / "counterexample.json"));
  const bool floor = j["floor_respected"].get<bool>();
  const bool steady = j["steady_match"].get<bool>();
  return {floor && steady,
          "min_k mean |grad F|^2 = " + num(j["min_mean_grad_sq"].get<double>()) + " vs floor " +
              num(j["floor"].get<double>()) + (floor ? " (respected)" : " (NOT respected)") + "; steady state " +
              num(j["steady_empirical"].get<double>()) + " vs closed form " +
              num(j["steady_closed_form"].get<double>()) + (steady ? " (match)" : " (mismatch)")};
}

// ---------------------------------------------------------------------------
// 11. restoration sanity

constexpr const char* kRestorationConfig = R"({
  "method": "snore-prox",
  "problem": {"kind": "inpaint-noisy", "shape": [32, 32], "sigma_y": "5/255", "missing_prob": 0.5,
              "ground_truth": "prior-sample"},
  "prior": {"weights": ["1/3", "1/3", "1/3"], "means": ["ramp-x", "ramp-y", "disk"], "variances": [0.0025]},
  "schedule": {"kind": "constant", "c": 0.002},
  "solver": {"iters": 1500},
  "anneal": {"stages": 10, "sigma_first": "50/255", "sigma_last": "5/255", "lambda_first": 0.15, "lambda_last": 0.5},
  "telemetry": {"record_every": 10},
  "ensemble": {"n_seeds": 1, "base_seed": 0}
})";

Outcome restoration(const Context& ctx) {
  std::ostringstream sink;
  auto cfg = cli::parse_config_text(kRestorationConfig);
  cli::cmd_run(cfg, quiet(ctx.work / "restoration", ctx.threads, sink));
  const auto j = nlohmann::json::parse(slurp(ctx.work / "restoration" / "run.json"));

  auto base = cfg;
  base.solver.anneal.reset();
  base.solver.lambda = 0.0;
  base.solver.sigma = 5.0 / 255.0;
  cli::cmd_run(base, quiet(ctx.work / "restoration-baseline", ctx.threads, sink));
  const auto jb = nlohmann::json::parse(slurp(ctx.work / "restoration-baseline" / "run.json"));

  const double obs = j["observation_psnr"].get<double>();
  const double fin = j["runs"][0]["psnr_final"].get<double>();
  const double zero = jb["runs"][0]["psnr_final"].get<double>();
  const bool ok = fin >= obs + kRestorationGainDb && fin > zero;
  return {ok, "psnr final=" + num(fin) + " dB, observation=" + num(obs) + " dB, lambda=0 baseline=" + num(zero) +
                  " dB (need gain >= " + num(kRestorationGainDb) + " dB and > baseline)"};
}

// ---------------------------------------------------------------------------
// 12. determinism across worker counts

using Criterion = std::function<Outcome(const Context&)>;

struct Entry {
  int id;
  std::string title;
  double budget_s;  // 0: none
  Criterion fn;
};

std::vector<Entry> entries();

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

Outcome determinism(const Context& ctx) {
  const std::vector<std::size_t> workers = {1, 4};
  std::vector<std::map<std::string, std::string>> outputs;
  for (std::size_t t : workers) {
    const Context sub{ctx.work / ("threads-" + std::to_string(t)), t};
    fs::remove_all(sub.work);
    for (const auto& e : entries()) {
      if (e.id >= 5 && e.id <= 11) e.fn(sub);
    }
    outputs.push_back(tree(sub.work));
  }
  std::size_t csv = 0, differing = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : outputs[0]) {
    if (name.ends_with(".csv")) ++csv;
    const auto it = outputs[1].find(name);
    if (it == outputs[1].end() || it->second != bytes) {
      ++differing;
      if (first_diff.empty()) first_diff = name;
    }
  }
  const bool same_set = outputs[0].size() == outputs[1].size();
  const bool ok = same_set && differing == 0 && csv > 0;
  return {ok, std::to_string(outputs[0].size()) + " files (" + std::to_string(csv) +
                  " CSV) from criteria 5-11 with 1 vs 4 workers: " +
                  (ok ? std::string("byte-identical") : std::to_string(differing) + " differ, e.g. " + first_diff)};
}

std::vector<Entry> entries() {
  return {
      {1, "denoiser residual is the gradient of its potential", 5, identity},
      {2, "Lipschitz ratios of grad g_sigma", 10, lipschitz},
      {3, "stochastic-gradient bias second moment", 30, bias},
      {4, "prox oracle sweep", 10, prox},
      {5, "residual-sum bound, constant step", 60, lemma2},
      {6, "constant-step bound and step-size trend", 120, constant_step},
      {7, "decreasing-step bound and summability", 180, decreasing},
      {8, "rate of the running minimum", 180, rate},
      {9, "residual decay", 180, residual_decay},
      {10, "counterexample floor and steady state", 60, counterexample_floor},
      {11, "restoration sanity", 60, restoration},
      {12, "determinism across worker counts", 0, determinism},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snorelab acceptance criteria"};
  std::vector<int> selected;
  std::string work = (fs::temp_directory_path() / "snorelab-acceptance").string();
  std::size_t threads = 1;
  app.add_option("--criterion,-c", selected, "criterion number (repeatable)")->check(CLI::Range(1, 12));
  app.add_option("--work", work, "scratch directory for outputs");
  app.add_option("--threads", threads, "worker threads for criteria 5-11")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::set<int> want(selected.begin(), selected.end());
  const Context ctx{work, threads};
  fs::create_directories(ctx.work);

  int failed = 0;
  for (const auto& e : entries()) {
    if (!want.empty() && !want.count(e.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.fn(ctx);
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = e.budget_s == 0.0 || secs < e.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s [%.1f s%s%s]\n", e.id, pass ? "PASS" : "FAIL", e.title.c_str(),
                o.detail.c_str(), secs, e.budget_s > 0.0 ? (" / " + num(e.budget_s) + " s").c_str() : "",
                in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
