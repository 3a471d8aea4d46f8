#include "snorelab/cli/problem.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "snorelab/cli/pgm.hpp"
#include "snorelab/core/trace.hpp"
#include "snorelab/solvers/solvers.hpp"
#include "snorelab/theory/theory.hpp"

namespace snorelab::cli {

namespace {

Vector shaped(std::vector<double> v, const std::optional<Shape>& shape) {
  return shape ? Vector(std::move(v), *shape) : Vector(std::move(v));
}

Vector read_mask_file(const std::string& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw ConfigError("problem.mask_file: cannot open '" + path + "'");
  std::vector<double> v;
  double x = 0.0;
  while (in >> x) {
    if (x != 0.0 && x != 1.0) throw ConfigError("problem.mask_file: entries must be 0 or 1");
    v.push_back(x);
  }
  if (!in.eof()) throw ConfigError("problem.mask_file: non-numeric entry in '" + path + "'");
  if (v.size() != d) throw ConfigError("problem.mask_file: expected " + std::to_string(d) + " entries");
  return Vector(std::move(v));
}

std::optional<Vector> ground_truth(const ExperimentConfig& cfg, const GmmPrior& prior) {
  const std::string& src = cfg.problem.ground_truth;
  const auto& shape = cfg.problem.shape;
  if (src == "none") return std::nullopt;
  if (src == "prior-sample") {
    Vector x = prior.sample(RngStream(cfg.seed()).derive("ground-truth"));
    if (shape) x.set_shape(*shape);
    return x;
  }
  if (src == "prior-mean") {
    Vector x(prior.dim(), 0.0);
    for (std::size_t i = 0; i < prior.components(); ++i) x.axpy(prior.weight(i), prior.mean(i));
    if (shape) x.set_shape(*shape);
    return x;
  }
  Vector x = read_pgm(src);
  if (!shape || !(*x.shape() == *shape)) {
    throw ConfigError("problem.ground_truth: image '" + src + "' does not match problem.shape");
  }
  return x;
}

}  // namespace

GmmPrior build_prior(const ExperimentConfig& cfg) {
  const auto& pr = cfg.prior;
  const std::size_t d = cfg.dim();
  std::vector<Vector> means;
  for (const auto& m : pr.means) {
    switch (m.kind) {
      case MeanSpec::Kind::Constant: means.emplace_back(d, m.value); break;
      case MeanSpec::Kind::Explicit: means.emplace_back(m.values); break;
      case MeanSpec::Kind::Pattern: means.push_back(pattern_image(m.pattern, *cfg.problem.shape)); break;
    }
  }
  std::vector<double> variances = pr.variances;
  if (variances.size() == 1) variances.assign(pr.weights.size(), variances.front());
  return GmmPrior(pr.weights, std::move(means), std::move(variances));
}

Problem build_problem(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto& pc = cfg.problem;
  const std::size_t d = cfg.dim();
  GmmPrior prior = build_prior(cfg);
  auto denoiser = std::make_shared<const GmmDenoiser>(prior);
  std::optional<Vector> truth = ground_truth(cfg, prior);

  std::optional<Vector> mask;
  if (pc.mask) mask = Vector(*pc.mask);
  if (!pc.mask_file.empty()) mask = read_mask_file(pc.mask_file, d);
  if (mask && pc.shape) mask->set_shape(*pc.shape);

  const auto fidelity = [&]() -> Fidelity {
    const BlurKernel kernel = BlurKernel::uniform(pc.kernel_size);
    if (pc.observation) {
      Vector y = shaped(*pc.observation, pc.shape);
      switch (pc.kind) {
        case FidelityKind::DenoiseQuadratic: return Fidelity::denoise_quadratic(std::move(y), pc.sigma_y);
        case FidelityKind::InpaintNoisy:
        case FidelityKind::InpaintNoiseless: return Fidelity::inpaint(*mask, std::move(y), pc.sigma_y);
        case FidelityKind::DeblurCirculant: return Fidelity::deblur(kernel, std::move(y), pc.sigma_y);
      }
    }
    if (!truth) throw ConfigError("problem.ground_truth: 'none' requires an inline observation problem.y");
    FidelitySpec spec;
    spec.kind = pc.kind;
    spec.sigma_y = pc.sigma_y;
    spec.missing_prob = pc.missing_prob;
    spec.mask = mask;
    if (pc.kind == FidelityKind::DeblurCirculant) spec.kernel = kernel;
    return degrade(spec, *truth, RngStream(cfg.seed()).derive("degradation"));
  }();

  Vector x0;
  if (pc.x0) {
    x0 = pc.x0->size() == 1 ? Vector(d, pc.x0->front()) : Vector(*pc.x0);
    if (pc.shape) x0.set_shape(*pc.shape);
  } else {
    x0 = default_initialization(fidelity);
  }

  Problem p{std::move(prior), std::move(denoiser), fidelity, std::move(truth), std::move(x0), {}};
  const double dmax = delta_max_for(p, cfg);
  const double c = cfg.solver.schedule.c();
  if (c > dmax) {
    p.notes.push_back("practical mode: step " + format_double(c) + " exceeds delta_max " + format_double(dmax) +
                      "; the convergence bounds do not apply to this run");
  }
  if (cfg.n_init) p.notes.push_back("n_init=" + *cfg.n_init + " (recorded, unused)");
  return p;
}

double certified_L(const Problem& p, const ExperimentConfig& cfg, double sigma) {
  ProbePlan plan;
  plan.random_probes = cfg.prior.lipschitz_probes;
  return certified_lipschitz(p.denoiser->lipschitz(sigma, plan), cfg.prior.lipschitz_safety);
}

double delta_max_for(const Problem& p, const ExperimentConfig& cfg) {
  const auto& s = cfg.solver;
  double lambda = s.lambda, sigma = s.sigma;
  if (s.anneal) {
    lambda = std::max(s.anneal->lambda_first, s.anneal->lambda_last);
    sigma = std::min(s.anneal->sigma_first, s.anneal->sigma_last);
  }
  const FidelityConstants fc = p.fidelity.constants();
  return max_step(lambda, sigma, certified_L(p, cfg, sigma), fc.rho);
}

}  // namespace snorelab::cli
