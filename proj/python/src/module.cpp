#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <sstream>

#include "snorelab/cli/commands.hpp"
#include "snorelab/cli/config.hpp"
#include "snorelab/cli/problem.hpp"
#include "snorelab/core/rng.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/prior/denoiser.hpp"
#include "snorelab/prior/gmm.hpp"
#include "snorelab/regularizer/regularizer.hpp"
#include "snorelab/solvers/solvers.hpp"
#include "snorelab/theory/theory.hpp"

namespace py = pybind11;
using namespace snorelab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vector to_vec(const Array& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  if (a.ndim() == 2) return Vector(std::move(v), Shape{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))});
  if (a.ndim() > 2) throw py::value_error("expected a 1-D or 2-D array");
  return Vector(std::move(v));
}

py::array_t<double> to_np(const Vector& v) {
  std::vector<py::ssize_t> dims{static_cast<py::ssize_t>(v.size())};
  if (v.shape()) dims = {static_cast<py::ssize_t>(v.shape()->height), static_cast<py::ssize_t>(v.shape()->width)};
  py::array_t<double> out(dims);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

GmmPrior make_prior(std::vector<double> weights, const Array& means, std::vector<double> variances) {
  if (means.ndim() != 2) throw py::value_error("means must be a K x d array");
  const auto K = static_cast<std::size_t>(means.shape(0)), d = static_cast<std::size_t>(means.shape(1));
  std::vector<Vector> mu;
  for (std::size_t i = 0; i < K; ++i) mu.emplace_back(std::vector<double>(means.data() + i * d, means.data() + (i + 1) * d));
  if (variances.size() == 1 && K > 1) variances.assign(K, variances.front());
  return GmmPrior(std::move(weights), std::move(mu), std::move(variances));
}

cli::ExperimentConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return cli::default_verify_config();
  if (py::isinstance<py::str>(cfg)) return cli::parse_config_text(cfg.cast<std::string>());
  const auto dumps = py::module_::import("json").attr("dumps");
  return cli::parse_config_text(dumps(cfg).cast<std::string>());
}

py::dict trace_dict(const RunTrace& t) {
  const auto n = static_cast<py::ssize_t>(t.records.size());
  py::array_t<std::uint64_t> k(n);
  py::array_t<double> delta(n), lambda(n), sigma(n), residual(n), f(n), f_se(n), g(n), g_se(n), psnr(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = t.records[static_cast<std::size_t>(i)];
    k.mutable_at(i) = r.k;
    delta.mutable_at(i) = r.delta;
    lambda.mutable_at(i) = r.lambda;
    sigma.mutable_at(i) = r.sigma;
    residual.mutable_at(i) = r.residual;
    f.mutable_at(i) = r.f_est;
    f_se.mutable_at(i) = r.f_stderr;
    g.mutable_at(i) = r.grad_sq_est;
    g_se.mutable_at(i) = r.grad_sq_stderr;
    psnr.mutable_at(i) = r.psnr.value_or(std::numeric_limits<double>::quiet_NaN());
  }
  py::dict d;
  d["k"] = k;
  d["delta"] = delta;
  d["lambda"] = lambda;
  d["sigma"] = sigma;
  d["residual"] = residual;
  d["F"] = f;
  d["F_stderr"] = f_se;
  d["gradF_sq"] = g;
  d["gradF_sq_stderr"] = g_se;
  d["psnr"] = psnr;
  return d;
}

py::dict report_dict(const BoundReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["lhs"] = r.lhs;
  d["rhs"] = r.rhs;
  d["margin"] = r.margin;
  d["mc_stderr"] = r.mc_stderr;
  d["verdict"] = std::string(to_string(r.verdict));
  py::dict details;
  for (const auto& [k, v] : r.details) details[py::str(k)] = v;
  d["details"] = details;
  return d;
}

}  // namespace

PYBIND11_MODULE(_snorelab, m) {
  m.doc() = "Stochastic proximal plug-and-play solvers with analytic GMM denoisers";
  m.attr("__version__") = kVersion;

  m.def("philox4x32", &philox4x32, py::arg("counter"), py::arg("key"));
  m.def("gaussian_draw", [](std::uint64_t seed, std::uint64_t run, std::uint64_t iteration, std::uint64_t sample,
                            std::size_t n) { return to_np(gaussian_draw(RngStream(seed, {run, iteration, sample}), n)); },
        py::arg("seed"), py::arg("run") = 0, py::arg("iteration") = 0, py::arg("sample") = 0, py::arg("n") = 1);

  py::class_<GmmPrior>(m, "GmmPrior")
      .def(py::init(&make_prior), py::arg("weights"), py::arg("means"), py::arg("variances"))
      .def_property_readonly("components", &GmmPrior::components)
      .def_property_readonly("dim", &GmmPrior::dim)
      .def("sample", [](const GmmPrior& p, std::uint64_t seed) { return to_np(p.sample(RngStream(seed))); },
           py::arg("seed"))
      .def("score", [](const GmmPrior& p, double sigma, const Array& x) { return to_np(score(p, sigma, to_vec(x))); },
           py::arg("sigma"), py::arg("x"))
      .def("log_density", [](const GmmPrior& p, double sigma, const Array& x) {
        return smoothed_log_density(p, sigma, to_vec(x));
      }, py::arg("sigma"), py::arg("x"))
      .def("responsibilities", [](const GmmPrior& p, double sigma, const Array& x) {
        return responsibilities(p, sigma, to_vec(x));
      }, py::arg("sigma"), py::arg("x"));

  py::class_<GmmDenoiser>(m, "GmmDenoiser")
      .def(py::init<GmmPrior>(), py::arg("prior"))
      .def_property_readonly("prior", &GmmDenoiser::prior)
      .def("__call__", [](const GmmDenoiser& d, const Array& x, double sigma) { return to_np(d.denoise(to_vec(x), sigma)); },
           py::arg("x"), py::arg("sigma"))
      .def("potential", [](const GmmDenoiser& d, const Array& x, double sigma) { return d.potential(to_vec(x), sigma); },
           py::arg("x"), py::arg("sigma"))
      .def("lipschitz", [](const GmmDenoiser& d, double sigma) {
        const auto est = d.lipschitz(sigma);
        return py::make_tuple(est.value, est.exact, certified_lipschitz(est));
      }, py::arg("sigma"), "(estimate, exact, certified value)")
      .def("grad_g", [](const GmmDenoiser& d, double sigma, const Array& x) {
        return to_np(exact_grad_g(d, sigma, to_vec(x)));
      }, py::arg("sigma"), py::arg("x"))
      .def("stoch_grad_g", [](const GmmDenoiser& d, double sigma, const Array& x, std::uint64_t seed) {
        return to_np(stoch_grad_g(d, sigma, to_vec(x), RngStream(seed)).grad);
      }, py::arg("sigma"), py::arg("x"), py::arg("seed"));

  py::class_<Fidelity>(m, "Fidelity")
      .def_static("denoise", [](const Array& y, double sigma_y) { return Fidelity::denoise_quadratic(to_vec(y), sigma_y); },
                  py::arg("y"), py::arg("sigma_y"))
      .def_static("inpaint", [](const Array& mask, const Array& y, double sigma_y) {
        return Fidelity::inpaint(to_vec(mask), to_vec(y), sigma_y);
      }, py::arg("mask"), py::arg("y"), py::arg("sigma_y"))
      .def_static("deblur", [](const Array& kernel, const Array& y, double sigma_y) {
        if (kernel.ndim() != 2 || y.ndim() != 2) throw py::value_error("deblur expects 2-D kernel and image");
        BlurKernel k{Shape{static_cast<std::size_t>(kernel.shape(0)), static_cast<std::size_t>(kernel.shape(1))},
                     std::vector<double>(kernel.data(), kernel.data() + kernel.size())};
        return Fidelity::deblur(std::move(k), to_vec(y), sigma_y);
      }, py::arg("kernel"), py::arg("y"), py::arg("sigma_y"))
      .def_property_readonly("kind", [](const Fidelity& f) { return std::string(to_string(f.kind())); })
      .def("__call__", [](const Fidelity& f, const Array& x) { return f.eval(to_vec(x)); }, py::arg("x"))
      .def("grad", [](const Fidelity& f, const Array& x) { return to_np(f.grad(to_vec(x))); }, py::arg("x"))
      .def("prox", [](const Fidelity& f, double delta, const Array& x) { return to_np(f.prox(delta, to_vec(x))); },
           py::arg("delta"), py::arg("x"));

  m.def("max_step", &max_step, py::arg("lam"), py::arg("sigma"), py::arg("L"), py::arg("rho") = 0.0);
  m.def("bound_constants", [](double lam, double sigma, double L, double rho, double M, double delta0) {
    const auto tb = constants(lam, sigma, L, rho, M, delta0);
    py::dict d;
    d["L_F"] = tb.L_F;
    d["delta_max"] = tb.delta_max;
    d["A1"] = tb.A1;
    d["B1"] = tb.B1;
    d["A2"] = tb.A2;
    d["B2"] = tb.B2;
    d["A3"] = tb.A3;
    d["B3"] = tb.B3;
    return d;
  }, py::arg("lam"), py::arg("sigma"), py::arg("L"), py::arg("rho"), py::arg("M"), py::arg("delta0"));

  m.def("run", [](const py::object& config, std::optional<std::uint64_t> seed, std::optional<std::size_t> seeds,
                  std::size_t threads) {
    auto cfg = config_from(config);
    cli::apply_overrides(cfg, seed, seeds);
    const auto p = cli::build_problem(cfg);
    RunOptions opts;
    opts.ground_truth = p.ground_truth;
    opts.config_hash = cli::config_hash(cfg);
    opts.notes = p.notes;
    std::vector<RunTrace> traces;
    {
      py::gil_scoped_release release;
      traces = run_ensemble(cfg.solver, p.fidelity, *p.denoiser, p.x0, cfg.n_seeds, threads, opts);
    }
    py::list runs;
    for (const auto& t : traces) {
      py::dict r;
      r["trace"] = trace_dict(t);
      Vector x = t.final_x.empty() ? p.x0 : t.final_x;
      if (cfg.problem.shape && !x.shape()) x.set_shape(*cfg.problem.shape);
      r["final"] = to_np(x);
      r["aborted"] = t.meta.aborted;
      r["notes"] = t.meta.notes;
      r["csv"] = trace_to_csv(t);
      runs.append(r);
    }
    return runs;
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("seeds") = py::none(), py::arg("threads") = 1,
     "Runs the configured solver; config is JSON text or a dict.");

  m.def("verify", [](const py::object& config, const std::string& out_dir, std::size_t threads) {
    const auto cfg = config_from(config);
    std::ostringstream sink;
    cli::VerifyResult res;
    {
      py::gil_scoped_release release;
      res = cli::verify(cfg, cli::CommandContext{out_dir, threads, &sink, &sink});
    }
    py::list reports;
    for (const auto& r : res.reports) reports.append(report_dict(r));
    py::dict d;
    d["reports"] = reports;
    d["rate_slope"] = res.rate.slope;
    d["rate_expected"] = res.rate.expected;
    d["exit_code"] = res.exit_code;
    d["log"] = sink.str();
    return d;
  }, py::arg("config") = py::none(), py::arg("out_dir") = ".", py::arg("threads") = 1,
     "Bound certification; config None selects the built-in suite.");

  m.def("counterexample", [](double a, double lambda_g, double delta, double sigma_noise, std::uint64_t iters,
                             std::size_t seeds, std::uint64_t seed) {
    const auto r = counterexample(a, lambda_g, delta, sigma_noise, iters, seeds, seed);
    py::dict d;
    d["min_mean_grad_sq"] = r.min_mean_grad_sq;
    d["min_stderr"] = r.min_stderr;
    d["floor"] = r.lower_bound;
    d["steady_closed_form"] = r.steady_closed_form;
    d["steady_empirical"] = r.steady_empirical;
    d["steady_stderr"] = r.steady_stderr;
    d["floor_respected"] = r.floor_respected;
    d["steady_match"] = r.steady_match;
    d["deterministic"] = r.deterministic;
    return d;
  }, py::arg("a") = 1.0, py::arg("lambda_g") = 1.0, py::arg("delta") = 0.1, py::arg("sigma_noise") = 1.0,
     py::arg("iters") = 10000, py::arg("seeds") = 256, py::arg("seed") = 0);

  m.def("prox_oracle", [](std::uint64_t seed, std::size_t cases) {
    const auto res = cli::prox_oracle_sweep(seed, cases);
    py::dict errors;
    for (const auto& k : res.kinds) errors[py::str(to_string(k.kind))] = k.max_error;
    py::dict d;
    d["max_error"] = errors;
    d["tolerance"] = res.tolerance;
    d["pass"] = res.pass;
    return d;
  }, py::arg("seed") = 0, py::arg("cases") = 100);

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
