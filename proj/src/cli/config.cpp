#include "snorelab/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace snorelab::cli {

using nlohmann::json;

namespace {

std::string with_line(const std::string& msg, std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " + msg : msg;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

// Line of the first occurrence of the quoted key, or 0.
std::size_t line_of_key(std::string_view text, const std::string& key) {
  auto pos = text.find("\"" + key + "\"");
  if (pos == std::string_view::npos) {
    const auto dot = key.rfind('.');
    if (dot != std::string::npos) pos = text.find("\"" + key.substr(dot + 1) + "\"");
  }
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out[key] = *it;
    }
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "method",
      "problem",
      "problem.kind",
      "problem.dim",
      "problem.shape",
      "problem.sigma_y",
      "problem.missing_prob",
      "problem.kernel_size",
      "problem.ground_truth",
      "problem.y",
      "problem.mask",
      "problem.mask_file",
      "problem.x0",
      "prior.weights",
      "prior.means",
      "prior.variances",
      "prior.lipschitz_safety",
      "prior.lipschitz_probes",
      "schedule.kind",
      "schedule.c",
      "schedule.alpha",
      "solver.lambda",
      "solver.sigma",
      "solver.iters",
      "anneal.stages",
      "anneal.lambda_first",
      "anneal.lambda_last",
      "anneal.sigma_first",
      "anneal.sigma_last",
      "anneal.n_init",
      "telemetry.grad_samples",
      "telemetry.value_samples",
      "telemetry.record_every",
      "ensemble.n_seeds",
      "ensemble.base_seed",
      "verify.step_fraction",
      "verify.delta0",
      "verify.iters",
      "verify.alpha",
      "verify.decay_fraction",
      "verify.decay_iters",
      "outputs.trace",
      "outputs.image",
      "outputs.report",
  };
  return keys;
}

class Reader {
 public:
  Reader(std::string_view text, std::map<std::string, json> values) : text_(text), values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(key + ": " + msg, line_of_key(text_, key));
  }

  static std::optional<double> as_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) return std::nullopt;
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    const auto parse = [](const std::string& t) -> std::optional<double> {
      if (t.empty()) return std::nullopt;
      std::size_t used = 0;
      try {
        const double d = std::stod(t, &used);
        if (used != t.size()) return std::nullopt;
        return d;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    if (slash == std::string::npos) return parse(s);
    const auto num = parse(s.substr(0, slash)), den = parse(s.substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = as_number(values_.at(key));
    if (!v || !std::isfinite(*v)) fail(key, "expected a finite number (or \"a/b\")");
    return *v;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = values_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    fail(key, "expected a non-negative integer");
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = values_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = values_.at(key);
    std::vector<double> out;
    if (!v.is_array()) {
      const auto d = as_number(v);
      if (!d) fail(key, "expected a number or a list of numbers");
      return {*d};
    }
    for (const auto& e : v) {
      const auto d = as_number(e);
      if (!d || !std::isfinite(*d)) fail(key, "expected a list of finite numbers");
      out.push_back(*d);
    }
    return out;
  }

  std::vector<MeanSpec> means(const std::string& key) const {
    const json& v = values_.at(key);
    const auto one = [&](const json& e) {
      MeanSpec m;
      if (e.is_array()) {
        m.kind = MeanSpec::Kind::Explicit;
        for (const auto& x : e) {
          const auto d = as_number(x);
          if (!d) fail(key, "mean lists must hold numbers");
          m.values.push_back(*d);
        }
      } else if (const auto d = as_number(e)) {
        m.kind = MeanSpec::Kind::Constant;
        m.value = *d;
      } else if (e.is_string()) {
        m.kind = MeanSpec::Kind::Pattern;
        m.pattern = e.get<std::string>();
      } else {
        fail(key, "each mean must be a number, a list of numbers or a pattern name");
      }
      return m;
    };
    std::vector<MeanSpec> out;
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(one(e));
    } else {
      out.push_back(one(v));
    }
    return out;
  }

  template <class Fn>
  void guarded(const std::string& key, Fn&& fn) const {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      const std::string what = e.what();
      fail(key, what);
    }
  }

 private:
  std::string_view text_;
  std::map<std::string, json> values_;
};

json mean_to_json(const MeanSpec& m) {
  switch (m.kind) {
    case MeanSpec::Kind::Constant: return m.value;
    case MeanSpec::Kind::Explicit: return m.values;
    case MeanSpec::Kind::Pattern: return m.pattern;
  }
  return nullptr;
}

double default_sigma_y(FidelityKind k) {
  switch (k) {
    case FidelityKind::InpaintNoisy: return 5.0 / 255.0;
    case FidelityKind::InpaintNoiseless: return 0.0;
    default: return 1.0;
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& msg, std::size_t line) : std::runtime_error(with_line(msg, line)), line_(line) {}

ExperimentConfig parse_config_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    throw ConfigError("parse error: " + msg, line);
  }
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object", 1);

  std::map<std::string, json> flat;
  flatten(root, "", flat);
  for (const auto& [key, _] : flat) {
    if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'", line_of_key(text, key));
  }
  const Reader rd(text, flat);
  ExperimentConfig cfg;

  // problem
  {
    const std::string kind_key = rd.has("problem.kind") ? "problem.kind" : "problem";
    rd.guarded(kind_key, [&] { cfg.problem.kind = parse_fidelity_kind(rd.string(kind_key, "denoise-quadratic")); });
    auto& p = cfg.problem;
    p.dim = rd.integer("problem.dim", p.dim);
    if (rd.has("problem.shape")) {
      const auto s = rd.numbers("problem.shape");
      if (s.size() != 2 || s[0] < 1 || s[1] < 1 || s[0] != std::floor(s[0]) || s[1] != std::floor(s[1])) {
        rd.fail("problem.shape", "expected [height, width] with positive integers");
      }
      p.shape = Shape{static_cast<std::size_t>(s[0]), static_cast<std::size_t>(s[1])};
    }
    p.sigma_y = rd.number("problem.sigma_y", default_sigma_y(p.kind));
    p.missing_prob = rd.number("problem.missing_prob", p.missing_prob);
    p.kernel_size = rd.integer("problem.kernel_size", p.kernel_size);
    p.ground_truth = rd.string("problem.ground_truth", p.ground_truth);
    if (rd.has("problem.y")) p.observation = rd.numbers("problem.y");
    if (rd.has("problem.mask")) p.mask = rd.numbers("problem.mask");
    p.mask_file = rd.string("problem.mask_file", "");
    if (rd.has("problem.x0")) p.x0 = rd.numbers("problem.x0");
  }

  // prior
  {
    auto& pr = cfg.prior;
    if (rd.has("prior.weights")) pr.weights = rd.numbers("prior.weights");
    if (rd.has("prior.means")) pr.means = rd.means("prior.means");
    if (rd.has("prior.variances")) pr.variances = rd.numbers("prior.variances");
    pr.lipschitz_safety = rd.number("prior.lipschitz_safety", pr.lipschitz_safety);
    pr.lipschitz_probes = rd.integer("prior.lipschitz_probes", pr.lipschitz_probes);
  }

  // solver
  {
    auto& s = cfg.solver;
    rd.guarded("method", [&] { s.method = parse_method(rd.string("method", "snore-prox")); });
    const std::string kind = rd.string("schedule.kind", "constant");
    const double c = rd.number("schedule.c", 0.1);
    const double alpha = rd.number("schedule.alpha", 0.75);
    const std::string bad_key = rd.has("schedule.alpha") && kind == "power-decay" ? "schedule.alpha" : "schedule.c";
    rd.guarded(kind == "constant" || kind == "power-decay" ? bad_key : "schedule.kind", [&] {
      if (kind == "constant") {
        s.schedule = StepSchedule::constant(c);
      } else if (kind == "power-decay") {
        s.schedule = StepSchedule::power_decay(c, alpha);
      } else {
        throw std::invalid_argument("expected 'constant' or 'power-decay'");
      }
    });
    s.lambda = rd.number("solver.lambda", s.lambda);
    s.sigma = rd.number("solver.sigma", s.sigma);
    s.iters = rd.integer("solver.iters", s.iters);
    s.seed = rd.integer("ensemble.base_seed", 0);
    if (rd.has("anneal.stages") || rd.has("anneal.lambda_first") || rd.has("anneal.lambda_last") ||
        rd.has("anneal.sigma_first") || rd.has("anneal.sigma_last")) {
      AnnealPlan a;
      a.stages = rd.integer("anneal.stages", 1);
      a.lambda_first = rd.number("anneal.lambda_first", s.lambda);
      a.lambda_last = rd.number("anneal.lambda_last", a.lambda_first);
      a.sigma_first = rd.number("anneal.sigma_first", s.sigma);
      a.sigma_last = rd.number("anneal.sigma_last", a.sigma_first);
      s.anneal = a;
    }
    if (rd.has("anneal.n_init")) {
      const auto& v = flat.at("anneal.n_init");
      cfg.n_init = v.is_string() ? v.get<std::string>() : v.dump();
    }
    s.telemetry.grad_samples = rd.integer("telemetry.grad_samples", s.telemetry.grad_samples);
    s.telemetry.value_samples = rd.integer("telemetry.value_samples", s.telemetry.value_samples);
    s.telemetry.record_every = rd.integer("telemetry.record_every", s.telemetry.record_every);
  }

  cfg.n_seeds = rd.integer("ensemble.n_seeds", cfg.n_seeds);
  cfg.verify.step_fraction = rd.number("verify.step_fraction", cfg.verify.step_fraction);
  if (rd.has("verify.delta0")) {
    cfg.verify.delta0 = rd.number("verify.delta0", 0.0);
  } else if (rd.has("schedule.c") && cfg.solver.schedule.is_constant()) {
    cfg.verify.delta0 = cfg.solver.schedule.c();
  }
  cfg.verify.iters = rd.integer("verify.iters", cfg.verify.iters);
  cfg.verify.alpha = rd.number("verify.alpha", cfg.verify.alpha);
  cfg.verify.decay_fraction = rd.number("verify.decay_fraction", cfg.verify.decay_fraction);
  cfg.verify.decay_iters = rd.integer("verify.decay_iters", cfg.verify.decay_iters);
  cfg.outputs.trace = rd.string("outputs.trace", cfg.outputs.trace);
  cfg.outputs.image = rd.string("outputs.image", cfg.outputs.image);
  cfg.outputs.report = rd.string("outputs.report", cfg.outputs.report);

  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    // Attach the line of the field named in the message when possible.
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
    if (e.line() == 0 && !field.empty() && known_keys().count(field)) {
      throw ConfigError(msg, line_of_key(text, field));
    }
    throw;
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  const auto& p = cfg.problem;
  if (cfg.dim() == 0) fail("problem.dim", "must be positive");
  const bool inpaint = p.kind == FidelityKind::InpaintNoisy || p.kind == FidelityKind::InpaintNoiseless;
  if (p.kind == FidelityKind::InpaintNoiseless) {
    if (p.sigma_y != 0.0) fail("problem.sigma_y", "must be 0 for inpaint-noiseless");
  } else if (!(p.sigma_y > 0.0)) {
    fail("problem.sigma_y", "must be positive");
  }
  if (!(p.missing_prob >= 0.0 && p.missing_prob <= 1.0)) fail("problem.missing_prob", "must lie in [0, 1]");
  if (p.kernel_size == 0) fail("problem.kernel_size", "must be positive");
  if (p.observation && p.observation->size() != cfg.dim()) fail("problem.y", "length must equal the dimension");
  if (p.mask) {
    if (!inpaint) fail("problem.mask", "only valid for inpainting problems");
    if (p.mask->size() != cfg.dim()) fail("problem.mask", "length must equal the dimension");
    for (double m : *p.mask) {
      if (m != 0.0 && m != 1.0) fail("problem.mask", "entries must be 0 or 1");
    }
  }
  if (inpaint && p.observation && !p.mask && p.mask_file.empty()) {
    fail("problem.mask", "an inline observation for inpainting needs a mask");
  }
  if (p.x0 && p.x0->size() != 1 && p.x0->size() != cfg.dim()) {
    fail("problem.x0", "expected one value or one per coordinate");
  }

  const auto& pr = cfg.prior;
  const std::size_t k = pr.weights.size();
  if (k == 0) fail("prior.weights", "at least one component required");
  double total = 0.0;
  for (double w : pr.weights) {
    if (!(w > 0.0)) fail("prior.weights", "must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) fail("prior.weights", "must sum to 1");
  if (pr.means.size() != k) fail("prior.means", "expected one mean per component");
  if (pr.variances.size() != k && pr.variances.size() != 1) fail("prior.variances", "expected one per component");
  for (double v : pr.variances) {
    if (!(v > 0.0)) fail("prior.variances", "must be positive");
  }
  for (const auto& m : pr.means) {
    if (m.kind == MeanSpec::Kind::Explicit && m.values.size() != cfg.dim()) {
      fail("prior.means", "explicit means must have one value per coordinate");
    }
    if (m.kind == MeanSpec::Kind::Pattern) {
      if (!p.shape) fail("prior.means", "pattern means need problem.shape");
      if (m.pattern != "ramp-x" && m.pattern != "ramp-y" && m.pattern != "disk" && m.pattern != "flat") {
        fail("prior.means", "unknown pattern '" + m.pattern + "'");
      }
    }
  }
  if (!(pr.lipschitz_safety >= 1.0)) fail("prior.lipschitz_safety", "must be at least 1");

  const auto& s = cfg.solver;
  if (!(s.lambda >= 0.0)) fail("solver.lambda", "must be non-negative");
  if (!(s.sigma > 0.0)) fail("solver.sigma", "must be positive");
  if (s.anneal) {
    const auto& a = *s.anneal;
    if (a.stages == 0) fail("anneal.stages", "must be at least 1");
    if (s.iters > 0 && a.stages > s.iters) fail("anneal.stages", "exceeds solver.iters");
    if (!(a.sigma_last > 0.0) || a.sigma_first < a.sigma_last) {
      fail("anneal.sigma_first", "require sigma_first >= sigma_last > 0");
    }
    if (!(a.lambda_first > 0.0) || a.lambda_last < a.lambda_first) {
      fail("anneal.lambda_first", "require 0 < lambda_first <= lambda_last");
    }
  }
  if (s.telemetry.grad_samples < 2) fail("telemetry.grad_samples", "must be at least 2");
  if (s.telemetry.value_samples < 2) fail("telemetry.value_samples", "must be at least 2");
  if (s.telemetry.record_every == 0) fail("telemetry.record_every", "must be positive");
  if (cfg.n_seeds == 0) fail("ensemble.n_seeds", "must be positive");

  const auto& v = cfg.verify;
  if (!(v.step_fraction > 0.0 && v.step_fraction <= 1.0)) fail("verify.step_fraction", "must lie in (0, 1]");
  if (v.delta0 && !(*v.delta0 > 0.0)) fail("verify.delta0", "must be positive");
  if (!(v.alpha > 0.5 && v.alpha < 1.0)) fail("verify.alpha", "must lie in (1/2, 1)");
  if (!(v.decay_fraction > 0.0 && v.decay_fraction <= 1.0)) fail("verify.decay_fraction", "must lie in (0, 1]");
  if (v.iters == 0) fail("verify.iters", "must be positive");
  if (v.decay_iters < 10) fail("verify.decay_iters", "must be at least 10");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;  // std::map-backed: keys come out sorted
  const auto& p = cfg.problem;
  j["method"] = to_string(cfg.solver.method);
  j["problem"] = to_string(p.kind);
  if (p.shape) {
    j["problem.shape"] = {p.shape->height, p.shape->width};
  } else {
    j["problem.dim"] = p.dim;
  }
  j["problem.sigma_y"] = p.sigma_y;
  j["problem.missing_prob"] = p.missing_prob;
  j["problem.kernel_size"] = p.kernel_size;
  j["problem.ground_truth"] = p.ground_truth;
  if (p.observation) j["problem.y"] = *p.observation;
  if (p.mask) j["problem.mask"] = *p.mask;
  if (!p.mask_file.empty()) j["problem.mask_file"] = p.mask_file;
  if (p.x0) j["problem.x0"] = *p.x0;

  const auto& pr = cfg.prior;
  j["prior.weights"] = pr.weights;
  json means = json::array();
  for (const auto& m : pr.means) means.push_back(mean_to_json(m));
  j["prior.means"] = means;
  j["prior.variances"] = pr.variances;
  j["prior.lipschitz_safety"] = pr.lipschitz_safety;
  j["prior.lipschitz_probes"] = pr.lipschitz_probes;

  const auto& s = cfg.solver;
  j["schedule.kind"] = to_string(s.schedule.kind());
  j["schedule.c"] = s.schedule.c();
  if (!s.schedule.is_constant()) j["schedule.alpha"] = s.schedule.alpha();
  j["solver.lambda"] = s.lambda;
  j["solver.sigma"] = s.sigma;
  j["solver.iters"] = s.iters;
  if (s.anneal) {
    j["anneal.stages"] = s.anneal->stages;
    j["anneal.lambda_first"] = s.anneal->lambda_first;
    j["anneal.lambda_last"] = s.anneal->lambda_last;
    j["anneal.sigma_first"] = s.anneal->sigma_first;
    j["anneal.sigma_last"] = s.anneal->sigma_last;
  }
  if (cfg.n_init) j["anneal.n_init"] = *cfg.n_init;
  j["telemetry.grad_samples"] = s.telemetry.grad_samples;
  j["telemetry.value_samples"] = s.telemetry.value_samples;
  j["telemetry.record_every"] = s.telemetry.record_every;
  j["ensemble.n_seeds"] = cfg.n_seeds;
  j["ensemble.base_seed"] = s.seed;
  j["verify.step_fraction"] = cfg.verify.step_fraction;
  if (cfg.verify.delta0) j["verify.delta0"] = *cfg.verify.delta0;
  j["verify.iters"] = cfg.verify.iters;
  j["verify.alpha"] = cfg.verify.alpha;
  j["verify.decay_fraction"] = cfg.verify.decay_fraction;
  j["verify.decay_iters"] = cfg.verify.decay_iters;
  j["outputs.trace"] = cfg.outputs.trace;
  j["outputs.image"] = cfg.outputs.image;
  j["outputs.report"] = cfg.outputs.report;
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace snorelab::cli
