#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "snorelab/cli/commands.hpp"
#include "snorelab/cli/config.hpp"
#include "snorelab/cli/pgm.hpp"

using namespace snorelab;
using namespace snorelab::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("snorelab-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Quiet {
  std::ostringstream out, err;
  CommandContext ctx(const std::string& dir, std::size_t threads = 1) {
    return CommandContext{dir, threads, &out, &err};
  }
};

}  // namespace

TEST_CASE("config: minimal") {
  const auto cfg = parse_config_text(R"({"method": "snore-prox", "problem": "denoise-quadratic"})");
  CHECK(cfg.solver.method == Method::SnoreProx);
  CHECK(cfg.problem.kind == FidelityKind::DenoiseQuadratic);
  CHECK(config_hash(cfg).size() == 16);
}

TEST_CASE("config: restoration settings round trip") {
  const auto cfg = parse_config_text(R"({
    "method": "snore-prox",
    "problem": {"kind": "inpaint-noiseless", "shape": [8, 8]},
    "schedule": {"kind": "constant", "c": 2.0},
    "solver": {"lambda": 0.05, "sigma": "8/255", "iters": 10}
  })");
  CHECK(cfg.solver.lambda == 0.05);
  CHECK(cfg.solver.sigma == 8.0 / 255.0);
  CHECK(cfg.solver.schedule.value(0) == 2.0);
  CHECK(cfg.problem.sigma_y == 0.0);
  const std::string text = serialize_config(cfg);
  const auto again = parse_config_text(text);
  CHECK(serialize_config(again) == text);
  CHECK(config_hash(again) == config_hash(cfg));
}

TEST_CASE("config: errors name the field and line") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"schedule": {"kind": "constant", "c": 0}})"),
                       doctest::Contains("schedule.c"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"schedule.c": -1})"), doctest::Contains("schedule.c"), ConfigError);
  try {
    parse_config_text("{\n  \"method\": \"snore-prox\",\n  \"bogus\": 1\n}\n");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_config_text("{\"method\": "), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"method": "admm"})"), doctest::Contains("method"), ConfigError);
}

TEST_CASE("pgm: quantisation and round trips") {
  CHECK(quantize(0.5) == 128);
  CHECK(quantize(-0.2) == 0);
  CHECK(quantize(1.7) == 255);
  CHECK(quantize(1.0 / 255.0) == 1);

  Vector img({0.0, 0.25, 0.5, 1.0, 0.123456789012345678, 0.9}, Shape{2, 3});
  const ImageStamp stamp{"0123456789abcdef", 7, "test"};
  const std::string bytes = encode_pgm(img, stamp);
  CHECK(bytes.find("config_hash=0123456789abcdef") != std::string::npos);
  const Vector back = decode_pgm(bytes);
  REQUIRE(back.shape().has_value());
  CHECK(*back.shape() == Shape{2, 3});
  CHECK(back[2] == doctest::Approx(128.0 / 255.0));

  TempDir dir("pgm");
  const std::string p = (dir.path / "img.pgm").string();
  write_pgm(p, img, stamp);
  write_sidecar(sidecar_path(p), img, stamp);
  CHECK(read_sidecar(sidecar_path(p)) == img);
  CHECK(read_pgm(p).size() == 6);

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  CHECK_THROWS_AS(decode_pgm(truncated), PgmError);
  CHECK_THROWS_AS(decode_pgm("P2\n2 2\n255\n0 0 0 0"), PgmError);
}

TEST_CASE("prox oracle sweep") {
  const auto res = prox_oracle_sweep(0, 25);
  CHECK(res.pass);
  CHECK(res.kinds.size() == 4);
  for (const auto& k : res.kinds) CHECK(k.max_error < res.tolerance);

  // A reflected noisy-inpainting prox must be caught.
  const auto mutated = prox_oracle_sweep(0, 25, [](const Fidelity& f, double d, const Vector& x) {
    Vector p = f.prox(d, x);
    if (f.kind() != FidelityKind::InpaintNoisy) return p;
    return 2.0 * x - p;
  });
  CHECK_FALSE(mutated.pass);
}

TEST_CASE("verify: default suite certifies") {
  TempDir dir("verify");
  Quiet q;
  auto cfg = default_verify_config();
  cfg.n_seeds = 16;
  cfg.verify.decay_iters = 2000;
  const auto res = verify(cfg, q.ctx(dir.str()));
  CHECK(res.exit_code == kExitOk);
  for (const auto& r : res.reports) CHECK_MESSAGE(r.verdict == Verdict::Certified, r.name);
  CHECK(fs::exists(dir.path / "reports.json"));
  CHECK(fs::exists(dir.path / "constant-000.csv"));
}

TEST_CASE("verify: refusals") {
  TempDir dir("refuse");
  Quiet q;
  auto cfg = default_verify_config();
  cfg.verify.delta0 = 10.0;
  CHECK(cmd_verify(cfg, q.ctx(dir.str())) == kExitRefused);
  CHECK(q.err.str().find("delta_0 <= sigma^2 / (lambda (L + 1) + rho sigma^2)") != std::string::npos);

  auto two = default_verify_config();
  two.prior.weights = {0.5, 0.5};
  two.prior.means = {MeanSpec{MeanSpec::Kind::Constant, -1.0, {}, {}}, MeanSpec{MeanSpec::Kind::Constant, 1.0, {}, {}}};
  two.prior.variances = {1.0};
  CHECK(cmd_verify(two, q.ctx(dir.str())) == kExitRefused);

  auto indicator = default_verify_config();
  indicator.problem.kind = FidelityKind::InpaintNoiseless;
  indicator.problem.sigma_y = 0.0;
  indicator.problem.observation.reset();
  indicator.problem.ground_truth = "prior-mean";
  CHECK(cmd_verify(indicator, q.ctx(dir.str())) == kExitRefused);
}

TEST_CASE("verify: tampered traces are rejected") {
  TempDir dir("tamper");
  Quiet q;
  auto cfg = default_verify_config();
  cfg.n_seeds = 8;
  cfg.verify.decay_iters = 500;
  REQUIRE(verify(cfg, q.ctx(dir.str())).exit_code == kExitOk);

  // Inflate the recorded ||grad F||^2 column of every constant-step trace.
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("constant-", 0) != 0) continue;
    std::istringstream in(slurp(entry.path()));
    std::ostringstream out;
    std::string line;
    int grad_col = -1;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') {
        out << line << "\n";
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      if (line.back() == ',') cells.emplace_back();
      if (grad_col < 0) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == "gradF_sq_est") grad_col = static_cast<int>(i);
        }
        REQUIRE(grad_col >= 0);
      } else {
        cells[grad_col] = std::to_string(std::stod(cells[grad_col]) * 100.0 + 10.0);
      }
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << "\n";
    }
    std::ofstream(entry.path(), std::ios::binary) << out.str();
  }
  TempDir again("tamper-check");
  const auto res = verify(cfg, q.ctx(again.str()), dir.str());
  CHECK(res.exit_code == kExitFailed);
  bool violated = false;
  for (const auto& r : res.reports) violated = violated || r.verdict == Verdict::Violated;
  CHECK(violated);

  auto other = cfg;
  other.solver.lambda = 0.5;
  CHECK(cmd_verify(other, q.ctx(again.str()), dir.str()) == kExitRefused);
}

TEST_CASE("run: zero iterations and byte-identical reruns") {
  TempDir a("run-a"), b("run-b");
  Quiet q;
  auto cfg = parse_config_text(R"({"problem": {"kind": "denoise-quadratic", "dim": 4}, "solver": {"iters": 0}})");
  REQUIRE(cmd_run(cfg, q.ctx(a.str())) == kExitOk);
  std::istringstream csv(slurp(a.path / "trace.csv"));
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows == 2);  // header + k = 0

  cfg.solver.iters = 50;
  cfg.solver.seed = 11;
  REQUIRE(cmd_run(cfg, q.ctx(a.str())) == kExitOk);
  REQUIRE(cmd_run(cfg, q.ctx(b.str())) == kExitOk);
  CHECK(slurp(a.path / "trace.csv") == slurp(b.path / "trace.csv"));
  CHECK(slurp(a.path / "final.pgm") == slurp(b.path / "final.pgm"));
  CHECK(fs::exists(a.path / "final.pgm.raw"));
  CHECK(fs::exists(a.path / "run.json"));
}

TEST_CASE("counterexample: deterministic regime is flagged") {
  TempDir dir("cx");
  Quiet q;
  CounterexampleArgs args;
  args.sigma_noise = 0.0;
  args.iters = 200;
  args.seeds = 4;
  CHECK(cmd_counterexample(args, q.ctx(dir.str())) == kExitFailed);
  CHECK(q.out.str().find("deterministic regime") != std::string::npos);
  args.delta = -1.0;
  CHECK(cmd_counterexample(args, q.ctx(dir.str())) == kExitRefused);
}
