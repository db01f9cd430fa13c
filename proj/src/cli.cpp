#include "bonnet/cli.hpp"

#include "bonnet/io.hpp"
#include "bonnet/metrics.hpp"
#include "bonnet/parallel.hpp"
#include "bonnet/phantom.hpp"
#include "bonnet/radon.hpp"
#include "bonnet/random.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace bonnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void log(const std::string& msg) { std::cerr << "bonnet: " << msg << '\n'; }

// Noise streams sit far from the phantom streams of the same seed.
constexpr std::uint64_t kNoiseStream = 1'000'000;

InitialGuess parse_init(const std::string& s) {
  if (s == "zero") return InitialGuess::zero;
  if (s == "backprojection") return InitialGuess::backprojection;
  throw DomainError("init must be 'zero' or 'backprojection', got '" + s + "'");
}

Param parse_param(const std::string& s) {
  if (s == "lambda") return Param::lambda;
  if (s == "s") return Param::s;
  throw DomainError("learn entries must be 'lambda' or 's', got '" + s + "'");
}

RegParams to_params(const std::vector<double>& v, const char* key) {
  if (v.empty() || v.size() > 2) throw DomainError(std::string(key) + " needs one or two values");
  RegParams mu;
  mu.lambda = v[0];
  if (v.size() == 2) mu.s = v[1];
  return mu;
}

ordered_json mu_json(const RegParams& mu, RegKind kind) {
  ordered_json j;
  j["lambda"] = kind == RegKind::none ? 0.0 : mu.lambda;
  if (kind == RegKind::fractional && mu.s) j["s"] = *mu.s;
  return j;
}

std::string sample_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%03d", index);
  return buf;
}

}  // namespace

int RunConfig::resolved_n_tau() const { return n_tau > 0 ? n_tau : RadonOperator::default_n_tau(n); }

RegKind RunConfig::reg_kind() const { return parse_reg_kind(reg); }

RegParams RunConfig::mu0_params() const {
  RegParams p = to_params(mu0, "mu0");
  if (reg_kind() != RegKind::fractional) p.s.reset();
  else if (!p.s) throw DomainError("mu0 needs lambda,s for the fractional regularizer");
  return p;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.tol = outer_tol;
  t.q_max = q_max;
  t.inner = training_solver_config();
  t.inner.tol = tol_train;
  t.inner.max_iters = train_max_iters;
  t.inner.init = parse_init(init);
  if (outer_scale == "log_lambda") t.scale = OuterScale::log_lambda;
  else if (outer_scale == "linear") t.scale = OuterScale::linear;
  else throw DomainError("outer_scale must be 'log_lambda' or 'linear'");
  t.initial_step = outer_initial_step;
  t.max_backtracks = outer_max_backtracks;
  t.step_tol = outer_step_tol;
  t.mu0 = mu0_params();
  for (const auto& p : learn) t.learn.push_back(parse_param(p));
  t.threads = threads;
  return t;
}

SolverConfig RunConfig::test_solver() const {
  SolverConfig s = testing_solver_config();
  s.tol = tol_test;
  s.max_iters = test_max_iters;
  s.init = parse_init(init);
  return s;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError("config: " + what);
  };
  require(c.n >= 2 && c.n <= 1024, "n must lie in [2, 1024]");
  require(c.n_theta >= 1 && c.n_theta <= 4096, "n_theta must lie in [1, 4096]");
  require(c.n_tau >= 0, "n_tau must be >= 0 (0 selects the default)");
  require(c.noise >= 0.0 && std::isfinite(c.noise), "noise must be a finite non-negative level");
  require(c.count >= 1, "count must be >= 1");
  require(c.m_train >= 0 && c.m_train <= c.count, "m_train must lie in [0, count]");
  require(c.perturbation_scale >= 0.0, "perturbation_scale must be >= 0");
  require(c.xi > 0.0, "xi must be positive");
  require(c.threads >= 0, "threads must be >= 0");
  require(!c.out.empty(), "out must be set");
  require(c.name.find('/') == std::string::npos && c.name != "." && c.name != "..", "name must be a plain label");
  const RegKind kind = c.reg_kind();
  const RegParams mu0 = c.mu0_params();
  if (kind != RegKind::none) require(is_admissible(mu0), "mu0 is outside the admissible set");
  if (c.mu) {
    RegParams mu = to_params(*c.mu, "mu");
    if (kind == RegKind::fractional) require(mu.s.has_value(), "mu needs lambda,s for the fractional regularizer");
    else mu.s.reset();
    if (kind != RegKind::none) require(is_admissible(mu), "mu is outside the admissible set");
  }
  validate(c.train_config());
  validate(c.test_solver());
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["n"] = c.n;
  j["n_theta"] = c.n_theta;
  j["n_tau"] = c.n_tau;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["count"] = c.count;
  j["m_train"] = c.m_train;
  j["perturbation_scale"] = c.perturbation_scale;
  j["reg"] = c.reg;
  j["xi"] = c.xi;
  j["mu0"] = c.mu0;
  j["learn"] = c.learn;
  j["mu"] = c.mu ? ordered_json(*c.mu) : ordered_json(nullptr);
  j["outer_tol"] = c.outer_tol;
  j["q_max"] = c.q_max;
  j["outer_scale"] = c.outer_scale;
  j["outer_initial_step"] = c.outer_initial_step;
  j["outer_max_backtracks"] = c.outer_max_backtracks;
  j["outer_step_tol"] = c.outer_step_tol;
  j["tol_train"] = c.tol_train;
  j["train_max_iters"] = c.train_max_iters;
  j["tol_test"] = c.tol_test;
  j["test_max_iters"] = c.test_max_iters;
  j["init"] = c.init;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j;
}

RunConfig from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw DomainError("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "name") c.name = v.get<std::string>();
      else if (key == "n") c.n = v.get<int>();
      else if (key == "n_theta") c.n_theta = v.get<int>();
      else if (key == "n_tau") c.n_tau = v.get<int>();
      else if (key == "noise") c.noise = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "count") c.count = v.get<int>();
      else if (key == "m_train") c.m_train = v.get<int>();
      else if (key == "perturbation_scale") c.perturbation_scale = v.get<double>();
      else if (key == "reg") c.reg = v.get<std::string>();
      else if (key == "xi") c.xi = v.get<double>();
      else if (key == "mu0") c.mu0 = v.get<std::vector<double>>();
      else if (key == "learn") c.learn = v.get<std::vector<std::string>>();
      else if (key == "mu") c.mu = v.is_null() ? std::nullopt : std::optional(v.get<std::vector<double>>());
      else if (key == "outer_tol") c.outer_tol = v.get<double>();
      else if (key == "q_max") c.q_max = v.get<int>();
      else if (key == "outer_scale") c.outer_scale = v.get<std::string>();
      else if (key == "outer_initial_step") c.outer_initial_step = v.get<double>();
      else if (key == "outer_max_backtracks") c.outer_max_backtracks = v.get<int>();
      else if (key == "outer_step_tol") c.outer_step_tol = v.get<double>();
      else if (key == "tol_train") c.tol_train = v.get<double>();
      else if (key == "train_max_iters") c.train_max_iters = v.get<int>();
      else if (key == "tol_test") c.tol_test = v.get<double>();
      else if (key == "test_max_iters") c.test_max_iters = v.get<int>();
      else if (key == "init") c.init = v.get<std::string>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else throw DomainError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw DomainError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return from_json(j, std::move(base));
}

std::vector<double> parse_mu(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < part.size() && part[used] == ' ') ++used;
    if (used == 0 || used != part.size()) throw DomainError("cannot parse mu '" + text + "'");
    out.push_back(v);
  }
  if (out.empty() || out.size() > 2) throw DomainError("mu must be 'lambda' or 'lambda,s'");
  return out;
}

fs::path Layout::data_dir(int n_theta) const { return root / "data" / ("nt" + std::to_string(n_theta)); }

fs::path Layout::run_dir(const std::string& run, int n_theta) const {
  return root / "runs" / run / ("nt" + std::to_string(n_theta));
}

std::string Layout::sample_file(int index, const char* ext) { return sample_id(index) + ext; }

Layout layout(const RunConfig& c) { return Layout{fs::path(c.out)}; }

// ------------------------------------------------------------------ dataset

namespace {

struct Dataset {
  int n = 0;
  int n_theta = 0;
  int n_tau = 0;
  std::vector<int> train;
  std::vector<int> test;
  std::vector<Image> truth;     // indexed by sample index
  std::vector<Sinogram> noisy;  // indexed by sample index
};

Dataset load_dataset(const Layout& lay, const RunConfig& c) {
  const fs::path dir = lay.data_dir(c.n_theta);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw IoError("no dataset at " + dir.string() + " (run 'bonnet synth' with the same --out and --ntheta)");
  const json m = json::parse(read_text(manifest_path));
  Dataset d;
  d.n = m.at("n").get<int>();
  d.n_theta = m.at("n_theta").get<int>();
  d.n_tau = m.at("n_tau").get<int>();
  if (d.n != c.n || d.n_theta != c.n_theta)
    throw DomainError("dataset at " + dir.string() + " has n=" + std::to_string(d.n) + ", n_theta=" +
                      std::to_string(d.n_theta) + "; config asks for n=" + std::to_string(c.n) +
                      ", n_theta=" + std::to_string(c.n_theta));
  for (const auto& s : m.at("samples")) {
    const int idx = s.at("index").get<int>();
    if (idx != static_cast<int>(d.truth.size())) throw IoError(manifest_path.string() + ": samples out of order");
    d.truth.push_back(read_image_csv(dir / s.at("truth").get<std::string>()));
    d.noisy.push_back(read_sinogram_csv(dir / s.at("noisy").get<std::string>()));
    if (d.truth.back().grid.n() != d.n) throw IoError("sample " + std::to_string(idx) + " has the wrong size");
    const auto& f = d.noisy.back();
    if (f.n_theta != d.n_theta || f.n_tau != d.n_tau)
      throw IoError("sinogram " + std::to_string(idx) + " has the wrong shape");
    (s.at("split").get<std::string>() == "train" ? d.train : d.test).push_back(idx);
  }
  return d;
}

std::unique_ptr<Regularizer> make_reg(const RunConfig& c, const Grid& grid) {
  return make_regularizer(c.reg_kind(), grid, c.xi);
}

void write_sample_pair(const fs::path& dir, int index, const Image& u) {
  write_image_csv(dir / Layout::sample_file(index, ".csv"), u);
  write_png_gray(dir / Layout::sample_file(index, ".png"), u);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json trace_json(const SolveTrace& t) {
  ordered_json j;
  j["layers"] = t.layers;
  j["reason"] = to_string(t.reason);
  j["final_residual"] = t.final_residual;
  j["backtracks"] = t.backtracks;
  return j;
}

}  // namespace

void cmd_synth(const RunConfig& c) {
  validate(c);
  const Layout lay = layout(c);
  const fs::path dir = lay.data_dir(c.n_theta);
  const Grid grid(c.n);
  const int n_tau = c.resolved_n_tau();
  log("synth: n=" + std::to_string(c.n) + " n_theta=" + std::to_string(c.n_theta) +
      " n_tau=" + std::to_string(n_tau) + " count=" + std::to_string(c.count));
  const auto K = RadonOperator::assemble(grid, c.n_theta, n_tau);
  EnsembleOptions opts;
  opts.perturbation_scale = c.perturbation_scale;
  SampleSet set = generate_ensemble(grid, c.count, c.seed, opts);
  split(set, c.m_train);

  ordered_json manifest;
  manifest["n"] = c.n;
  manifest["n_theta"] = c.n_theta;
  manifest["n_tau"] = n_tau;
  manifest["noise"] = c.noise;
  manifest["seed"] = c.seed;
  manifest["m_train"] = set.m_train;
  manifest["m_test"] = set.m_test;
  manifest["config"] = to_json(c);
  ordered_json samples = ordered_json::array();
  ordered_json train_ids = ordered_json::array(), test_ids = ordered_json::array();
  for (int i = 0; i < c.count; ++i) {
    const std::string id = sample_id(i);
    const std::uint64_t noise_seed = derive_seed(c.seed, kNoiseStream + static_cast<std::uint64_t>(i));
    const Sinogram clean = K.apply(set.images[static_cast<std::size_t>(i)]);
    const Sinogram noisy = add_noise(clean, c.noise, noise_seed);
    write_sample_pair(dir / "truth", i, set.images[static_cast<std::size_t>(i)]);
    write_sinogram_csv(dir / "clean" / (id + ".csv"), clean);
    write_sinogram_csv(dir / "noisy" / (id + ".csv"), noisy);
    write_png_gray(dir / "noisy" / (id + ".png"), noisy);
    const bool is_train = i < set.m_train;
    (is_train ? train_ids : test_ids).push_back(id);
    ordered_json s;
    s["index"] = i;
    s["id"] = id;
    s["split"] = is_train ? "train" : "test";
    s["phantom_seed"] = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    s["noise_seed"] = noise_seed;
    s["truth"] = "truth/" + id + ".csv";
    s["clean"] = "clean/" + id + ".csv";
    s["noisy"] = "noisy/" + id + ".csv";
    samples.push_back(std::move(s));
  }
  manifest["train"] = train_ids;
  manifest["test"] = test_ids;
  manifest["samples"] = samples;
  write_text(dir / "manifest.json", dump(manifest));
  log("synth: wrote " + dir.string());
}

void cmd_train(const RunConfig& c) {
  validate(c);
  const Layout lay = layout(c);
  const Dataset d = load_dataset(lay, c);
  if (d.train.empty()) throw DomainError("train: the dataset has no training samples");
  const Grid grid(d.n);
  const auto K = RadonOperator::assemble(grid, d.n_theta, d.n_tau);
  const auto reg = make_reg(c, grid);
  std::vector<Image> truth;
  std::vector<Sinogram> data;
  for (int i : d.train) {
    truth.push_back(d.truth[static_cast<std::size_t>(i)]);
    data.push_back(d.noisy[static_cast<std::size_t>(i)]);
  }
  log("train: " + c.run_name() + " on " + std::to_string(truth.size()) + " samples, n_theta=" +
      std::to_string(d.n_theta));
  const TrainResult r = train(truth, data, K, *reg, c.train_config());
  log("train: " + to_string(r.status) + " after " + std::to_string(r.outer_iterations) + " outer iterations in " +
      std::to_string(r.wall_seconds) + " s");

  const fs::path dir = lay.run_dir(c.run_name(), d.n_theta);
  const RegKind kind = c.reg_kind();
  ordered_json report;
  report["run"] = c.run_name();
  report["reg"] = to_string(kind);
  report["n"] = d.n;
  report["n_theta"] = d.n_theta;
  report["n_tau"] = d.n_tau;
  report["m_train"] = truth.size();
  report["mu_star"] = mu_json(r.mu_star, kind);
  ordered_json learned = ordered_json::array();
  for (Param p : r.learned) learned.push_back(to_string(p));
  report["learned"] = learned;
  report["status"] = to_string(r.status);
  report["outer_iterations"] = r.outer_iterations;
  report["phi_initial"] = r.phi_history.front();
  report["phi_final"] = r.phi_history.back();
  report["phi_history"] = r.phi_history;
  ordered_json iterates = ordered_json::array();
  for (const auto& it : r.iterates) {
    ordered_json j;
    j["mu"] = mu_json(it.mu, kind);
    j["phi"] = it.phi;
    j["gradient"] = it.gradient;
    j["projected_gradient"] = it.projected_gradient;
    j["beta"] = it.beta;
    j["backtracks"] = it.backtracks;
    j["layers"] = it.layers;
    iterates.push_back(std::move(j));
  }
  report["iterates"] = iterates;
  ordered_json recon = ordered_json::array();
  for (std::size_t k = 0; k < d.train.size(); ++k) {
    write_sample_pair(dir / "recon_train", d.train[k], r.reconstructions[k]);
    recon.push_back("recon_train/" + Layout::sample_file(d.train[k], ".csv"));
  }
  report["reconstructions"] = recon;
  report["config"] = to_json(c);
  write_text(dir / "report.json", dump(report));
  log("train: wrote " + (dir / "report.json").string());
}

namespace {

RegParams resolve_mu(const RunConfig& c, const Layout& lay, RegKind kind) {
  RegParams mu;
  if (c.mu) {
    mu = to_params(*c.mu, "mu");
  } else {
    const fs::path report = lay.run_dir(c.run_name(), c.n_theta) / "report.json";
    if (!fs::exists(report))
      throw IoError("no mu given and no training report at " + report.string() + " (pass --mu or run train)");
    const json j = json::parse(read_text(report));
    if (j.at("reg").get<std::string>() != to_string(kind))
      throw DomainError(report.string() + " was trained with reg=" + j.at("reg").get<std::string>());
    const auto& m = j.at("mu_star");
    mu.lambda = m.at("lambda").get<double>();
    if (m.contains("s")) mu.s = m.at("s").get<double>();
  }
  if (kind == RegKind::none) return RegParams{kLambdaMin, std::nullopt};
  if (kind != RegKind::fractional) mu.s.reset();
  if (kind == RegKind::fractional && !mu.s) throw DomainError("fractional reconstruction needs mu = lambda,s");
  if (!is_admissible(mu)) throw DomainError("mu is outside the admissible set");
  return mu;
}

}  // namespace

void cmd_reconstruct(const RunConfig& c) {
  validate(c);
  const Layout lay = layout(c);
  const RegKind kind = c.reg_kind();
  const RegParams mu = resolve_mu(c, lay, kind);
  const Dataset d = load_dataset(lay, c);
  if (d.test.empty()) throw DomainError("reconstruct: the dataset has no test samples");
  const Grid grid(d.n);
  const auto K = RadonOperator::assemble(grid, d.n_theta, d.n_tau);
  const auto reg = make_reg(c, grid);
  const SolverConfig solver = c.test_solver();
  const fs::path dir = lay.run_dir(c.run_name(), d.n_theta);

  std::vector<std::pair<Image, SolveTrace>> results(d.test.size(), {Image(grid), SolveTrace{}});
  parallel_for(
      d.test.size(),
      [&](std::size_t k) {
        const Sinogram& f = d.noisy[static_cast<std::size_t>(d.test[k])];
        results[k] = solve_inner(K, f, *reg, mu, solver, initial_guess(K, f, solver));
      },
      c.threads);

  ordered_json summary;
  summary["run"] = c.run_name();
  summary["reg"] = to_string(kind);
  summary["n_theta"] = d.n_theta;
  summary["mu"] = mu_json(mu, kind);
  ordered_json samples = ordered_json::array();
  for (std::size_t k = 0; k < d.test.size(); ++k) {
    write_sample_pair(dir / "recon_test", d.test[k], results[k].first);
    ordered_json s = trace_json(results[k].second);
    s["id"] = sample_id(d.test[k]);
    s["file"] = "recon_test/" + Layout::sample_file(d.test[k], ".csv");
    samples.push_back(std::move(s));
  }
  summary["samples"] = samples;
  summary["config"] = to_json(c);
  write_text(dir / "reconstruct.json", dump(summary));
  log("reconstruct: wrote " + std::to_string(d.test.size()) + " reconstructions to " + (dir / "recon_test").string());
}

// ------------------------------------------------------------------ eval

namespace {

struct RunMetrics {
  std::string run;
  std::string reg;
  int n_theta = 0;
  json mu;
  MetricsReport report;
};

std::string metrics_csv(const MetricsReport& r) {
  std::string text = "id,mse,psnr,ssim\n";
  auto row = [&](const SampleMetrics& m) {
    text += m.id + "," + format_double(m.mse) + "," + format_double(m.psnr) + "," + format_double(m.ssim) + "\n";
  };
  for (const auto& m : r.samples) row(m);
  row(r.average);
  return text;
}

RunMetrics evaluate_run(const fs::path& run_dir, const Layout& lay) {
  const json summary = json::parse(read_text(run_dir / "reconstruct.json"));
  RunMetrics rm;
  rm.run = summary.at("run").get<std::string>();
  rm.reg = summary.at("reg").get<std::string>();
  rm.n_theta = summary.at("n_theta").get<int>();
  rm.mu = summary.at("mu");
  const fs::path data = lay.data_dir(rm.n_theta);
  std::vector<Image> recon, truth;
  std::vector<std::string> ids;
  for (const auto& s : summary.at("samples")) {
    const std::string id = s.at("id").get<std::string>();
    recon.push_back(read_image_csv(run_dir / s.at("file").get<std::string>()));
    truth.push_back(read_image_csv(data / "truth" / (id + ".csv")));
    ids.push_back(id);
  }
  rm.report = evaluate_metrics(recon, truth, ids);
  rm.report.n_theta = rm.n_theta;
  rm.report.reg = parse_reg_kind(rm.reg);
  write_text(run_dir / "metrics.csv", metrics_csv(rm.report));
  return rm;
}

}  // namespace

void cmd_eval(const RunConfig& c) {
  validate(c);
  const Layout lay = layout(c);
  const fs::path runs = lay.root / "runs";
  if (!fs::is_directory(runs)) throw IoError("no runs under " + runs.string());
  std::vector<fs::path> run_dirs;
  for (const auto& run : fs::directory_iterator(runs)) {
    if (!run.is_directory()) continue;
    for (const auto& nt : fs::directory_iterator(run.path()))
      if (nt.is_directory() && fs::exists(nt.path() / "reconstruct.json")) run_dirs.push_back(nt.path());
  }
  if (run_dirs.empty()) throw IoError("no reconstructed runs under " + runs.string());
  std::sort(run_dirs.begin(), run_dirs.end());

  std::vector<RunMetrics> all;
  for (const auto& dir : run_dirs) all.push_back(evaluate_run(dir, lay));
  std::sort(all.begin(), all.end(), [](const RunMetrics& a, const RunMetrics& b) {
    return std::tie(a.run, a.n_theta) < std::tie(b.run, b.n_theta);
  });

  std::string text = "run,reg,n_theta,lambda,s,mse,psnr,ssim\n";
  std::map<std::string, PlotSeries> mse_s, psnr_s, ssim_s;
  for (const auto& rm : all) {
    const double lambda = rm.mu.at("lambda").get<double>();
    const std::string s = rm.mu.contains("s") ? format_double(rm.mu.at("s").get<double>()) : "";
    const auto& avg = rm.report.average;
    text += rm.run + "," + rm.reg + "," + std::to_string(rm.n_theta) + "," + format_double(lambda) + "," + s + "," +
            format_double(avg.mse) + "," + format_double(avg.psnr) + "," + format_double(avg.ssim) + "\n";
    for (auto* m : {&mse_s, &psnr_s, &ssim_s}) (*m)[rm.run].label = rm.run;
    mse_s[rm.run].x.push_back(rm.n_theta);
    mse_s[rm.run].y.push_back(avg.mse);
    psnr_s[rm.run].x.push_back(rm.n_theta);
    psnr_s[rm.run].y.push_back(avg.psnr);
    ssim_s[rm.run].x.push_back(rm.n_theta);
    ssim_s[rm.run].y.push_back(avg.ssim);
  }
  const fs::path out = lay.eval_dir();
  write_text(out / "summary.csv", text);
  auto plot = [&](const std::map<std::string, PlotSeries>& series, const std::string& title, const std::string& y,
                  const char* file) {
    PlotSpec spec;
    spec.title = title;
    spec.x_label = "number of angles";
    spec.y_label = y;
    for (const auto& [name, s] : series) spec.series.push_back(s);
    write_line_plot(out / file, spec);
  };
  plot(mse_s, "average MSE", "MSE", "avg_mse.png");
  plot(psnr_s, "average PSNR", "PSNR (dB)", "avg_psnr.png");
  plot(ssim_s, "average SSIM", "SSIM", "avg_ssim.png");
  log("eval: " + std::to_string(all.size()) + " runs summarized in " + (out / "summary.csv").string());
}

// ------------------------------------------------------------------ main

int run(int argc, char** argv) {
  CLI::App app{"Bilevel learning of regularization parameters for tomographic reconstruction"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, reg, mu0, mu, name;
    std::optional<std::uint64_t> seed;
    std::optional<int> ntheta, n, threads;
    std::optional<double> noise, tol_train, tol_test;
  } flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "dataset seed");
    sub->add_option("--out", flags.out, "output root directory");
    sub->add_option("--reg", flags.reg, "regularizer")->check(CLI::IsMember({"none", "tv", "frac"}));
    sub->add_option("--ntheta", flags.ntheta, "number of projection angles");
    sub->add_option("--n", flags.n, "pixels per side");
    sub->add_option("--noise", flags.noise, "relative Gaussian noise level (0.001 = 0.1%)");
    sub->add_option("--mu0", flags.mu0, "initial parameters \"lambda[,s]\"");
    sub->add_option("--mu", flags.mu, "explicit parameters for reconstruct \"lambda[,s]\"");
    sub->add_option("--name", flags.name, "run label (defaults to the regularizer)");
    sub->add_option("--tol-train", flags.tol_train, "training-phase layer tolerance");
    sub->add_option("--tol-test", flags.tol_test, "testing-phase tolerance");
    sub->add_option("--threads", flags.threads, "worker threads (0 = all, capped by BONNET_THREADS)");
  };
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"synth", "train", "reconstruct", "eval", "pipeline"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "pipeline" ? "synth, train, reconstruct and eval in turn"
                                                                          : std::string("run the ") + name + " step");
    add_common(sub);
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig c;
    if (!flags.config.empty()) c = load_config(flags.config);
    if (flags.seed) c.seed = *flags.seed;
    if (!flags.out.empty()) c.out = flags.out;
    if (!flags.reg.empty()) c.reg = flags.reg;
    if (flags.ntheta) c.n_theta = *flags.ntheta;
    if (flags.n) c.n = *flags.n;
    if (flags.noise) c.noise = *flags.noise;
    if (!flags.mu0.empty()) c.mu0 = parse_mu(flags.mu0);
    if (!flags.mu.empty()) c.mu = parse_mu(flags.mu);
    if (!flags.name.empty()) c.name = flags.name;
    if (flags.tol_train) c.tol_train = *flags.tol_train;
    if (flags.tol_test) c.tol_test = *flags.tol_test;
    if (flags.threads) c.threads = *flags.threads;
    if (c.reg == "frac" && c.mu0.size() == 1) c.mu0.push_back(0.5);

    if (subs["synth"]->parsed()) cmd_synth(c);
    else if (subs["train"]->parsed()) cmd_train(c);
    else if (subs["reconstruct"]->parsed()) cmd_reconstruct(c);
    else if (subs["eval"]->parsed()) cmd_eval(c);
    else {
      cmd_synth(c);
      cmd_train(c);
      cmd_reconstruct(c);
      cmd_eval(c);
    }
  } catch (const std::exception& e) {
    std::cerr << "bonnet: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bonnet::cli
