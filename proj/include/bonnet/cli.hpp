#pragma once

#include "bonnet/network.hpp"
#include "bonnet/regularizers.hpp"
#include "bonnet/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bonnet::cli {

/// Fully resolved settings of one run; serialized flat, unknown keys rejected.
struct RunConfig {
  std::string name;  // run label; empty means the regularizer name
  int n = 64;
  int n_theta = 10;
  int n_tau = 0;  // 0: RadonOperator::default_n_tau(n)
  double noise = 0.001;
  std::uint64_t seed = 2024;
  int count = 30;
  int m_train = 20;
  double perturbation_scale = 1.0;

  std::string reg = "frac";
  double xi = 1e-5;
  std::vector<double> mu0{1e-5, 0.5};
  std::vector<std::string> learn;  // empty: every parameter of the regularizer
  std::optional<std::vector<double>> mu;  // explicit mu for reconstruct

  double outer_tol = 1e-3;
  int q_max = 100;
  std::string outer_scale = "log_lambda";
  double outer_initial_step = 1.0;
  int outer_max_backtracks = 20;
  double outer_step_tol = 1e-3;

  double tol_train = 1e-3;
  int train_max_iters = 300;
  double tol_test = 1e-5;
  int test_max_iters = 2000;
  std::string init = "zero";

  int threads = 0;
  std::string out = "bonnet_out";

  std::string run_name() const { return name.empty() ? reg : name; }
  int resolved_n_tau() const;
  RegKind reg_kind() const;
  RegParams mu0_params() const;
  TrainConfig train_config() const;
  SolverConfig test_solver() const;
};

/// Range checks; throws DomainError naming the offending key.
void validate(const RunConfig& c);

nlohmann::ordered_json to_json(const RunConfig& c);
/// Overlays the keys present in j onto base.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// "l" or "l,s".
std::vector<double> parse_mu(const std::string& text);

/// Output layout under config.out.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path data_dir(int n_theta) const;
  std::filesystem::path run_dir(const std::string& run, int n_theta) const;
  std::filesystem::path eval_dir() const { return root / "eval"; }

  static std::string sample_file(int index, const char* ext);
};

Layout layout(const RunConfig& c);

// Each command returns normally only after every declared output is written.
void cmd_synth(const RunConfig& c);
void cmd_train(const RunConfig& c);
void cmd_reconstruct(const RunConfig& c);
void cmd_eval(const RunConfig& c);

/// Entry point of the bonnet executable.
int run(int argc, char** argv);

}  // namespace bonnet::cli
