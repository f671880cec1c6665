#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fockmetro/channels.hpp"

namespace fockmetro::cli {

enum class Task {
  QfiSweep,
  BetaSweep,
  SensitivitySweep,
  FixedObsSweep,
  DecoherenceSweep,
  ScSweep,
  FitBeta,
  StateInfo
};

const char* task_name(Task t);        // qfi_sweep
const char* task_subcommand(Task t);  // qfi-sweep
std::optional<Task> task_from_string(const std::string& s);

enum class FamilyKind { Coherent, Squeezed, Fock, MthPhase, Multisqueezed };

const char* family_name(FamilyKind k);

struct FamilySpec {
  FamilyKind kind = FamilyKind::MthPhase;
  int m = 0;
  double alpha = 0.0;  // pump amplitude, multisqueezed only
  // explicit strength for state_info: coherent amplitude, squeezing r, gamma, kappa, Fock level
  std::optional<double> parameter;
};

struct Truncation {
  double tail_tol = 1e-17;
  int tail_window = 2;
  int start_dim = 0;  // 0: occupation-based default
  int max_dim = 1 << 19;
  int pump_dim = 0;   // 0: default from alpha
};

struct SweepConfig {
  Task task = Task::QfiSweep;
  FamilySpec family;
  std::vector<double> grid;        // occupations
  std::vector<double> strengths;   // decoherence_sweep
  std::optional<double> nbar;      // decoherence_sweep, state_info
  int pool_order = 0;
  std::string observable;          // fixed_obs_sweep: b3p | b4p | bms
  std::optional<ChannelKind> channel;
  double s_max = 10.0;
  std::vector<double> alpha_list;  // fit_beta
  Truncation truncation;
  std::string output = ".";
  int workers = 1;
  bool cache = true;
};

// throws Error(ConfigError) naming the offending field
SweepConfig parse_config(const std::string& json_text, std::optional<Task> expected = std::nullopt);
SweepConfig load_config(const std::string& path, std::optional<Task> expected = std::nullopt);

// canonical text of everything that affects a point's value
std::string family_key(const FamilySpec& f);
std::string truncation_key(const Truncation& t);

}  // namespace fockmetro::cli
