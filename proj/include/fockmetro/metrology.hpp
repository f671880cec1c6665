#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fockmetro/fock.hpp"

namespace fockmetro {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class StateKind { Coherent, Squeezed, MthPhase, Multisqueezed, ChannelDegraded, Other };

struct StateLabel {
  StateKind kind = StateKind::Other;
  int m = 0;
  double alpha = 0.0;
  std::string detail;

  std::string describe() const;
};

struct QfiResult {
  double occupation = 0.0;
  double qfi = 0.0;
  StateLabel state_label;
  bool converged = true;
};

struct ScalingCurve {
  std::vector<std::pair<double, double>> points;  // (log10 nbar, log10 F)
  std::vector<double> beta;

  static ScalingCurve from_samples(const std::vector<double>& nbar, const std::vector<double>& qfi);
};

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double stderr_a = 0.0;
  double stderr_b = 0.0;
  std::vector<std::pair<double, double>> samples;  // (log10 alpha, log10 max beta)
};

BigInt double_factorial(int k);

double occupation(const PureState& state);
double occupation(const MixedState& state);

QfiResult qfi_pure(const PureState& state, const std::optional<OperatorMatrix>& generator = std::nullopt,
                   StateLabel label = {});

struct QfiMixedOptions {
  double eig_floor = 1e-12;
  // use the stored factor when its column count is below this fraction of dim
  double factor_fraction = 0.5;
};

QfiResult qfi_mixed(const MixedState& rho, const std::optional<OperatorMatrix>& generator = std::nullopt,
                    StateLabel label = {}, const QfiMixedOptions& opt = {});

// Eigen-pair evaluation of the mixed-state formula given p_k and <k|H|l>
double qfi_from_spectrum(const RVec& p, const CMat& h_eig, double eig_floor);

double qfi_coherent_closed(double nbar);
double qfi_squeezed_closed(double nbar);
double qfi_mth_phase_closed(int m, double nbar);
double beta_mth_phase_closed(int m, double nbar);
BigRational crossover_occupation_exact(int m);
double crossover_occupation(int m);

ScalingCurve beta_numeric(ScalingCurve curve);
double max_beta(const ScalingCurve& curve);

FitResult fit_max_beta(const std::vector<std::pair<double, double>>& alpha_maxbeta);

// log-spaced grid with points per decade; stop included when it falls on the grid
std::vector<double> log_grid(double start, double stop, int per_decade);

}  // namespace fockmetro
