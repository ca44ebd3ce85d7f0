// Copyright 2026 The qmg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QMG_VARIANCE_HPP
#define QMG_VARIANCE_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qmg/graph.hpp"
#include "qmg/pauli.hpp"

namespace qmg {

/// Amplitudes over the computational basis; qubit q is bit q of the index.
struct StateVector {
  std::size_t n_qubits = 0;
  std::vector<std::complex<double>> amplitudes;

  StateVector() = default;
  explicit StateVector(std::size_t n) : n_qubits(n), amplitudes(std::size_t{1} << n) {}
  std::size_t dim() const { return amplitudes.size(); }
  double norm() const;
};

/// out = P |in>. P|b> = i^(#Y) (-1)^(popcount(b & z)) |b ^ x>.
void apply_pauli(const PauliWord& p, const StateVector& in, StateVector& out);
/// out = (sum_k w_k P_k + identity_coeff) |in>.
void apply_hamiltonian(const QubitHamiltonian& h, const StateVector& in, StateVector& out);

struct GroundStateOptions {
  std::size_t max_qubits = 16;
  double residual_tol = 1e-8;
  int krylov_dim = 80;
  int max_restarts = 200;
  std::uint64_t seed = 7;
};

struct GroundState {
  StateVector state;
  double energy = 0.0;
  double residual = 0.0;
  int matvecs = 0;
};

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization and
/// matrix-free Pauli application. Throws ConfigError past the qubit cap and
/// NumericError if the residual target is not reached.
GroundState ground_state(const QubitHamiltonian& h, const GroundStateOptions& opts = {});

/// <psi|P|psi>, clamped to [-1, 1].
double pauli_expectation(const StateVector& s, const PauliWord& p);
/// <psi|H|psi> including the identity offset.
double energy_expectation(const QubitHamiltonian& h, const StateVector& s);
/// <H^2> - <H>^2 evaluated on the statevector.
double total_variance(const QubitHamiltonian& h, const StateVector& s);

/// Means <P_k> for every term and Cov(P_k, P_l) for every pair that commutes
/// under the table's scheme (plus the diagonal). Stored densely; undefined
/// entries are NaN.
class CovarianceTable {
 public:
  CovarianceTable() = default;
  CovarianceTable(std::size_t n_terms, Scheme scheme, std::string fixture_hash);

  std::size_t n_terms() const { return n_; }
  Scheme scheme() const { return scheme_; }
  const std::string& fixture_hash() const { return hash_; }
  const std::vector<double>& means() const { return means_; }
  std::vector<double>& means() { return means_; }

  bool has(int k, int l) const;
  std::optional<double> get(int k, int l) const;
  /// Unchecked read; NaN when the pair is undefined.
  double at(int k, int l) const { return cov_[static_cast<std::size_t>(k) * n_ + static_cast<std::size_t>(l)]; }
  void set(int k, int l, double v);
  /// Defined entries with k <= l (diagonal included).
  std::size_t n_entries() const;

 private:
  std::size_t n_ = 0;
  Scheme scheme_ = Scheme::FC;
  std::string hash_;
  std::vector<double> means_;
  std::vector<double> cov_;
};

/// commut_graph must be the non-complement graph for the desired scheme.
/// Cov(P, Q) = s <R> - <P><Q> where P Q = s R with s = +-1.
CovarianceTable build_covariance_table(const QubitHamiltonian& h, const StateVector& s, const CommutGraph& commut_graph,
                                       const std::string& fixture_hash = {});

void save_covariance_table(const std::filesystem::path& path, const CovarianceTable& t);
/// Rejects a table whose hash or scheme differs from the expectation.
CovarianceTable load_covariance_table(const std::filesystem::path& path, const std::string& expected_hash,
                                      Scheme expected_scheme);

struct MeasurementCost {
  /// (sum_alpha sqrt(Var H_alpha))^2
  double eps2M = 0.0;
  int n_groups = 0;
  /// Var(H_alpha) before clamping, one per group in groups_of order.
  std::vector<double> fragment_variances;
  /// <H_alpha>, one per group.
  std::vector<double> fragment_means;
};

/// Throws std::invalid_argument on a missing covariance entry (the grouping
/// mixes non-commuting terms) and NumericError on a fragment variance below
/// -1e-6. Smaller negative variances are clamped to zero.
MeasurementCost measurement_cost(const Coloring& c, const CovarianceTable& table, const QubitHamiltonian& h);
double eps2M(const Coloring& c, const CovarianceTable& table, const QubitHamiltonian& h);

struct RewardParams {
  double lambda0 = 1e3;
  double lambda1 = 0.0;
  /// Target accuracy (Hartree); only used to report M = eps2M / epsilon^2.
  double epsilon = 1e-3;
  /// Reward assigned to invalid terminals and lower clamp for valid ones.
  double reward_floor = 1e-12;

  void validate() const;
};

struct RewardResult {
  double reward = 0.0;
  double r_m = 0.0;
  double r_g = 0.0;
  /// NaN when invalid.
  double eps2M = 0.0;
  int n_groups = 0;
  bool valid = false;
};

/// R = lambda0 / eps2M + lambda1 (N_P - N_G), floored at reward_floor.
/// Invalid colorings get reward_floor with zero components.
RewardResult reward(const Coloring& c, bool valid, const CovarianceTable& table, const QubitHamiltonian& h,
                    const RewardParams& params);

}  // namespace qmg

#endif  // QMG_VARIANCE_HPP
