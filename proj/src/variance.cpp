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

#include "qmg/variance.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "qmg/error.hpp"
#include "qmg/rng.hpp"

namespace qmg {

namespace {

using cplx = std::complex<double>;

cplx dot(const StateVector& a, const StateVector& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return s;
}

void axpy(cplx alpha, const StateVector& x, StateVector& y) {
  for (std::size_t i = 0; i < y.dim(); ++i) y.amplitudes[i] += alpha * x.amplitudes[i];
}

void scale(StateVector& x, double s) {
  for (auto& a : x.amplitudes) a *= s;
}

void require_small(const PauliWord& p, const StateVector& s) {
  if (p.n_qubits() != s.n_qubits) {
    throw std::invalid_argument("Pauli word acts on " + std::to_string(p.n_qubits()) + " qubits, state has " +
                                std::to_string(s.n_qubits));
  }
  if (s.n_qubits > 62) throw std::invalid_argument("statevector too large");
}

}  // namespace

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return std::sqrt(s);
}

void apply_pauli(const PauliWord& p, const StateVector& in, StateVector& out) {
  require_small(p, in);
  out.n_qubits = in.n_qubits;
  out.amplitudes.resize(in.dim());
  const std::uint64_t x = p.x_word();
  const std::uint64_t z = p.z_word();
  const cplx yphase = Phase::from_log_i(static_cast<int>(p.y_count())).value();
  for (std::uint64_t b = 0; b < in.dim(); ++b) {
    const double sign = (std::popcount(b & z) & 1) ? -1.0 : 1.0;
    out.amplitudes[b ^ x] = yphase * sign * in.amplitudes[b];
  }
}

void apply_hamiltonian(const QubitHamiltonian& h, const StateVector& in, StateVector& out) {
  out.n_qubits = in.n_qubits;
  out.amplitudes.assign(in.dim(), cplx{0.0, 0.0});
  for (std::size_t b = 0; b < in.dim(); ++b) out.amplitudes[b] = h.identity_coeff * in.amplitudes[b];
  for (const auto& t : h.terms) {
    require_small(t.word, in);
    const std::uint64_t x = t.word.x_word();
    const std::uint64_t z = t.word.z_word();
    const cplx f = t.coeff * Phase::from_log_i(static_cast<int>(t.word.y_count())).value();
    for (std::uint64_t b = 0; b < in.dim(); ++b) {
      const double sign = (std::popcount(b & z) & 1) ? -1.0 : 1.0;
      out.amplitudes[b ^ x] += (sign * f) * in.amplitudes[b];
    }
  }
}

GroundState ground_state(const QubitHamiltonian& h, const GroundStateOptions& opts) {
  if (h.n_qubits > opts.max_qubits) {
    throw ConfigError("ground state needs " + std::to_string(h.n_qubits) + " qubits, cap is " +
                      std::to_string(opts.max_qubits));
  }
  const std::size_t dim = std::size_t{1} << h.n_qubits;
  const int m = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.krylov_dim, 2)), dim));

  GroundState out;
  StateVector start(h.n_qubits);
  Rng rng(opts.seed);
  for (auto& a : start.amplitudes) a = cplx(rng.normal(), rng.normal());
  scale(start, 1.0 / start.norm());

  StateVector w(h.n_qubits);
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    std::vector<StateVector> basis;
    basis.reserve(static_cast<std::size_t>(m));
    basis.push_back(start);
    std::vector<double> alpha;
    std::vector<double> beta;
    for (int j = 0; j < m; ++j) {
      apply_hamiltonian(h, basis[static_cast<std::size_t>(j)], w);
      ++out.matvecs;
      alpha.push_back(dot(basis[static_cast<std::size_t>(j)], w).real());
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& v : basis) axpy(-dot(v, w), v, w);
      }
      const double b = w.norm();
      if (j + 1 == m || b < 1e-12) break;
      beta.push_back(b);
      scale(w, 1.0 / b);
      basis.push_back(w);
    }
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), k);
    Eigen::VectorXd sub(std::max<Eigen::Index>(k - 1, 0));
    for (Eigen::Index i = 0; i + 1 < k; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::VectorXd y = eig.eigenvectors().col(0);

    StateVector ritz(h.n_qubits);
    for (Eigen::Index i = 0; i < k; ++i) axpy(y(i), basis[static_cast<std::size_t>(i)], ritz);
    scale(ritz, 1.0 / ritz.norm());

    apply_hamiltonian(h, ritz, w);
    ++out.matvecs;
    const double energy = dot(ritz, w).real();
    axpy(-energy, ritz, w);
    const double residual = w.norm();
    out.state = ritz;
    out.energy = energy;
    out.residual = residual;
    if (residual <= opts.residual_tol) return out;
    start = std::move(ritz);
  }
  throw NumericError("ground state did not converge: residual " + std::to_string(out.residual) + " after " +
                     std::to_string(out.matvecs) + " matvecs");
}

double pauli_expectation(const StateVector& s, const PauliWord& p) {
  require_small(p, s);
  const std::uint64_t x = p.x_word();
  const std::uint64_t z = p.z_word();
  cplx acc = 0.0;
  for (std::uint64_t b = 0; b < s.dim(); ++b) {
    const double sign = (std::popcount(b & z) & 1) ? -1.0 : 1.0;
    acc += sign * std::conj(s.amplitudes[b ^ x]) * s.amplitudes[b];
  }
  acc *= Phase::from_log_i(static_cast<int>(p.y_count())).value();
  return std::clamp(acc.real(), -1.0, 1.0);
}

double energy_expectation(const QubitHamiltonian& h, const StateVector& s) {
  StateVector hs;
  apply_hamiltonian(h, s, hs);
  return dot(s, hs).real();
}

double total_variance(const QubitHamiltonian& h, const StateVector& s) {
  StateVector hs;
  apply_hamiltonian(h, s, hs);
  const double mean = dot(s, hs).real();
  return dot(hs, hs).real() - mean * mean;
}

CovarianceTable::CovarianceTable(std::size_t n_terms, Scheme scheme, std::string fixture_hash)
    : n_(n_terms),
      scheme_(scheme),
      hash_(std::move(fixture_hash)),
      means_(n_terms, 0.0),
      cov_(n_terms * n_terms, std::numeric_limits<double>::quiet_NaN()) {}

bool CovarianceTable::has(int k, int l) const { return !std::isnan(at(k, l)); }

std::optional<double> CovarianceTable::get(int k, int l) const {
  const double v = at(k, l);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void CovarianceTable::set(int k, int l, double v) {
  cov_[static_cast<std::size_t>(k) * n_ + static_cast<std::size_t>(l)] = v;
  cov_[static_cast<std::size_t>(l) * n_ + static_cast<std::size_t>(k)] = v;
}

std::size_t CovarianceTable::n_entries() const {
  std::size_t c = 0;
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t l = k; l < n_; ++l) c += has(static_cast<int>(k), static_cast<int>(l)) ? 1 : 0;
  }
  return c;
}

CovarianceTable build_covariance_table(const QubitHamiltonian& h, const StateVector& s, const CommutGraph& commut_graph,
                                       const std::string& fixture_hash) {
  if (commut_graph.is_complement()) {
    throw std::invalid_argument("covariance table needs the commutativity graph, not its complement");
  }
  const std::size_t n = h.n_terms();
  if (commut_graph.n_nodes() != n) throw std::invalid_argument("graph size does not match Hamiltonian");
  CovarianceTable t(n, commut_graph.scheme(), fixture_hash);
  for (std::size_t k = 0; k < n; ++k) t.means()[k] = pauli_expectation(s, h.terms[k].word);
  for (std::size_t k = 0; k < n; ++k) {
    const int ki = static_cast<int>(k);
    t.set(ki, ki, 1.0 - t.means()[k] * t.means()[k]);
    for (int l : commut_graph.neighbors(ki)) {
      if (l <= ki) continue;
      auto [phase, word] = multiply(h.terms[k].word, h.terms[static_cast<std::size_t>(l)].word);
      if (!phase.is_real()) {
        throw std::invalid_argument("terms " + std::to_string(k) + " and " + std::to_string(l) +
                                    " do not commute (imaginary product phase)");
      }
      const double pq = phase.sign() * pauli_expectation(s, word);
      t.set(ki, l, pq - t.means()[k] * t.means()[static_cast<std::size_t>(l)]);
    }
  }
  return t;
}

void save_covariance_table(const std::filesystem::path& path, const CovarianceTable& t) {
  nlohmann::json j;
  j["version"] = 1;
  j["hash"] = t.fixture_hash();
  j["scheme"] = to_string(t.scheme());
  j["n_terms"] = t.n_terms();
  j["means"] = t.means();
  auto cov = nlohmann::json::array();
  for (std::size_t k = 0; k < t.n_terms(); ++k) {
    for (std::size_t l = k; l < t.n_terms(); ++l) {
      const double v = t.at(static_cast<int>(k), static_cast<int>(l));
      if (!std::isnan(v)) cov.push_back({k, l, v});
    }
  }
  j["cov"] = std::move(cov);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write covariance cache '" + path.string() + "'");
  out << j.dump() << '\n';
}

CovarianceTable load_covariance_table(const std::filesystem::path& path, const std::string& expected_hash,
                                      Scheme expected_scheme) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open covariance cache '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported covariance cache version");
    const auto hash = j.at("hash").get<std::string>();
    if (hash != expected_hash) {
      throw ConfigError("covariance cache hash " + hash + " does not match fixture hash " + expected_hash);
    }
    const Scheme scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (scheme != expected_scheme) throw ConfigError("covariance cache was built for another scheme");
    const auto n = j.at("n_terms").get<std::size_t>();
    CovarianceTable t(n, scheme, hash);
    t.means() = j.at("means").get<std::vector<double>>();
    if (t.means().size() != n) throw ParseError("covariance cache means length mismatch");
    for (const auto& e : j.at("cov")) {
      const auto k = e.at(0).get<std::size_t>();
      const auto l = e.at(1).get<std::size_t>();
      if (k >= n || l >= n) throw ParseError("covariance cache index out of range");
      t.set(static_cast<int>(k), static_cast<int>(l), e.at(2).get<double>());
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed covariance cache: " + std::string(e.what()));
  }
}

MeasurementCost measurement_cost(const Coloring& c, const CovarianceTable& table, const QubitHamiltonian& h) {
  if (c.size() != h.n_terms() || table.n_terms() != h.n_terms()) {
    throw std::invalid_argument("coloring, table and Hamiltonian sizes disagree");
  }
  MeasurementCost out;
  const auto groups = groups_of(c);
  out.n_groups = static_cast<int>(groups.size());
  double sum_std = 0.0;
  for (const auto& g : groups) {
    double var = 0.0;
    double mean = 0.0;
    for (int k : g) {
      const double wk = h.terms[static_cast<std::size_t>(k)].coeff;
      mean += wk * table.means()[static_cast<std::size_t>(k)];
      for (int l : g) {
        const double v = table.at(k, l);
        if (std::isnan(v)) {
          throw std::invalid_argument("missing covariance entry (" + std::to_string(k) + ", " + std::to_string(l) +
                                      "): grouping mixes non-commuting terms");
        }
        var += wk * h.terms[static_cast<std::size_t>(l)].coeff * v;
      }
    }
    if (var < -1e-6) throw NumericError("fragment variance " + std::to_string(var) + " is materially negative");
    out.fragment_variances.push_back(var);
    out.fragment_means.push_back(mean);
    sum_std += std::sqrt(std::max(var, 0.0));
  }
  out.eps2M = sum_std * sum_std;
  return out;
}

double eps2M(const Coloring& c, const CovarianceTable& table, const QubitHamiltonian& h) {
  return measurement_cost(c, table, h).eps2M;
}

void RewardParams::validate() const {
  if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0)) throw ConfigError("lambda0 and lambda1 must be nonnegative");
  if (!(lambda0 + lambda1 > 0.0)) throw ConfigError("lambda0 + lambda1 must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(reward_floor > 0.0)) throw ConfigError("reward_floor must be positive");
}

RewardResult reward(const Coloring& c, bool valid, const CovarianceTable& table, const QubitHamiltonian& h,
                    const RewardParams& params) {
  RewardResult r;
  r.valid = valid;
  if (!valid) {
    r.reward = params.reward_floor;
    r.eps2M = std::numeric_limits<double>::quiet_NaN();
    r.n_groups = c.n_groups();
    return r;
  }
  r.eps2M = eps2M(c, table, h);
  r.n_groups = c.n_groups();
  // Exact eigenstates give eps2M = 0; cap R_M instead of dividing by zero.
  r.r_m = 1.0 / std::max(r.eps2M, 1e-12);
  r.r_g = static_cast<double>(h.n_terms()) - static_cast<double>(r.n_groups);
  r.reward = std::max(params.lambda0 * r.r_m + params.lambda1 * r.r_g, params.reward_floor);
  return r;
}

}  // namespace qmg
