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

#ifndef QMG_PAULI_HPP
#define QMG_PAULI_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qmg {

/// Single-qubit Pauli letter. The enum value packs (x, z) as x | (z << 1).
enum class Pauli : std::uint8_t { I = 0, X = 1, Z = 2, Y = 3 };

/// A scalar in {+1, +i, -1, -i}, stored as the exponent of i.
class Phase {
 public:
  constexpr Phase() = default;
  static constexpr Phase from_log_i(int k) { return Phase(static_cast<std::uint8_t>(((k % 4) + 4) % 4)); }

  constexpr int log_i() const { return log_i_; }
  constexpr bool is_real() const { return (log_i_ & 1) == 0; }
  /// +1 or -1; only meaningful when is_real().
  constexpr double sign() const { return log_i_ == 0 ? 1.0 : -1.0; }
  std::complex<double> value() const;

  constexpr Phase operator*(Phase o) const { return from_log_i(log_i_ + o.log_i_); }
  constexpr bool operator==(const Phase&) const = default;

 private:
  constexpr explicit Phase(std::uint8_t k) : log_i_(k) {}
  std::uint8_t log_i_ = 0;
};

/// Tensor product of single-qubit Paulis in symplectic form. Qubit q lives in
/// bit (q % 64) of block (q / 64) of both masks.
class PauliWord {
 public:
  PauliWord() = default;
  explicit PauliWord(std::size_t n_qubits);
  /// Masks must hold ceil(n_qubits / 64) blocks with no bits at or above n_qubits.
  static PauliWord from_masks(std::size_t n_qubits, std::vector<std::uint64_t> x, std::vector<std::uint64_t> z);

  std::size_t n_qubits() const { return n_qubits_; }
  const std::vector<std::uint64_t>& x_bits() const { return x_; }
  const std::vector<std::uint64_t>& z_bits() const { return z_; }

  Pauli get(std::size_t qubit) const;
  void set(std::size_t qubit, Pauli p);

  bool is_identity() const;
  /// Number of qubits acted on non-trivially.
  std::size_t weight() const;
  std::size_t y_count() const;

  /// Low 64 bits of each mask; valid for n_qubits <= 64.
  std::uint64_t x_word() const { return x_.empty() ? 0 : x_[0]; }
  std::uint64_t z_word() const { return z_.empty() ? 0 : z_[0]; }

  bool operator==(const PauliWord&) const = default;
  bool operator<(const PauliWord& o) const;

 private:
  std::size_t n_qubits_ = 0;
  std::vector<std::uint64_t> x_;
  std::vector<std::uint64_t> z_;
};

struct PauliWordHash {
  std::size_t operator()(const PauliWord& w) const noexcept;
};

/// Parses whitespace-separated tokens like "X0 Y3 Z2". Empty text is the identity.
PauliWord parse_word(std::string_view text, std::size_t n_qubits);
/// Canonical text: tokens in ascending qubit order, "" for the identity.
std::string serialize_word(const PauliWord& w);

/// Symplectic inner product x_p.z_q + z_p.x_q is even.
bool commutes_fc(const PauliWord& p, const PauliWord& q);
/// On every qubit one side is identity or both sides agree.
bool commutes_qwc(const PauliWord& p, const PauliWord& q);

/// p * q = phase * word.
std::pair<Phase, PauliWord> multiply(const PauliWord& p, const PauliWord& q);

enum class Scheme { FC, QWC };

std::string to_string(Scheme s);
Scheme parse_scheme(std::string_view s);
bool commutes(const PauliWord& p, const PauliWord& q, Scheme scheme);

struct PauliTerm {
  double coeff = 0.0;
  PauliWord word;
};

/// Real-weighted sum of non-identity Pauli words plus a constant offset.
struct QubitHamiltonian {
  std::size_t n_qubits = 0;
  std::vector<PauliTerm> terms;
  double identity_coeff = 0.0;

  std::size_t n_terms() const { return terms.size(); }
};

struct LoadOptions {
  /// Terms with |coeff| below this are removed after merging.
  double drop_threshold = 0.0;
};

QubitHamiltonian parse_hamiltonian(std::istream& in, const LoadOptions& opts = {});
QubitHamiltonian load_hamiltonian(const std::filesystem::path& path, const LoadOptions& opts = {});
void write_hamiltonian(std::ostream& out, const QubitHamiltonian& h);
void save_hamiltonian(const std::filesystem::path& path, const QubitHamiltonian& h);

/// FNV-1a 64 of the file bytes, as 16 lowercase hex digits.
std::string content_hash(const std::filesystem::path& path);
std::string content_hash_bytes(std::string_view bytes);

}  // namespace qmg

#endif  // QMG_PAULI_HPP
