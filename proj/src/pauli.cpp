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

#include "qmg/pauli.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "qmg/error.hpp"

namespace qmg {

namespace {

std::size_t blocks_for(std::size_t n_qubits) { return (n_qubits + 63) / 64; }

void require_same_size(const PauliWord& p, const PauliWord& q) {
  if (p.n_qubits() != q.n_qubits()) {
    throw std::invalid_argument("Pauli words act on different qubit counts (" + std::to_string(p.n_qubits()) +
                                " vs " + std::to_string(q.n_qubits()) + ")");
  }
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::complex<double> Phase::value() const {
  static constexpr std::complex<double> kPowers[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return kPowers[log_i_];
}

PauliWord::PauliWord(std::size_t n_qubits)
    : n_qubits_(n_qubits), x_(blocks_for(n_qubits), 0), z_(blocks_for(n_qubits), 0) {}

PauliWord PauliWord::from_masks(std::size_t n_qubits, std::vector<std::uint64_t> x,
                                std::vector<std::uint64_t> z) {
  if (x.size() != blocks_for(n_qubits) || z.size() != blocks_for(n_qubits)) {
    throw std::invalid_argument("mask block count does not match qubit count");
  }
  PauliWord w;
  w.n_qubits_ = n_qubits;
  w.x_ = std::move(x);
  w.z_ = std::move(z);
  return w;
}

Pauli PauliWord::get(std::size_t qubit) const {
  if (qubit >= n_qubits_) throw std::out_of_range("qubit index out of range");
  const std::uint64_t bit = std::uint64_t{1} << (qubit % 64);
  const unsigned x = (x_[qubit / 64] & bit) ? 1 : 0;
  const unsigned z = (z_[qubit / 64] & bit) ? 1 : 0;
  return static_cast<Pauli>(x | (z << 1));
}

void PauliWord::set(std::size_t qubit, Pauli p) {
  if (qubit >= n_qubits_) throw std::out_of_range("qubit index out of range");
  const std::uint64_t bit = std::uint64_t{1} << (qubit % 64);
  const auto v = static_cast<unsigned>(p);
  auto& xb = x_[qubit / 64];
  auto& zb = z_[qubit / 64];
  xb = (v & 1) ? (xb | bit) : (xb & ~bit);
  zb = (v & 2) ? (zb | bit) : (zb & ~bit);
}

bool PauliWord::is_identity() const {
  for (std::size_t b = 0; b < x_.size(); ++b) {
    if (x_[b] | z_[b]) return false;
  }
  return true;
}

std::size_t PauliWord::weight() const {
  std::size_t w = 0;
  for (std::size_t b = 0; b < x_.size(); ++b) w += std::popcount(x_[b] | z_[b]);
  return w;
}

std::size_t PauliWord::y_count() const {
  std::size_t w = 0;
  for (std::size_t b = 0; b < x_.size(); ++b) w += std::popcount(x_[b] & z_[b]);
  return w;
}

bool PauliWord::operator<(const PauliWord& o) const {
  if (n_qubits_ != o.n_qubits_) return n_qubits_ < o.n_qubits_;
  if (x_ != o.x_) return x_ < o.x_;
  return z_ < o.z_;
}

std::size_t PauliWordHash::operator()(const PauliWord& w) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull ^ w.n_qubits();
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (auto v : w.x_bits()) mix(v);
  for (auto v : w.z_bits()) mix(v);
  return static_cast<std::size_t>(h);
}

PauliWord parse_word(std::string_view text, std::size_t n_qubits) {
  PauliWord w(n_qubits);
  std::vector<bool> seen(n_qubits, false);
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string_view tok = text.substr(pos, end - pos);
    pos = end;

    Pauli letter;
    switch (tok[0]) {
      case 'X': letter = Pauli::X; break;
      case 'Y': letter = Pauli::Y; break;
      case 'Z': letter = Pauli::Z; break;
      default: throw ParseError("unknown Pauli letter in token '" + std::string(tok) + "'");
    }
    std::size_t q = 0;
    const char* first = tok.data() + 1;
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, q);
    if (tok.size() < 2 || ec != std::errc{} || ptr != last) {
      throw ParseError("malformed Pauli token '" + std::string(tok) + "'");
    }
    if (q >= n_qubits) {
      throw ParseError("qubit index " + std::to_string(q) + " out of range for " + std::to_string(n_qubits) +
                       " qubits");
    }
    if (seen[q]) throw ParseError("duplicate qubit index " + std::to_string(q));
    seen[q] = true;
    w.set(q, letter);
  }
  return w;
}

std::string serialize_word(const PauliWord& w) {
  std::string out;
  for (std::size_t q = 0; q < w.n_qubits(); ++q) {
    const Pauli p = w.get(q);
    if (p == Pauli::I) continue;
    if (!out.empty()) out.push_back(' ');
    out.push_back("IXZY"[static_cast<int>(p)]);
    out += std::to_string(q);
  }
  return out;
}

bool commutes_fc(const PauliWord& p, const PauliWord& q) {
  require_same_size(p, q);
  unsigned parity = 0;
  const auto& px = p.x_bits();
  const auto& pz = p.z_bits();
  const auto& qx = q.x_bits();
  const auto& qz = q.z_bits();
  for (std::size_t b = 0; b < px.size(); ++b) {
    parity ^= std::popcount((px[b] & qz[b]) ^ (pz[b] & qx[b])) & 1u;
  }
  return parity == 0;
}

bool commutes_qwc(const PauliWord& p, const PauliWord& q) {
  require_same_size(p, q);
  const auto& px = p.x_bits();
  const auto& pz = p.z_bits();
  const auto& qx = q.x_bits();
  const auto& qz = q.z_bits();
  for (std::size_t b = 0; b < px.size(); ++b) {
    const std::uint64_t both = (px[b] | pz[b]) & (qx[b] | qz[b]);
    const std::uint64_t differ = (px[b] ^ qx[b]) | (pz[b] ^ qz[b]);
    if (both & differ) return false;
  }
  return true;
}

// Writing each single-qubit Pauli as i^(xz) X^x Z^z, the product picks up
// i^(x1 z1 + x2 z2 - x3 z3) from the Y conventions and (-1)^(z1 x2) from
// moving Z^z1 past X^x2.
std::pair<Phase, PauliWord> multiply(const PauliWord& p, const PauliWord& q) {
  require_same_size(p, q);
  int log_i = 0;
  const auto& px = p.x_bits();
  const auto& pz = p.z_bits();
  const auto& qx = q.x_bits();
  const auto& qz = q.z_bits();
  std::vector<std::uint64_t> rx(px.size());
  std::vector<std::uint64_t> rz(px.size());
  for (std::size_t b = 0; b < px.size(); ++b) {
    rx[b] = px[b] ^ qx[b];
    rz[b] = pz[b] ^ qz[b];
    log_i += std::popcount(px[b] & pz[b]) + std::popcount(qx[b] & qz[b]) + 2 * std::popcount(pz[b] & qx[b]) -
             std::popcount(rx[b] & rz[b]);
  }
  return {Phase::from_log_i(log_i), PauliWord::from_masks(p.n_qubits(), std::move(rx), std::move(rz))};
}

std::string to_string(Scheme s) { return s == Scheme::FC ? "fc" : "qwc"; }

Scheme parse_scheme(std::string_view s) {
  if (s == "fc" || s == "FC") return Scheme::FC;
  if (s == "qwc" || s == "QWC") return Scheme::QWC;
  throw ConfigError("unknown scheme '" + std::string(s) + "' (expected fc or qwc)");
}

bool commutes(const PauliWord& p, const PauliWord& q, Scheme scheme) {
  return scheme == Scheme::FC ? commutes_fc(p, q) : commutes_qwc(p, q);
}

QubitHamiltonian parse_hamiltonian(std::istream& in, const LoadOptions& opts) {
  QubitHamiltonian h;
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    lines.emplace_back(lineno, std::string(line));
  }
  std::size_t first = 0;
  constexpr std::string_view kKey = "qubits:";
  if (!lines.empty() && std::string_view(lines[0].second).substr(0, kKey.size()) == kKey) {
    const std::string_view num = trim(std::string_view(lines[0].second).substr(kKey.size()));
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
    if (ec != std::errc{} || ptr != num.data() + num.size() || n == 0) {
      throw ParseError("invalid qubit count '" + std::string(num) + "'", lines[0].first);
    }
    h.n_qubits = n;
    first = 1;
  } else {
    // headerless: the register is just wide enough for the largest index
    for (const auto& [ln, line] : lines) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if ((ch == 'X' || ch == 'Y' || ch == 'Z') && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1]))) {
          std::size_t q = 0;
          std::from_chars(line.data() + i + 1, line.data() + line.size(), q);
          h.n_qubits = std::max(h.n_qubits, q + 1);
        }
      }
    }
  }
  const bool have_any_line = lines.size() > first;
  std::unordered_map<PauliWord, std::size_t, PauliWordHash> index;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const std::size_t ln = lines[li].first;
    const std::string_view line = lines[li].second;
    const auto split = line.find_first_of(" \t");
    const std::string_view coeff_text = line.substr(0, split);
    const std::string_view word_text = split == std::string_view::npos ? std::string_view{} : line.substr(split);
    if (coeff_text.find_first_of("jJ()") != std::string_view::npos ||
        coeff_text.find('i') != std::string_view::npos) {
      throw ParseError("non-real coefficient '" + std::string(coeff_text) + "'", ln);
    }
    double c = 0.0;
    auto [ptr, ec] = std::from_chars(coeff_text.data(), coeff_text.data() + coeff_text.size(), c);
    if (ec != std::errc{} || ptr != coeff_text.data() + coeff_text.size()) {
      throw ParseError("invalid coefficient '" + std::string(coeff_text) + "'", ln);
    }
    if (!std::isfinite(c)) throw ParseError("non-finite coefficient", ln);
    PauliWord w;
    try {
      w = parse_word(word_text, h.n_qubits);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), ln);
    }
    if (w.is_identity()) {
      h.identity_coeff += c;
      continue;
    }
    auto [it, inserted] = index.emplace(w, h.terms.size());
    if (inserted) {
      h.terms.push_back({c, std::move(w)});
    } else {
      h.terms[it->second].coeff += c;
    }
  }
  if (!have_any_line) throw ParseError("Hamiltonian has no terms");
  const bool had_terms = !h.terms.empty();
  std::erase_if(h.terms, [&](const PauliTerm& t) {
    return std::abs(t.coeff) < opts.drop_threshold;
  });
  if (had_terms && h.terms.empty()) {
    throw ParseError("all terms fell below drop_threshold");
  }
  return h;
}

QubitHamiltonian load_hamiltonian(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open Hamiltonian file '" + path.string() + "'");
  try {
    return parse_hamiltonian(in, opts);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_hamiltonian(std::ostream& out, const QubitHamiltonian& h) {
  out << "qubits: " << h.n_qubits << '\n';
  out << std::setprecision(17);
  if (h.identity_coeff != 0.0) out << h.identity_coeff << '\n';
  for (const auto& t : h.terms) out << t.coeff << ' ' << serialize_word(t.word) << '\n';
}

void save_hamiltonian(const std::filesystem::path& path, const QubitHamiltonian& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_hamiltonian(out, h);
}

std::string content_hash_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return content_hash_bytes(ss.str());
}

}  // namespace qmg
