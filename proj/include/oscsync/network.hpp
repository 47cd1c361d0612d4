#pragma once

// Network description for the Kuramoto recognition architecture: a clique of
// core oscillators driven by input oscillators that couple to cores only.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oscsync {

enum class Role { core, input };

struct OscillatorParams {
  double natural_frequency = 0.0;  // Hz
  Role role = Role::core;
};

/// Dense symmetric N x N matrix of coupling strengths in Hz.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t m, std::size_t n) const { return values_[m * n_ + n]; }

  /// Sets both k_mn and k_nm.
  void set(std::size_t m, std::size_t n, double k) {
    values_[m * n_ + n] = k;
    values_[n * n_ + m] = k;
  }

  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Immutable, validated network. Shared read-only between simulation workers.
class NetworkConfig {
 public:
  NetworkConfig(std::vector<OscillatorParams> oscillators, CouplingMatrix coupling,
                double noise_fwhm, double dt)
      : oscillators_(std::move(oscillators)),
        coupling_(std::move(coupling)),
        noise_fwhm_(noise_fwhm),
        dt_(dt) {
    validate();
  }

  std::size_t size() const { return oscillators_.size(); }
  const std::vector<OscillatorParams>& oscillators() const { return oscillators_; }
  const CouplingMatrix& coupling() const { return coupling_; }
  double noise_fwhm() const { return noise_fwhm_; }
  double dt() const { return dt_; }

  /// Indices of core oscillators in declaration order.
  std::vector<std::size_t> core_indices() const { return indices_of(Role::core); }
  std::vector<std::size_t> input_indices() const { return indices_of(Role::input); }

  /// Copy with some natural frequencies replaced (used to place a map point).
  NetworkConfig with_frequencies(const std::vector<std::pair<std::size_t, double>>& changes) const {
    auto osc = oscillators_;
    for (const auto& [index, f] : changes) {
      if (index >= osc.size()) throw std::out_of_range("oscillator index out of range");
      osc[index].natural_frequency = f;
    }
    return NetworkConfig(std::move(osc), coupling_, noise_fwhm_, dt_);
  }

  NetworkConfig with_noise(double fwhm) const {
    return NetworkConfig(oscillators_, coupling_, fwhm, dt_);
  }

 private:
  std::vector<std::size_t> indices_of(Role role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < oscillators_.size(); ++i)
      if (oscillators_[i].role == role) out.push_back(i);
    return out;
  }

  void validate() const {
    const std::size_t n = oscillators_.size();
    if (n == 0) throw std::invalid_argument("network has no oscillators");
    if (coupling_.size() != n) throw std::invalid_argument("coupling matrix size mismatch");
    for (const auto& o : oscillators_)
      if (!(o.natural_frequency > 0.0) || !std::isfinite(o.natural_frequency))
        throw std::invalid_argument("natural frequencies must be positive");
    for (std::size_t m = 0; m < n; ++m) {
      if (coupling_(m, m) != 0.0) throw std::invalid_argument("coupling diagonal must be zero");
      for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(coupling_(m, k)))
          throw std::invalid_argument("coupling must be finite");
        if (coupling_(m, k) != coupling_(k, m))
          throw std::invalid_argument("coupling matrix must be symmetric");
        if (m != k && oscillators_[m].role == Role::input && oscillators_[k].role == Role::input &&
            coupling_(m, k) != 0.0)
          throw std::invalid_argument("input oscillators may only couple to cores");
      }
    }
    if (!(noise_fwhm_ >= 0.0) || !std::isfinite(noise_fwhm_))
      throw std::invalid_argument("noise FWHM must be non-negative");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw std::invalid_argument("dt must be positive");
  }

  std::vector<OscillatorParams> oscillators_;
  CouplingMatrix coupling_;
  double noise_fwhm_;
  double dt_;
};

/// Stable 64-bit FNV-1a digest of everything that affects the dynamics.
inline std::uint64_t digest(const NetworkConfig& net) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g;", v);
    for (int i = 0; i < len; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& o : net.oscillators()) {
    feed(o.natural_frequency);
    feed(o.role == Role::core ? 0.0 : 1.0);
  }
  for (double k : net.coupling().values()) feed(k);
  feed(net.noise_fwhm());
  feed(net.dt());
  return h;
}

/// Uniform-coupling topology: core clique at k_cc, every input tied to every
/// core at k_ic. Defaults are the reference architecture (4 cores, 2 inputs).
struct PaperTopologySpec {
  std::vector<double> core_frequencies{560e6, 580e6, 600e6, 620e6};
  std::vector<double> input_frequencies{600e6, 600e6};
  double k_cc = 4e6;
  double k_ic = 12e6;
  double noise_fwhm = 0.0;
  double dt = 1e-10;
};

/// Cores come first in declaration order, then inputs, so pattern bit
/// positions never depend on the input count.
inline NetworkConfig build_paper_network(const PaperTopologySpec& spec) {
  if (spec.core_frequencies.size() < 2)
    throw std::invalid_argument("at least two core oscillators are required");
  if (spec.k_cc < 0.0 || spec.k_ic < 0.0 || !std::isfinite(spec.k_cc) || !std::isfinite(spec.k_ic))
    throw std::invalid_argument("couplings must be non-negative");

  std::vector<OscillatorParams> osc;
  for (double f : spec.core_frequencies) osc.push_back({f, Role::core});
  for (double f : spec.input_frequencies) osc.push_back({f, Role::input});

  const std::size_t cores = spec.core_frequencies.size();
  CouplingMatrix k(osc.size());
  for (std::size_t m = 0; m < cores; ++m)
    for (std::size_t n = m + 1; n < cores; ++n) k.set(m, n, spec.k_cc);
  for (std::size_t i = cores; i < osc.size(); ++i)
    for (std::size_t m = 0; m < cores; ++m) k.set(i, m, spec.k_ic);

  return NetworkConfig(std::move(osc), std::move(k), spec.noise_fwhm, spec.dt);
}

}  // namespace oscsync
