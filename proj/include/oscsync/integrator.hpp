#pragma once

// Stochastic Kuramoto integration.
//
//   dphi_n = [2 pi f_n + 2 pi sum_m k_mn sin(phi_m - phi_n)] dt + sigma dW_n
//
// The noise is additive, so the Milstein correction (which involves the
// derivative of the diffusion coefficient) vanishes and the Milstein step is
// the Euler-Maruyama step below. sigma^2 = 2 pi FWHM dt gives an isolated
// oscillator a Lorentzian line of the requested full width at half maximum.

#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscsync/fastmath.hpp"
#include "oscsync/network.hpp"
#include "oscsync/rng.hpp"

namespace oscsync {

struct NoiseModel {
  double fwhm = 0.0;  // Hz
  double dt = 1e-10;  // s

  double per_step_sigma() const { return std::sqrt(two_pi * fwhm * dt); }
};

struct PhaseState {
  std::vector<double> phases;  // wrapped into [0, 2pi)
  std::uint64_t step = 0;      // completed steps; time = step * dt
  double time(double dt) const { return static_cast<double>(step) * dt; }
};

/// Number of dt steps in `duration`; rejects durations that are not a
/// (numerically) integer multiple of dt.
inline std::uint64_t steps_for(double duration, double dt) {
  if (!(duration >= 0.0) || !(dt > 0.0)) throw std::invalid_argument("duration must be >= 0");
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio))
    throw std::invalid_argument("duration " + std::to_string(duration) +
                                " s is not a multiple of dt " + std::to_string(dt) + " s");
  return static_cast<std::uint64_t>(rounded);
}

/// Independent uniform initial phases on [0, 2pi).
inline std::vector<double> random_initial_phases(std::size_t n, const RngStream& rng) {
  std::vector<double> phases(n);
  for (std::size_t i = 0; i < n; ++i)
    phases[i] = wrap_phase(two_pi * rng.uniform(Draw::initial_phase, 0, static_cast<std::uint32_t>(i)));
  return phases;
}

/// Advances many independent runs of one network in lockstep.
///
/// Storage is oscillator-major, lane-minor (index = osc * lanes + lane), so
/// every per-lane loop is a unit-stride loop the compiler vectorizes. Lanes may
/// carry their own natural frequencies and random streams; coupling, dt and
/// noise strength are shared. Each lane's arithmetic is independent of how
/// many lanes run beside it.
class LaneIntegrator {
 public:
  struct Coupling {
    std::size_t m, n;
    double k_dt;  // 2 pi k_mn dt
  };

  LaneIntegrator(const NetworkConfig& net, std::size_t lanes, std::uint64_t master_seed = 0)
      : n_(net.size()),
        lanes_(lanes),
        sigma_(NoiseModel{net.noise_fwhm(), net.dt()}.per_step_sigma()),
        key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
        omega_dt_(n_ * lanes),
        phase_(n_ * lanes, 0.0),
        sin_(n_ * lanes),
        cos_(n_ * lanes),
        inc_(n_ * lanes),
        stream_lo_(lanes, 0),
        stream_hi_(lanes, 0) {
    if (lanes == 0) throw std::invalid_argument("lane count must be positive");
    for (std::size_t o = 0; o < n_; ++o)
      for (std::size_t r = 0; r < lanes_; ++r)
        omega_dt_[o * lanes_ + r] = two_pi * net.oscillators()[o].natural_frequency * net.dt();
    for (std::size_t m = 0; m < n_; ++m)
      for (std::size_t n = m + 1; n < n_; ++n)
        if (net.coupling()(m, n) != 0.0)
          couplings_.push_back({m, n, two_pi * net.coupling()(m, n) * net.dt()});
  }

  std::size_t oscillators() const { return n_; }
  std::size_t lanes() const { return lanes_; }

  void set_frequency(std::size_t lane, std::size_t osc, double f, double dt) {
    omega_dt_[osc * lanes_ + lane] = two_pi * f * dt;
  }

  void set_stream(std::size_t lane, std::uint64_t stream_id) {
    stream_lo_[lane] = static_cast<std::uint32_t>(stream_id);
    stream_hi_[lane] = static_cast<std::uint32_t>(stream_id >> 32);
  }

  double& phase(std::size_t lane, std::size_t osc) { return phase_[osc * lanes_ + lane]; }
  double phase(std::size_t lane, std::size_t osc) const { return phase_[osc * lanes_ + lane]; }

  std::span<const double> sin_values() const { return sin_; }
  std::span<const double> cos_values() const { return cos_; }
  std::span<const double> increments() const { return inc_; }

  /// sin/cos of the current phases. Must precede advance().
  void evaluate_signals() {
    const std::size_t total = n_ * lanes_;
    double* __restrict s = sin_.data();
    double* __restrict c = cos_.data();
    const double* __restrict p = phase_.data();
    for (std::size_t e = 0; e < total; ++e) fast_sincos(p[e], s[e], c[e]);
  }

  /// One step from the current state; `step` indexes the noise counter.
  void advance(std::uint64_t step) {
    const std::size_t total = n_ * lanes_;
    const std::size_t L = lanes_;
    double* __restrict inc = inc_.data();
    const double* __restrict omega = omega_dt_.data();
    const double* __restrict s = sin_.data();
    const double* __restrict c = cos_.data();

    for (std::size_t e = 0; e < total; ++e) inc[e] = omega[e];

    for (const Coupling& k : couplings_) {
      const double kdt = k.k_dt;
      const double* __restrict sm = s + k.m * L;
      const double* __restrict cm = c + k.m * L;
      const double* __restrict sn = s + k.n * L;
      const double* __restrict cn = c + k.n * L;
      double* __restrict im = inc + k.m * L;
      double* __restrict in = inc + k.n * L;
      for (std::size_t r = 0; r < L; ++r) {
        const double pull = kdt * (sm[r] * cn[r] - cm[r] * sn[r]);  // sin(phi_m - phi_n)
        in[r] += pull;
        im[r] -= pull;
      }
    }

    if (sigma_ > 0.0) add_noise(step);

    double* __restrict p = phase_.data();
    for (std::size_t e = 0; e < total; ++e) p[e] = wrap_phase(p[e] + inc[e]);
  }

 private:
  void add_noise(std::uint64_t step) {
    const std::size_t L = lanes_;
    const double sigma = sigma_;
    const PhiloxKey key = key_;
    const std::uint32_t step_lo = static_cast<std::uint32_t>(step);
    const std::uint32_t step_hi = static_cast<std::uint32_t>(step >> 32) << 20;
    const std::uint32_t* __restrict slo = stream_lo_.data();
    const std::uint32_t* __restrict shi = stream_hi_.data();
    for (std::size_t slot = 0; 2 * slot < n_; ++slot) {
      double* __restrict a = inc_.data() + 2 * slot * L;
      const bool has_second = 2 * slot + 1 < n_;
      double* __restrict b = has_second ? a + L : noise_spill(L);
      const std::uint32_t word1 = static_cast<std::uint32_t>(slot) | step_hi;
      for (std::size_t r = 0; r < L; ++r) {
        const PhiloxCounter blk = philox4x32_10({step_lo, word1, slo[r], shi[r]}, key);
        const double u1 = uniform_open(blk[0], blk[1]);
        const double u2 = uniform_open(blk[2], blk[3]);
        const double radius = std::sqrt(-2.0 * fast_log(u1));
        double sn, cs;
        fast_sincos(two_pi * u2, sn, cs);
        a[r] += sigma * (radius * cs);
        b[r] += sigma * (radius * sn);
      }
    }
  }

  double* noise_spill(std::size_t lanes) {
    spill_.assign(lanes, 0.0);
    return spill_.data();
  }

  std::size_t n_;
  std::size_t lanes_;
  double sigma_;
  PhiloxKey key_;
  std::vector<Coupling> couplings_;
  std::vector<double> omega_dt_;
  std::vector<double> phase_;
  std::vector<double> sin_;
  std::vector<double> cos_;
  std::vector<double> inc_;
  std::vector<double> spill_;
  std::vector<std::uint32_t> stream_lo_;
  std::vector<std::uint32_t> stream_hi_;
};

/// Read-only per-step callback used by run().
class PhaseObserver {
 public:
  virtual ~PhaseObserver() = default;
  /// Called after every step with the post-step time, wrapped phases and the
  /// raw (unwrapped) phase increments of that step.
  virtual void observe(double time, std::span<const double> phases,
                       std::span<const double> increments) = 0;
};

/// One Euler-Maruyama step of a single run.
inline PhaseState step(const NetworkConfig& config, const PhaseState& state, const RngStream& rng) {
  if (state.phases.size() != config.size()) throw std::invalid_argument("state dimension mismatch");
  LaneIntegrator lane(config, 1, rng.master_seed);
  lane.set_stream(0, rng.stream_id);
  for (std::size_t o = 0; o < config.size(); ++o) lane.phase(0, o) = state.phases[o];
  lane.evaluate_signals();
  lane.advance(state.step);
  PhaseState next{std::vector<double>(config.size()), state.step + 1};
  for (std::size_t o = 0; o < config.size(); ++o) next.phases[o] = lane.phase(0, o);
  return next;
}

/// Integrates `duration` seconds, calling every observer once per step.
inline PhaseState run(const NetworkConfig& config, double duration, const PhaseState& initial,
                      const RngStream& rng, std::span<PhaseObserver* const> observers = {}) {
  const std::size_t n = config.size();
  if (initial.phases.size() != n) throw std::invalid_argument("state dimension mismatch");
  const std::uint64_t steps = steps_for(duration, config.dt());
  if (steps == 0) throw std::invalid_argument("duration must be positive");

  LaneIntegrator lane(config, 1, rng.master_seed);
  lane.set_stream(0, rng.stream_id);
  for (std::size_t o = 0; o < n; ++o) lane.phase(0, o) = initial.phases[o];

  std::vector<double> phases(n);
  std::uint64_t current = initial.step;
  for (std::uint64_t k = 0; k < steps; ++k, ++current) {
    lane.evaluate_signals();
    lane.advance(current);
    if (observers.empty()) continue;
    for (std::size_t o = 0; o < n; ++o) phases[o] = lane.phase(0, o);
    const double t = static_cast<double>(current + 1) * config.dt();
    for (PhaseObserver* obs : observers) {
      try {
        obs->observe(t, phases, lane.increments());
      } catch (const std::exception& e) {
        throw std::runtime_error("observer failed at step " + std::to_string(current + 1) + ": " +
                                 e.what());
      }
    }
  }

  PhaseState out{std::vector<double>(n), current};
  for (std::size_t o = 0; o < n; ++o) out.phases[o] = lane.phase(0, o);
  return out;
}

inline double measure_mean_frequency(double unwrapped_phase_delta, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  return unwrapped_phase_delta / (two_pi * window);
}

/// Accumulates the unwrapped phase advance of every oscillator, ignoring the
/// first `skip_steps` steps (the cool-down).
class MeanFrequencyObserver : public PhaseObserver {
 public:
  MeanFrequencyObserver(std::size_t n, double dt, std::uint64_t skip_steps = 0)
      : dt_(dt), skip_(skip_steps), advance_(n, 0.0) {}

  void observe(double, std::span<const double>, std::span<const double> increments) override {
    if (seen_++ < skip_) return;
    for (std::size_t i = 0; i < advance_.size(); ++i) advance_[i] += increments[i];
    ++counted_;
  }

  std::vector<double> mean_frequencies() const {
    if (counted_ == 0) throw std::runtime_error("no samples inside the measurement window");
    const double window = static_cast<double>(counted_) * dt_;
    std::vector<double> f(advance_.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = measure_mean_frequency(advance_[i], window);
    return f;
  }

  const std::vector<double>& unwrapped_advance() const { return advance_; }

 private:
  double dt_;
  std::uint64_t skip_;
  std::uint64_t seen_ = 0;
  std::uint64_t counted_ = 0;
  std::vector<double> advance_;
};

}  // namespace oscsync
