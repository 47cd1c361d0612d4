#pragma once

// Linewidth of an isolated noisy oscillator, used to check the noise
// calibration.
//
// The carrier is removed from the unwrapped phase, leaving the Wiener phase
// psi. The averaged periodogram of exp(i psi) over equal segments is compared
// with its exact expectation: for white phase increments the autocorrelation
// at lag l is rho^|l| with rho = exp(-pi FWHM dt), so a segment of M samples
// has expected periodogram sum_l (M - |l|) rho^|l| e^{-i w l} / M. The FWHM
// is the value whose expected spectrum best fits the measured one in a
// least-squares sense on log power, with a free amplitude.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscsync/fastmath.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/network.hpp"
#include "oscsync/rng.hpp"

namespace oscsync {

namespace detail {

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

/// Forward DFT.
inline std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x) {
  const std::size_t n = x.size();
  FftwBuffer buf(n);
  FftwPlan p;
  p.plan = fftw_plan_dft_1d(static_cast<int>(n), buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < n; ++i) {
    buf.data[i][0] = x[i].real();
    buf.data[i][1] = x[i].imag();
  }
  fftw_execute(p.plan);
  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {buf.data[i][0], buf.data[i][1]};
  return out;
}

/// Periodogram |X_k|^2 / n.
inline std::vector<double> periodogram(std::span<const std::complex<double>> x) {
  const auto spec = dft(x);
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = std::norm(spec[i]) / static_cast<double>(spec.size());
  return out;
}

/// Expected periodogram of exp(i psi) for an M-sample segment, at the M
/// Fourier frequencies of that segment.
inline std::vector<double> expected_periodogram(std::size_t m, double fwhm, double dt) {
  const double rho = std::exp(-std::numbers::pi * fwhm * dt);
  // triangle-weighted autocorrelation on a 2M circle; even bins of its DFT
  // are the segment's Fourier frequencies
  std::vector<std::complex<double>> c(2 * m, 0.0);
  double r = 1.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double v = static_cast<double>(m - l) * r / static_cast<double>(m);
    c[l] = v;
    if (l > 0) c[2 * m - l] = v;
    r *= rho;
  }
  const auto spec = dft(c);  // real: the sequence is symmetric
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = spec[2 * k].real();
  return out;
}

}  // namespace detail

struct LinewidthOptions {
  double carrier = 600e6;  // Hz
  double dt = 1e-10;
  std::size_t segments = 20;
  std::size_t fit_bins = 128;  // bins on each side of the carrier used in the fit
  std::uint64_t seed = 1;
};

struct LinewidthEstimate {
  double fwhm = 0.0;        // Hz
  double resolution = 0.0;  // segment frequency resolution, Hz
  bool resolution_limited = false;
};

/// Simulated Wiener phase with the carrier removed, one value per step.
inline std::vector<double> baseband_phase(double fwhm, std::size_t steps, const LinewidthOptions& opt) {
  const NetworkConfig net({{opt.carrier, Role::core}}, CouplingMatrix(1), fwhm, opt.dt);
  LaneIntegrator lane(net, 1, opt.seed);
  const double carrier_step = two_pi * opt.carrier * opt.dt;
  std::vector<double> psi(steps);
  double acc = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    lane.evaluate_signals();
    lane.advance(k);
    acc += lane.increments()[0] - carrier_step;
    psi[k] = acc;
  }
  return psi;
}

/// FWHM of the averaged periodogram of exp(i psi), fitted with the exact
/// finite-segment model.
inline LinewidthEstimate fit_linewidth(std::span<const double> psi, double dt, std::size_t segments,
                                       std::size_t fit_bins) {
  if (segments == 0) throw std::invalid_argument("need at least one segment");
  const std::size_t m = psi.size() / segments;
  if (m < 16) throw std::invalid_argument("segments too short for a spectrum");

  std::vector<double> avg(m, 0.0);
  std::vector<std::complex<double>> seg(m);
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t i = 0; i < m; ++i) seg[i] = std::polar(1.0, psi[s * m + i]);
    const auto p = detail::periodogram(seg);
    for (std::size_t i = 0; i < m; ++i) avg[i] += p[i] / static_cast<double>(segments);
  }

  LinewidthEstimate est;
  est.resolution = 1.0 / (static_cast<double>(m) * dt);

  double total = 0.0;
  for (double v : avg) total += v;
  if (total - avg[0] <= 1e-12 * total) {
    est.resolution_limited = true;
    return est;
  }

  const std::size_t half = std::min(fit_bins, m / 2 - 1);
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k <= half; ++k) bins.push_back(k);
  for (std::size_t k = 1; k <= half; ++k) bins.push_back(m - k);

  auto misfit = [&](double log_fwhm) {
    const auto model = detail::expected_periodogram(m, std::exp(log_fwhm), dt);
    double mean = 0.0;
    std::vector<double> d(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
      d[i] = std::log(std::max(avg[bins[i]], 1e-300)) - std::log(std::max(model[bins[i]], 1e-300));
      mean += d[i];
    }
    mean /= static_cast<double>(bins.size());
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return ss;
  };

  // golden-section search on log FWHM
  double lo = std::log(est.resolution * 1e-3);
  double hi = std::log(0.1 / dt);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = misfit(x1), f2 = misfit(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-6; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = misfit(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = misfit(x2);
    }
  }
  est.fwhm = std::exp(0.5 * (lo + hi));
  est.resolution_limited = est.fwhm < est.resolution;
  return est;
}

/// Simulates an isolated oscillator with the given FWHM for `observation`
/// seconds and estimates its linewidth. With noise, the observation must span
/// at least 50 / FWHM.
inline LinewidthEstimate estimate_linewidth(double fwhm, double observation,
                                            const LinewidthOptions& opt = {}) {
  if (!(fwhm >= 0.0)) throw std::invalid_argument("FWHM must be non-negative");
  if (fwhm > 0.0 && fwhm * observation < 50.0)
    throw std::invalid_argument("observation too short: need FWHM * observation >= 50, got " +
                                std::to_string(fwhm * observation));
  const std::uint64_t steps = steps_for(observation, opt.dt);
  if (steps < 16 * opt.segments) throw std::invalid_argument("observation too short for the segment count");
  const auto psi = baseband_phase(fwhm, steps, opt);
  return fit_linewidth(psi, opt.dt, opt.segments, opt.fit_bins);
}

/// Sample variance of the per-step phase increments of an isolated oscillator
/// (carrier removed); expected 2 pi FWHM dt.
inline double increment_variance(double fwhm, std::size_t steps, const LinewidthOptions& opt = {}) {
  if (steps < 2) throw std::invalid_argument("need at least two increments");
  const auto psi = baseband_phase(fwhm, steps, opt);
  double mean = 0.0, prev = 0.0;
  for (double v : psi) {
    mean += v - prev;
    prev = v;
  }
  mean /= static_cast<double>(steps);
  double ss = 0.0;
  prev = 0.0;
  for (double v : psi) {
    const double d = v - prev - mean;
    ss += d * d;
    prev = v;
  }
  return ss / static_cast<double>(steps - 1);
}

}  // namespace oscsync
