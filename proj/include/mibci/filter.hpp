#pragma once

// Butterworth band-pass design (analog prototype, prewarping, bilinear
// transform) factored into second-order sections, and zero-phase
// forward-backward application.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mibci/error.hpp"
#include "mibci/signal.hpp"

namespace mibci {

struct BandSpec {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;

  void validate(double sample_rate) const {
    if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < sample_rate / 2.0))
      throw InvalidArgument("band '" + name + "' [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                            "] Hz violates 0 < low < high < " + std::to_string(sample_rate / 2.0));
  }

  std::string label() const {
    auto fmt = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return name + "(" + fmt(low_hz) + "-" + fmt(high_hz) + "Hz)";
  }
};

inline std::vector<BandSpec> default_bands() {
  return {{"Theta", 4, 8},     {"Mu", 8, 12},      {"LowBeta", 12, 16}, {"MidBeta", 16, 20},
          {"HighBeta", 20, 24}, {"Beta", 24, 30}, {"MuBeta", 8, 30}};
}

/// Transposed direct-form II biquad: y = b0 x + z1; z1' = b1 x - a1 y + z2; z2' = b2 x - a2 y.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  std::complex<double> response(std::complex<double> zinv) const {
    return (b0 + zinv * (b1 + zinv * b2)) / (1.0 + zinv * (a1 + zinv * a2));
  }

  double pole_radius() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2, 0.0));
    return std::max(std::abs((-a1 + disc) / 2.0), std::abs((-a1 - disc) / 2.0));
  }
};

struct IirFilter {
  std::vector<Biquad> sections;
  int order = 0;  // prototype order; the band-pass transfer function has degree 2*order
  BandSpec band;
  double sample_rate = 0.0;

  std::complex<double> response(double hz) const {
    const double w = 2.0 * std::numbers::pi * hz / sample_rate;
    const std::complex<double> zinv = std::polar(1.0, -w);
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= s.response(zinv);
    return h;
  }

  double magnitude(double hz) const { return std::abs(response(hz)); }

  /// Reflective padding length used by filtfilt: three times the transfer-function degree.
  std::size_t padding() const { return 3 * 2 * static_cast<std::size_t>(order); }

  bool stable() const {
    return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.pole_radius() < 1.0; });
  }
};

/// Prewarped analog band edges (rad/s) for a digital band at `sample_rate`.
inline std::pair<double, double> prewarp_band(const BandSpec& band, double sample_rate) {
  const double k = 2.0 * sample_rate;
  return {k * std::tan(std::numbers::pi * band.low_hz / sample_rate),
          k * std::tan(std::numbers::pi * band.high_hz / sample_rate)};
}

/// Digital frequency (Hz) that the bilinear transform maps onto the analog
/// geometric band centre.
inline double band_center_hz(const BandSpec& band, double sample_rate) {
  auto [w1, w2] = prewarp_band(band, sample_rate);
  const double w0 = std::sqrt(w1 * w2);
  return sample_rate / std::numbers::pi * std::atan(w0 / (2.0 * sample_rate));
}

inline IirFilter design_bandpass(const BandSpec& band, int order, double sample_rate) {
  band.validate(sample_rate);
  if (order < 1 || order > 32) throw InvalidArgument("filter order must be in 1..32");

  using cd = std::complex<double>;
  const auto [w1, w2] = prewarp_band(band, sample_rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const double fs2 = 2.0 * sample_rate;

  std::vector<cd> zpoles;
  zpoles.reserve(2 * static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    const cd half = p * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd s : {half + root, half - root}) zpoles.push_back((fs2 + s) / (fs2 - s));
  }

  IirFilter f;
  f.order = order;
  f.band = band;
  f.sample_rate = sample_rate;

  std::vector<double> reals;
  for (const cd& z : zpoles) {
    if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z))) {
      reals.push_back(z.real());
    } else if (z.imag() > 0) {
      f.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    f.sections.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  if (f.sections.size() != static_cast<std::size_t>(order))
    throw NumericalError("band-pass design produced " + std::to_string(f.sections.size()) + " sections for order " +
                         std::to_string(order));
  std::sort(f.sections.begin(), f.sections.end(),
            [](const Biquad& a, const Biquad& b) { return a.pole_radius() < b.pole_radius(); });

  const double gain = 1.0 / f.magnitude(band_center_hz(band, sample_rate));
  const double per_section = std::pow(gain, 1.0 / order);
  for (auto& s : f.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  if (!f.stable()) throw NumericalError("unstable section in band '" + band.name + "'");
  return f;
}

namespace detail {

// Steady-state section states for a unit step, cascaded.
inline std::vector<std::array<double, 2>> step_states(const IirFilter& f) {
  std::vector<std::array<double, 2>> zi(f.sections.size());
  double u = 1.0;
  for (std::size_t i = 0; i < f.sections.size(); ++i) {
    const Biquad& s = f.sections[i];
    const double y = u * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 * u - s.a2 * y;
    const double z1 = s.b1 * u - s.a1 * y + z2;
    zi[i] = {z1, z2};
    u = y;
  }
  return zi;
}

inline void sos_filter_inplace(const IirFilter& f, const std::vector<std::array<double, 2>>& zi, double x0,
                               std::vector<double>& x) {
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const Biquad& s = f.sections[k];
    double z1 = zi[k][0] * x0;
    double z2 = zi[k][1] * x0;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

}  // namespace detail

/// Zero-phase filtering of one channel with odd (reflective) end padding and
/// steady-state initial conditions.
inline void filtfilt_row(const IirFilter& f, std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const std::size_t pad = f.padding();
  if (n <= pad)
    throw InvalidArgument("filtfilt needs more than " + std::to_string(pad) + " samples, got " + std::to_string(n));
  if (out.size() != n) throw InvalidArgument("filtfilt output size mismatch");

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const auto zi = detail::step_states(f);
  detail::sos_filter_inplace(f, zi, ext.front(), ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter_inplace(f, zi, ext.front(), ext);
  std::reverse(ext.begin(), ext.end());
  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n),
            out.begin());
}

inline Signal filtfilt(const IirFilter& f, const Signal& data) {
  Signal out(data.rows(), data.cols());
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    filtfilt_row(f, std::span<const double>(data.row(c).data(), static_cast<std::size_t>(data.cols())),
                 std::span<double>(out.row(c).data(), static_cast<std::size_t>(out.cols())));
  }
  return out;
}

struct FilterBank {
  std::vector<IirFilter> filters;
  int order = 5;
  double sample_rate = 250.0;

  static FilterBank design(const std::vector<BandSpec>& bands, int order, double sample_rate) {
    if (bands.empty()) throw InvalidArgument("filter bank needs at least one band");
    FilterBank fb;
    fb.order = order;
    fb.sample_rate = sample_rate;
    for (const auto& b : bands) fb.filters.push_back(design_bandpass(b, order, sample_rate));
    return fb;
  }

  std::size_t size() const { return filters.size(); }

  std::vector<BandSpec> bands() const {
    std::vector<BandSpec> out;
    for (const auto& f : filters) out.push_back(f.band);
    return out;
  }
};

}  // namespace mibci
