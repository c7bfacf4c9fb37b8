#include "ghostplan/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>

namespace ghostplan {

RowMajorArray<double> power_spectrum_2d(const Grid2D& g) {
  const Index rows = g.rows();
  const Index cols = g.cols();
  Eigen::FFT<double> fft;
  Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> spec(rows, cols);

  std::vector<std::complex<double>> in(static_cast<std::size_t>(cols));
  std::vector<std::complex<double>> out;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) in[static_cast<std::size_t>(j)] = g(i, j);
    fft.fwd(out, in);
    for (Index j = 0; j < cols; ++j) spec(i, j) = out[static_cast<std::size_t>(j)];
  }
  in.resize(static_cast<std::size_t>(rows));
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) in[static_cast<std::size_t>(i)] = spec(i, j);
    fft.fwd(out, in);
    for (Index i = 0; i < rows; ++i) spec(i, j) = out[static_cast<std::size_t>(i)];
  }
  return spec.abs2();
}

namespace {

// Signed frequency in cycles/sample for FFT index k of an n-point transform.
double signed_frequency(Index k, Index n) {
  const Index kk = (2 * k < n) ? k : k - n;
  return static_cast<double>(kk) / static_cast<double>(n);
}

}  // namespace

RadialSpectrum radial_power_spectrum(const Grid2D& g, int n_bins) {
  require(n_bins >= 2, ErrorKind::Argument, "radial spectrum needs at least two bins");
  require(g.rows() >= 4 && g.cols() >= 4, ErrorKind::Argument,
          "radial spectrum needs a grid of at least 4x4");

  const auto power = power_spectrum_2d(g);
  const double kmax = 0.5 * std::sqrt(2.0);
  const double width = kmax / n_bins;

  RadialSpectrum s;
  s.bin_centers.resize(static_cast<std::size_t>(n_bins));
  s.power.assign(static_cast<std::size_t>(n_bins), 0.0);
  s.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (int b = 0; b < n_bins; ++b) s.bin_centers[static_cast<std::size_t>(b)] = (b + 0.5) * width;

  for (Index i = 0; i < g.rows(); ++i) {
    const double ky = signed_frequency(i, g.rows());
    for (Index j = 0; j < g.cols(); ++j) {
      const double kx = signed_frequency(j, g.cols());
      const double kr = std::sqrt(kx * kx + ky * ky);
      const auto b = std::min<std::size_t>(static_cast<std::size_t>(kr / width),
                                           static_cast<std::size_t>(n_bins - 1));
      s.power[b] += power(i, j);
      ++s.counts[b];
    }
  }
  for (std::size_t b = 0; b < s.power.size(); ++b) {
    if (s.counts[b] > 0) s.power[b] /= static_cast<double>(s.counts[b]);
  }
  return s;
}

std::optional<double> spectrum_mode(const RadialSpectrum& s) {
  std::optional<std::size_t> best;
  for (std::size_t b = 1; b < s.power.size(); ++b) {
    if (s.power[b] > 0.0 && (!best || s.power[b] > s.power[*best])) best = b;
  }
  if (!best) return std::nullopt;
  return s.bin_centers[*best];
}

std::pair<double, double> spectrum_moments(const RadialSpectrum& s) {
  require(!s.power.empty() && s.power.size() == s.bin_centers.size(), ErrorKind::Argument,
          "malformed spectrum");
  double total = 0.0;
  double first = 0.0;
  for (std::size_t b = 0; b < s.power.size(); ++b) {
    total += s.power[b];
    first += s.power[b] * s.bin_centers[b];
  }
  require(total > 0.0, ErrorKind::Undefined, "spectrum has no power");
  const double mean = first / total;
  double second = 0.0;
  for (std::size_t b = 0; b < s.power.size(); ++b) {
    const double d = s.bin_centers[b] - mean;
    second += s.power[b] * d * d;
  }
  return {mean, std::sqrt(second / total)};
}

SpectrumSummary spectrum_summary(const RadialSpectrum& s) {
  const auto [mean, sd] = spectrum_moments(s);
  const auto mode = spectrum_mode(s);
  require(mode.has_value(), ErrorKind::Undefined, "spectrum has no power outside the DC bin");
  return {*mode, mean, sd};
}

}  // namespace ghostplan
