#include "eegintent/ingest.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

namespace eegintent {

namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  [[nodiscard]] double power(int k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  [[nodiscard]] int size() const { return n_; }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

FrameMatrix extract_band_power(const RawRecording& raw, double window_s, double hop_s) {
  if (raw.sample_rate_hz != kRawSampleRateHz) {
    throw DataError("raw recordings must be sampled at 128 Hz");
  }
  const auto n_samples = raw.channels[0].size();
  for (const auto& ch : raw.channels) {
    if (ch.size() != n_samples) throw DataError("all 14 channels must have equal length");
  }
  const int win = static_cast<int>(std::lround(window_s * raw.sample_rate_hz));
  const int hop = static_cast<int>(std::lround(hop_s * raw.sample_rate_hz));
  if (win < 32) throw ConfigError("power window must span at least 32 samples");
  if (hop < 1) throw ConfigError("hop must be at least one sample");
  if (n_samples < static_cast<std::size_t>(win)) throw DataError("insufficient samples");

  const auto n_frames = static_cast<Eigen::Index>((n_samples - static_cast<std::size_t>(win)) / static_cast<std::size_t>(hop) + 1);

  // Periodic Hann window.
  std::vector<double> hann(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i) {
    hann[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
  }

  // Bin membership per band, fixed for the whole recording.
  const double bin_hz = raw.sample_rate_hz / win;
  std::array<std::vector<int>, kNumBands> band_bins;
  for (int k = 1; k <= win / 2; ++k) {
    const double f = k * bin_hz;
    for (std::size_t b = 0; b < kNumBands; ++b) {
      if (kBands[b].contains(f)) band_bins[b].push_back(k);
    }
  }

  RealFft fft(win);
  FrameMatrix out(n_frames, static_cast<Eigen::Index>(kNumFeatures));
  const double norm = 1.0 / (static_cast<double>(win) * static_cast<double>(win));
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const auto& x = raw.channels[c];
    for (Eigen::Index f = 0; f < n_frames; ++f) {
      const std::size_t start = static_cast<std::size_t>(f) * static_cast<std::size_t>(hop);
      for (int i = 0; i < win; ++i) {
        fft.input()[i] = x[start + static_cast<std::size_t>(i)] * hann[static_cast<std::size_t>(i)];
      }
      fft.execute();
      for (std::size_t b = 0; b < kNumBands; ++b) {
        double acc = 0.0;
        for (int k : band_bins[b]) {
          // One-sided spectrum: interior bins carry both +/- frequencies.
          const double scale = (2 * k == win) ? 1.0 : 2.0;
          acc += scale * fft.power(k) * norm;
        }
        const double mean = band_bins[b].empty() ? 0.0 : acc / static_cast<double>(band_bins[b].size());
        out(f, static_cast<Eigen::Index>(c * kNumBands + b)) = mean;
      }
    }
  }
  return out;
}

}  // namespace eegintent
