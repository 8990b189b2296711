/*
 * Copyright 2026 The AVTNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "avt/audio.hpp"

#include "avt/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace avt::audio {
namespace {

constexpr double kMinLogHz = 1000.0;
constexpr double kLinearStep = 200.0 / 3.0;
constexpr double kMinLogMel = kMinLogHz / kLinearStep;
const double kLogStep = std::log(6.4) / 27.0;

}  // namespace

double hz_to_mel(double hz) {
  if (hz < kMinLogHz) return hz / kLinearStep;
  return kMinLogMel + std::log(hz / kMinLogHz) / kLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMinLogMel) return mel * kLinearStep;
  return kMinLogHz * std::exp(kLogStep * (mel - kMinLogMel));
}

Mat mel_filterbank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max) {
  if (n_mels < 1 || n_fft < 2) throw InputError("mel_filterbank: n_mels and n_fft must be positive");
  if (f_max <= 0.0) f_max = sample_rate / 2.0;
  const int n_bins = n_fft / 2 + 1;

  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  Mat bank = Mat::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double rising = (f - lo) / (centre - lo);
      const double falling = (hi - f) / (hi - centre);
      bank(m, k) = std::max(0.0, std::min(rising, falling)) * norm;
    }
  }
  return bank;
}

Mat power_spectrogram(std::span<const double> waveform, int n_fft, int hop_length) {
  if (waveform.empty()) throw InputError("power_spectrogram: empty waveform");
  if (n_fft < 2 || hop_length < 1) throw InputError("power_spectrogram: bad frame parameters");

  const int n_bins = n_fft / 2 + 1;
  const int half = n_fft / 2;
  const int length = static_cast<int>(waveform.size());
  const int n_frames = 1 + length / hop_length;

  std::vector<double> window(n_fft);
  for (int i = 0; i < n_fft; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n_fft);

  Eigen::FFT<double> fft;
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spectrum;
  Mat power(n_bins, n_frames);
  for (int t = 0; t < n_frames; ++t) {
    const int start = t * hop_length - half;
    for (int i = 0; i < n_fft; ++i) {
      const int idx = start + i;
      frame[i] = (idx >= 0 && idx < length) ? waveform[idx] * window[i] : 0.0;
    }
    fft.fwd(spectrum, frame);
    for (int k = 0; k < n_bins; ++k) power(k, t) = std::norm(spectrum[k]);
  }
  return power;
}

Mat compute_log_mel_spectrogram(std::span<const double> waveform, int sample_rate, const LogMelOptions& options) {
  if (waveform.empty()) throw InputError("compute_log_mel_spectrogram: empty waveform");
  std::vector<double> resampled;
  if (sample_rate != options.sample_rate) {
    if (!options.resample_input)
      throw InputError("compute_log_mel_spectrogram: expected " + std::to_string(options.sample_rate) +
                       " Hz input, got " + std::to_string(sample_rate));
    resampled = resample_linear(waveform, sample_rate, options.sample_rate);
    waveform = resampled;
  }

  const Mat power = power_spectrogram(waveform, options.n_fft, options.hop_length);
  const Mat bank = mel_filterbank(options.n_mels, options.n_fft, options.sample_rate, options.f_min, options.f_max);
  const Mat mel = bank * power;

  Mat out = Mat::Zero(options.n_mels, options.n_frames);
  const int kept = std::min<int>(options.n_frames, static_cast<int>(mel.cols()));
  out.leftCols(kept) = mel.leftCols(kept);
  return (out.array() + options.log_offset).log().matrix();
}

void standardize(Mat& spectrogram) {
  if (spectrogram.size() == 0) return;
  const double mean = spectrogram.mean();
  const double var = (spectrogram.array() - mean).square().mean();
  if (var <= 1e-24) {
    spectrogram.setZero();
    return;
  }
  spectrogram = ((spectrogram.array() - mean) / std::sqrt(var)).matrix();
}

std::vector<double> resample_linear(std::span<const double> waveform, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw InputError("resample_linear: rates must be positive");
  if (waveform.empty()) return {};
  const auto out_len = static_cast<std::size_t>(
      std::max<long long>(1, static_cast<long long>(waveform.size()) * to_rate / from_rate));
  std::vector<double> out(out_len);
  const double step = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = i * step;
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double a = waveform[std::min(lo, waveform.size() - 1)];
    const double b = waveform[std::min(lo + 1, waveform.size() - 1)];
    out[i] = a + frac * (b - a);
  }
  return out;
}

}  // namespace avt::audio
