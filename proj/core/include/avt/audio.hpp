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

#pragma once

#include "avt/tensor.hpp"

#include <span>
#include <vector>

namespace avt::audio {

/// Log-mel front end. Defaults give 128 mel bands x 589 frames at 44 kHz.
struct LogMelOptions {
  int sample_rate = 44000;
  int n_fft = 2048;
  int hop_length = 512;
  int n_mels = 128;
  int n_frames = 589;
  double log_offset = 1e-6;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 selects sample_rate / 2
  /// Resample inputs at other rates instead of rejecting them.
  bool resample_input = false;
};

/// Slaney mel scale (linear below 1 kHz, logarithmic above).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular, area-normalised filters: n_mels x (n_fft / 2 + 1).
Mat mel_filterbank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max);

/// |STFT|^2 with a periodic Hann window and centred, zero-padded frames:
/// (n_fft / 2 + 1) x (1 + len / hop).
Mat power_spectrogram(std::span<const double> waveform, int n_fft, int hop_length);

/// log(mel power + offset), zero-padded (in the power domain) or truncated to
/// `n_frames` columns. Throws InputError on an empty waveform or a sample rate
/// mismatch unless `resample_input` is set.
Mat compute_log_mel_spectrogram(std::span<const double> waveform, int sample_rate,
                                const LogMelOptions& options = {});

/// In-place zero-mean / unit-variance standardisation. Constant input becomes zeros.
void standardize(Mat& spectrogram);

std::vector<double> resample_linear(std::span<const double> waveform, int from_rate, int to_rate);

}  // namespace avt::audio
