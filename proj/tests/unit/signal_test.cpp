// Copyright 2026 The tonemdd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tonemdd/signal/dio.hpp"
#include "tonemdd/signal/melspec.hpp"
#include "tonemdd/signal/pitch.hpp"
#include "tonemdd/signal/waveform.hpp"

namespace tonemdd::signal {
namespace {

Waveform tone(double hz, double seconds, double amp = 0.5) {
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * kModelSampleRate));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / kModelSampleRate);
  }
  return w;
}

// Independent estimate: peak of the normalized autocorrelation over the
// admissible lag range, refined by parabolic interpolation.
double autocorr_f0(const Waveform& w, std::size_t center, double floor_hz, double ceil_hz) {
  const double fs = w.sample_rate;
  const auto min_lag = static_cast<std::size_t>(fs / ceil_hz);
  const auto max_lag = static_cast<std::size_t>(fs / floor_hz) + 1;
  const std::size_t win = 2 * max_lag;
  const std::size_t start = center > win ? center - win : 0;
  std::vector<double> r(max_lag + 2, 0.0);
  for (std::size_t lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (std::size_t i = start; i < start + win && i + lag < w.samples.size(); ++i) {
      num += w.samples[i] * w.samples[i + lag];
      e0 += w.samples[i] * w.samples[i];
      e1 += w.samples[i + lag] * w.samples[i + lag];
    }
    r[lag] = num / std::sqrt(e0 * e1 + 1e-300);
  }
  // Shortest lag near the global peak, to avoid sub-octave picks.
  double peak = 0.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) peak = std::max(peak, r[lag]);
  std::size_t best = min_lag;
  while (best < max_lag && !(r[best] >= 0.95 * peak && r[best] >= r[best + 1])) ++best;
  const double a = r[best - 1], b = r[best], c = r[best + 1];
  const double shift = 0.5 * (a - c) / (a - 2.0 * b + c);
  return fs / (static_cast<double>(best) + shift);
}

TEST(WaveformTest, WavRoundTripIsPcm16Exact) {
  Waveform w = tone(220.0, 0.1);
  const auto bytes = encode_wav(w);
  const Waveform back = decode_wav(bytes);
  ASSERT_EQ(back.samples.size(), w.samples.size());
  EXPECT_EQ(back.sample_rate, kModelSampleRate);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], w.samples[i], 1.0 / 32768.0);
  }
  EXPECT_EQ(encode_wav(back), bytes);
}

std::vector<unsigned char> patched(std::vector<unsigned char> bytes, std::size_t offset,
                                   std::uint32_t value, int width) {
  for (int i = 0; i < width; ++i) bytes[offset + i] = (value >> (8 * i)) & 0xff;
  return bytes;
}

TEST(WaveformTest, RejectsOtherLayouts) {
  const auto bytes = encode_wav(tone(200.0, 0.05));
  auto expect_format_error = [](const std::vector<unsigned char>& b) {
    try {
      decode_wav(b);
      FAIL() << "expected an audio format error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kAudioFormat);
    }
  };
  expect_format_error(patched(bytes, 22, 2, 2));      // stereo
  expect_format_error(patched(bytes, 24, 8000, 4));   // 8 kHz
  expect_format_error(patched(bytes, 34, 24, 2));     // 24-bit
  expect_format_error(patched(bytes, 20, 3, 2));      // float
  expect_format_error({'R', 'I', 'F', 'F'});
  expect_format_error(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 36));
}

TEST(WaveformTest, ValidateRejectsEmptyAndNonFinite) {
  EXPECT_THROW(validate(Waveform{}), Error);
  Waveform w = tone(200.0, 0.01);
  w.samples[3] = std::nan("");
  EXPECT_THROW(validate(w), Error);
}

TEST(DioTest, FrameCountFollowsHopLaw) {
  for (int hop : {10, 20, 40}) {
    for (std::size_t n : {3200u, 3201u, 16000u, 16159u, 48000u}) {
      const double ms = n * 1000.0 / kModelSampleRate;
      EXPECT_EQ(pitch_frame_count(n, kModelSampleRate, hop),
                static_cast<std::size_t>(std::floor(ms / hop)) + 1);
    }
  }
  EXPECT_EQ(pitch_frame_count(16000, kModelSampleRate, 10), 101u);
  EXPECT_EQ(pitch_frame_count(16000, kModelSampleRate, 20), 51u);
  EXPECT_EQ(pitch_frame_count(16000, kModelSampleRate, 40), 26u);
}

TEST(DioTest, ErrorPaths) {
  const Waveform w = tone(200.0, 0.5);
  try {
    estimate_f0(w, 15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedHop);
    EXPECT_NE(std::string(e.what()).find("unsupported hop size"), std::string::npos);
  }
  try {
    estimate_f0(tone(200.0, 0.04), 10, 40.0, 800.0);  // 640 < 2 * 400 samples
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAudioTooShort);
    EXPECT_NE(std::string(e.what()).find("audio too short"), std::string::npos);
  }
  EXPECT_THROW(estimate_f0(w, 10, 300.0, 200.0), Error);
  EXPECT_THROW(estimate_f0(w, 10, 40.0, 9000.0), Error);
}

TEST(DioTest, SilenceIsUnvoiced) {
  Waveform w;
  w.samples.assign(16000, 0.0);
  const auto track = estimate_f0(w, 10);
  ASSERT_EQ(track.size(), 101u);
  for (std::size_t i = 0; i < track.size(); ++i) {
    EXPECT_FALSE(track.voiced[i]);
    EXPECT_EQ(track.f0_hz[i], 0.0);
  }
}

TEST(DioTest, PureTonesMatchTruthAndAutocorrelationOracle) {
  for (double hz = 100.0; hz <= 600.0; hz += 50.0) {
    const Waveform w = tone(hz, 1.0);
    const auto track = estimate_f0(w, 10);
    std::size_t interior = 0, good = 0;
    for (std::size_t i = 5; i + 5 < track.size(); ++i) {
      ++interior;
      const double oracle = autocorr_f0(w, i * 160, 40.0, 800.0);
      EXPECT_NEAR(oracle, hz, 0.01 * hz);
      if (track.voiced[i] && std::abs(track.f0_hz[i] - hz) <= 0.03 * hz) ++good;
    }
    EXPECT_GE(good, 0.9 * interior) << hz << " Hz";
  }
}

TEST(DioTest, TrackInvariantsHold) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.2);
  Waveform w = tone(180.0, 0.8);
  for (std::size_t i = 6000; i < 9000; ++i) w.samples[i] = noise(rng);
  for (int hop : {10, 20, 40}) {
    const auto t = estimate_f0(w, hop, 60.0, 500.0);
    EXPECT_EQ(t.size(), pitch_frame_count(w.samples.size(), kModelSampleRate, hop));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.voiced[i]) {
        EXPECT_GE(t.f0_hz[i], 60.0);
        EXPECT_LE(t.f0_hz[i], 500.0);
      } else {
        EXPECT_EQ(t.f0_hz[i], 0.0);
      }
    }
  }
}

TEST(DioTest, ChirpIsTracked) {
  const double f0 = 150.0, f1 = 300.0, dur = 2.0;
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(dur * kModelSampleRate));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / kModelSampleRate;
    w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t));
  }
  const auto track = estimate_f0(w, 10);
  std::size_t interior = 0, good = 0;
  for (std::size_t i = 5; i + 5 < track.size(); ++i) {
    const double truth = f0 + (f1 - f0) * (i * 0.01) / dur;
    ++interior;
    if (track.voiced[i] && std::abs(track.f0_hz[i] - truth) <= 0.05 * truth) ++good;
  }
  EXPECT_GE(good, 0.9 * interior);
}

TEST(LogMelTest, FrameLawAndFiniteness) {
  for (std::size_t n : {400u, 401u, 3200u, 16000u}) {
    Waveform w;
    w.samples.assign(n, 0.0);
    const auto m = log_mel(w);
    EXPECT_EQ(m.frames, n / 160 + 1);
    EXPECT_EQ(m.data.size(), m.frames * 40);
    for (double v : m.data) EXPECT_TRUE(std::isfinite(v));
  }
  Waveform short_w;
  short_w.samples.assign(399, 0.1);
  EXPECT_THROW(log_mel(short_w), Error);
}

TEST(LogMelTest, ToneEnergyLandsInMatchingBand) {
  const auto m = log_mel(tone(1000.0, 0.3));
  const auto fb = mel_filterbank(LogMelOptions{}, kModelSampleRate);
  const std::size_t f = m.frames / 2;
  int best = 0;
  for (int b = 1; b < 40; ++b) {
    if (m.data[f * 40 + b] > m.data[f * 40 + best]) best = b;
  }
  // 1000 Hz sits at bin 32 of a 512-point FFT at 16 kHz.
  EXPECT_GT(fb[best][32], 0.0);
}

CorpusPitchStats stats_for(double lo, double hi) {
  CorpusPitchStats s;
  s.add(lo);
  s.add(hi);
  return s;
}

TEST(QuantizeTest, RawUsesRoundedHz) {
  const std::vector<double> v{0.0, 100.4, 100.6, 0.2, 1700.0};
  const auto q = quantize(v, PitchVariant::kRaw, stats_for(100, 200));
  EXPECT_EQ(q.vocab_size, 1600);
  EXPECT_EQ(q.indices, (std::vector<int>{0, 100, 101, 1, 1599}));
}

TEST(QuantizeTest, MelVocabAndMonotonicity) {
  EXPECT_EQ(pitch_vocab_size(PitchVariant::kMel, 800.0),
            2 + static_cast<int>(std::lround(hz_to_mel(800.0))));
  std::vector<double> hz;
  for (double f = 40.0; f <= 800.0; f += 3.7) hz.push_back(hz_to_mel(f));
  const auto q = quantize(hz, PitchVariant::kMel, stats_for(40, 800));
  for (std::size_t i = 0; i < q.indices.size(); ++i) {
    EXPECT_GE(q.indices[i], 1);
    EXPECT_LT(q.indices[i], q.vocab_size);
    if (i > 0) {
      EXPECT_GE(q.indices[i], q.indices[i - 1]);
    }
  }
}

TEST(QuantizeTest, CoarseRangeAndEndpoints) {
  const auto stats = stats_for(100.0, 400.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(50.0, 500.0);
  std::vector<double> hz(500);
  for (auto& h : hz) h = u(rng);
  std::sort(hz.begin(), hz.end());
  std::vector<double> mel;
  for (double h : hz) mel.push_back(hz_to_mel(h));
  const auto q = quantize(mel, PitchVariant::kCoarse, stats);
  EXPECT_EQ(q.vocab_size, 256);
  for (std::size_t i = 0; i < q.indices.size(); ++i) {
    EXPECT_GE(q.indices[i], 1);
    EXPECT_LE(q.indices[i], 255);
    if (i > 0) {
      EXPECT_GE(q.indices[i], q.indices[i - 1]);
    }
  }
  const std::vector<double> ends{hz_to_mel(100.0), hz_to_mel(400.0), 0.0};
  EXPECT_EQ(quantize(ends, PitchVariant::kCoarse, stats).indices, (std::vector<int>{1, 255, 0}));
}

TEST(QuantizeTest, CoarseRejectsDegenerateStats) {
  const std::vector<double> v{hz_to_mel(200.0)};
  try {
    quantize(v, PitchVariant::kCoarse, stats_for(200.0, 200.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateStats);
  }
  EXPECT_NO_THROW(quantize(v, PitchVariant::kRaw, stats_for(200.0, 200.0)));
}

TEST(CorpusStatsTest, EmptyCorpusAndMerge) {
  PitchTrack silent{10, {0.0, 0.0}, {false, false}};
  std::vector<PitchTrack> tracks{silent};
  EXPECT_THROW(corpus_pitch_stats(tracks), Error);
  auto a = stats_for(100.0, 150.0), b = stats_for(300.0, 90.0);
  auto ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  EXPECT_EQ(ab.min_hz, ba.min_hz);
  EXPECT_EQ(ab.max_hz, ba.max_hz);
  EXPECT_EQ(ab.histogram, ba.histogram);
  EXPECT_EQ(ab.voiced_frames, 4u);
}

TEST(PitchJsonTest, RoundTrip) {
  PitchTrack t{20, {0.0, 123.25, 0.0}, {false, true, false}};
  const auto j = to_json(t, "u1");
  EXPECT_EQ(j.at("utt_id"), "u1");
  const auto back = pitch_track_from_json(j);
  EXPECT_EQ(back.hop_ms, 20);
  EXPECT_EQ(back.f0_hz, t.f0_hz);
  EXPECT_EQ(back.voiced, t.voiced);
}

}  // namespace
}  // namespace tonemdd::signal
