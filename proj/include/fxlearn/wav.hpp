#pragma once

#include <string>
#include <vector>

namespace fxl {

enum class WavFormat { pcm16, float32 };

struct WavData {
    std::vector<float> samples;  // mono
    int sample_rate = 0;
};

// Mono RIFF/WAVE only. PCM 16-bit and IEEE float 32-bit are supported;
// anything else (including stereo) is rejected rather than converted.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<float>& samples, int sample_rate,
               WavFormat format = WavFormat::float32);

}  // namespace fxl
