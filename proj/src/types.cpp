#include "vpecg/types.h"

namespace vpecg {

std::string_view to_string(WaveKind wave) {
    switch (wave) {
        case WaveKind::qrs: return "QRS";
        case WaveKind::t: return "T";
        case WaveKind::p: return "P";
    }
    return "?";
}

BeatSignal make_beat(Vector samples, double fs, Eigen::Index r_offset) {
    BeatSignal beat;
    beat.fs = fs;
    beat.time.resize(samples.size());
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        beat.time[i] = static_cast<double>(i - r_offset) / fs;
    }
    beat.samples = std::move(samples);
    beat.start_sample = 0;
    beat.r_sample = r_offset;
    return beat;
}

double NonlinearParams::lambda(WaveKind w) const {
    switch (w) {
        case WaveKind::qrs: return lambda_qrs;
        case WaveKind::t: return lambda_t;
        case WaveKind::p: return lambda_p;
    }
    return 0.0;
}

double NonlinearParams::tau(WaveKind w) const {
    switch (w) {
        case WaveKind::qrs: return tau_qrs;
        case WaveKind::t: return tau_t;
        case WaveKind::p: return tau_p;
    }
    return 0.0;
}

}  // namespace vpecg
