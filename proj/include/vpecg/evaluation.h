#pragma once

#include "vpecg/delineation.h"
#include "vpecg/types.h"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace vpecg {

/// Percentage root-mean-square difference, normalized by the deviation of f
/// from its mean. Returns 0 for an exact fit; +inf if f is constant but fhat differs.
double prd(std::span<const double> f, std::span<const double> fhat);

/// Output SNR minus input SNR in dB, both against the mean-removed clean
/// signal. Returns +inf when denoised equals clean.
double snr_improvement(std::span<const double> clean, std::span<const double> noisy,
                       std::span<const double> denoised);

/// Pearson correlation. Throws DegenerateInput on zero variance.
double correlation(std::span<const double> x, std::span<const double> xhat);

/// 1 - E(x - xhat)^2 / (E x^2 + E xhat^2), in [-1, 1].
double l_operator(std::span<const double> x, std::span<const double> xhat);

/// min over [begin, end) of max_i |lead_i(n)|. Throws EmptyWindow.
double kp(std::span<const Vector> leads, Eigen::Index begin, Eigen::Index end);

inline double kp_deviation(double filtered_kp, double clean_kp) { return filtered_kp - clean_kp; }

// ST window relative to the QRS end.
inline constexpr double kStWindowStart = 0.010;
inline constexpr double kStWindowEnd = 0.110;
// Fallback window relative to the R peak when QRS_end is unknown.
inline constexpr double kStFallbackStart = 0.060;
inline constexpr double kStFallbackEnd = 0.160;

enum class FiducialKind { p_on, p_peak, p_end, qrs_on, qrs_peak, qrs_end, t_on, t_peak, t_end };
inline constexpr std::size_t kNumFiducialKinds = 9;

std::string_view to_string(FiducialKind kind);
WaveKind wave_of(FiducialKind kind);
std::optional<double> fiducial_time(const Delineation& d, FiducialKind kind);

enum class Group { I, II, III, IV };
std::string_view to_string(Group g);

struct GroupLimits {
    double mu = 0.0;     // ms
    double sigma = 0.0;  // ms
};

GroupLimits group_limits(FiducialKind kind);

/// Strict "<" means below the limit; equality counts as over.
Group assign_group(FiducialKind kind, double mu_ms, double sigma_ms);

struct AnnotatedBeat {
    std::int64_t r_sample = 0;
    Delineation fiducials;  // R-relative seconds
};

struct FiducialScore {
    FiducialKind kind = FiducialKind::p_on;
    int annotated = 0;
    int detected = 0;
    double se = 0.0;        // %, NaN when nothing was annotated
    double mean_ms = 0.0;   // NaN when nothing was detected
    double std_ms = 0.0;
    Group group = Group::IV;
};

struct DelineationScore {
    std::array<FiducialScore, kNumFiducialKinds> kinds;
    int matched_beats = 0;

    const FiducialScore& operator[](FiducialKind k) const { return kinds[static_cast<std::size_t>(k)]; }
};

/// Matches every truth beat to the nearest-R beat of each channel (within
/// tolerance) and, per fiducial, keeps the channel with the smaller |error|.
/// Throws NoMatchingBeats if no truth beat has a match in any channel.
DelineationScore score_delineation(const std::vector<std::vector<AnnotatedBeat>>& channels,
                                   const std::vector<AnnotatedBeat>& truth, double fs,
                                   double match_tolerance_s = 0.15);

/// Subtracts a natural cubic spline through one anchor per beat. Each anchor
/// value is the signal mean over +-half_window samples around its position.
/// Outside the anchor range the spline is extended linearly.
/// Throws TooFewAnchors with fewer than two anchors.
Vector reference_spline_denoise(std::span<const double> signal, std::span<const std::int64_t> anchors,
                                Eigen::Index half_window = 5);

/// PQ anchors at a fixed offset before each R peak.
std::vector<std::int64_t> pq_anchors(std::span<const std::int64_t> r_peaks, double fs,
                                     double offset_s = 0.08);

}  // namespace vpecg
