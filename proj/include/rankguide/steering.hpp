#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rankguide/signals.hpp"
#include "rankguide/trace.hpp"

namespace rankguide {

struct CalibrationStep {
    StepRecord record;
    StepClass cls = StepClass::Execution;
    std::optional<RankSignal> signal;  // defined once the window has filled
};

struct CalibrationSample {
    std::string sample_id;
    std::size_t window = 10;  // W used when the signals were computed
    std::vector<CalibrationStep> steps;
};

struct SteeringProvenance {
    std::size_t n_exe = 0;
    std::size_t n_val = 0;
    std::size_t samples_kept = 0;
    std::size_t samples_total = 0;
};

/// Mean-difference steering vector (execution minus validation), pooled over
/// steps of the rank-filtered calibration set.
struct SteeringVector {
    std::vector<double> vector;
    double alpha_default = 1.0;
    std::vector<std::string> keywords;
    std::size_t t_r1 = 0;
    std::size_t t_r2 = 0;
    SteeringProvenance provenance;
};

[[nodiscard]] std::vector<std::string> default_validation_keywords();

/// Validation iff the text contains any keyword, case-insensitive, matched
/// on whole-word boundaries (substrings inside larger words do not count).
[[nodiscard]] StepClass classify_step(const std::string& text,
                                      const std::vector<std::string>& keywords);

/// Replays a trace through the signal layer: classifies each step and
/// attaches the rank signal where the window is full.
[[nodiscard]] CalibrationSample build_calibration_sample(
    const Trace& trace, const SignalConfig& cfg, const std::vector<std::string>& keywords,
    std::string sample_id);

/// Keeps exactly the samples whose every signal-bearing step is high-rank;
/// order preserved. Steps with index >= W must carry a signal.
[[nodiscard]] std::vector<CalibrationSample> filter_calibration(
    const std::vector<CalibrationSample>& samples, std::size_t t_r1, std::size_t t_r2);

/// Pooled class means over all steps of the given samples:
/// vector = mean(execution hiddens) - mean(validation hiddens).
[[nodiscard]] SteeringVector extract_steering_vector(
    const std::vector<CalibrationSample>& filtered);

/// Filter + extract, with full provenance recorded.
[[nodiscard]] SteeringVector extract_rank_filtered_steering(
    const std::vector<CalibrationSample>& samples, std::size_t t_r1, std::size_t t_r2,
    const std::vector<std::string>& keywords, double alpha_default = 1.0);

/// h + alpha * sv.vector at step boundaries; h unchanged elsewhere.
[[nodiscard]] std::vector<double> apply_steering(const std::vector<double>& h,
                                                 const SteeringVector& sv, double alpha,
                                                 bool is_boundary);

[[nodiscard]] SteeringVector load_steering(const std::string& path);
void save_steering(const SteeringVector& sv, const std::string& path);
[[nodiscard]] std::string steering_to_json(const SteeringVector& sv);
[[nodiscard]] SteeringVector steering_from_json(const std::string& text,
                                                const std::string& origin);

}  // namespace rankguide
