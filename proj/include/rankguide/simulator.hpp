#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankguide/routing.hpp"
#include "rankguide/steering.hpp"
#include "rankguide/trace.hpp"

namespace rankguide {

/// Declared per-step costs standing in for wall-clock time.
struct CostModel {
    double srm_step_cost = 1.0;
    double lrm_step_cost = 10.0;
    double signal_cost = 0.0;    // per rank-signal computation
    double route_overhead = 0.0; // per SRM<->LRM source switch
};

void validate_cost_model(const CostModel& cost);

/// One line of the decision log.
struct DecisionRecord {
    std::int64_t step = 0;
    RouteAction action = RouteAction::ContinueSRM;
    RouteTrigger trigger = RouteTrigger::None;
    std::optional<std::size_t> r1;
    std::optional<std::size_t> r2;
    double entropy = 0.0;
    std::size_t counter = 0;
};

[[nodiscard]] std::string decision_log_to_jsonl(const std::vector<DecisionRecord>& log);

/// Label used for a replay that terminated without ever routing.
enum class TerminatedLabelPolicy { SrmLabel, Incorrect };

struct SimulateOptions {
    RoutingConfig routing;
    SignalConfig signal;
    std::optional<SteeringVector> steering;
    std::optional<double> alpha;  // defaults to steering.alpha_default
    CostModel cost;
    std::vector<std::string> keywords = default_validation_keywords();
    TerminatedLabelPolicy terminated_label = TerminatedLabelPolicy::SrmLabel;
};

struct SampleResult {
    std::string sample_id;
    std::vector<DecisionRecord> decisions;
    std::size_t steps_total = 0;
    std::size_t steps_srm = 0;
    std::size_t steps_lrm = 0;
    std::size_t validation_steps = 0;
    std::size_t signal_count = 0;
    std::size_t switch_count = 0;
    bool terminated_early = false;
    double latency = 0.0;
    std::optional<bool> answer_correct;
};

struct SimulationReport {
    std::string config_id = "run";
    std::vector<SampleResult> samples;
    struct Aggregate {
        std::optional<double> accuracy_proxy;
        double mean_latency = 0.0;
        double mean_steps = 0.0;
        double validation_ratio = 0.0;
    } aggregate;
};

/// Replays the SRM trace through steering + routing. A RouteLRM decision
/// splices the next unconsumed LRM step (its hidden state enters the shared
/// window); Terminate stops the replay. Steering is applied to SRM boundary
/// steps before they enter the window.
[[nodiscard]] SampleResult simulate_pair(const Trace& srm, const Trace& lrm,
                                         const SimulateOptions& opts,
                                         std::string sample_id = "sample-0");

[[nodiscard]] SimulationReport simulate(const Trace& srm, const Trace& lrm,
                                        const SimulateOptions& opts,
                                        std::string config_id = "run");

/// Parallel across pairs, bounded by `threads`; aggregation order is fixed.
[[nodiscard]] SimulationReport simulate_many(
    const std::vector<std::pair<Trace, Trace>>& pairs, const SimulateOptions& opts,
    std::string config_id, std::size_t threads = 1);

/// Fraction of steps classified as validation by keyword matching.
[[nodiscard]] double validation_ratio(const std::vector<StepRecord>& steps,
                                      const std::vector<std::string>& keywords);

/// CSV table: one row per run, sorted by latency ascending (ties by config
/// id), with speedup relative to the designated baseline run.
[[nodiscard]] std::string compare_runs_csv(const std::vector<SimulationReport>& runs,
                                           const std::string& baseline_id);

[[nodiscard]] std::string report_to_json(const SimulationReport& report);
[[nodiscard]] SimulationReport report_from_json(const std::string& text,
                                                const std::string& origin);
[[nodiscard]] SimulationReport load_report(const std::string& path);
void save_report(const SimulationReport& report, const std::string& path);

}  // namespace rankguide
