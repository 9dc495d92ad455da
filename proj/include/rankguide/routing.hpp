#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rankguide/signals.hpp"

namespace rankguide {

enum class RoutingMode { Full, EntropyOnly, RankOnly };

enum class RouteAction { ContinueSRM, RouteLRM, Terminate };

enum class RouteTrigger { None, LowRank, HighEntropy, PersistentCollapse, Both };

/// Thresholds and mode of the two-stage routing policy.
/// entropy_only ignores rank signals entirely; rank_only ignores entropy.
struct RoutingConfig {
    std::size_t t_r1 = 8;
    std::size_t t_r2 = 60;
    double t_e = 0.9;
    std::size_t window = 10;           // W; rank signal required once this many steps seen
    std::size_t collapse_window = 10;  // consecutive low-rank evaluations before Terminate
    RoutingMode mode = RoutingMode::Full;
    bool reset_on_route = false;       // simulator clears the collapse counter after a splice
};

void validate_routing_config(const RoutingConfig& cfg);

struct RouteDecision {
    RouteAction action = RouteAction::ContinueSRM;
    RouteTrigger trigger = RouteTrigger::None;
    std::int64_t step_index = 0;
};

/// Per-request mutable routing state. Terminal after a Terminate decision;
/// callers must reset before reuse.
struct RouterState {
    std::size_t consecutive_low_rank = 0;
    std::int64_t steps_seen = 0;
    std::optional<RouteDecision> last_decision;

    [[nodiscard]] bool terminated() const {
        return last_decision && last_decision->action == RouteAction::Terminate;
    }
};

/// Evaluates one step: updates the collapse counter from the rank predicate,
/// terminates once `collapse_window` consecutive low-rank evaluations have
/// been seen, and otherwise routes on (low rank) OR (entropy >= t_e).
/// Rank uses strict `<`, entropy fires at equality.
RouteDecision route_step(RouterState& state, const std::optional<RankSignal>& sig,
                         double entropy_value, const RoutingConfig& cfg);

void router_reset(RouterState& state);

/// Used by the simulator when reset_on_route is enabled.
void reset_collapse_counter(RouterState& state);

[[nodiscard]] std::string to_string(RouteAction a);
[[nodiscard]] std::string to_string(RouteTrigger t);
[[nodiscard]] std::string to_string(RoutingMode m);
[[nodiscard]] RoutingMode routing_mode_from_string(const std::string& s);

}  // namespace rankguide
