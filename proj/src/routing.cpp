#include "rankguide/routing.hpp"

namespace rankguide {

void validate_routing_config(const RoutingConfig& cfg) {
    if (!(cfg.t_e > 0.0)) {
        throw config_error("InvalidConfig", "entropy threshold must be > 0");
    }
    if (cfg.collapse_window < 1) {
        throw config_error("InvalidConfig", "collapse_window must be >= 1");
    }
    if (cfg.window < 1) {
        throw config_error("InvalidConfig", "window must be >= 1");
    }
}

RouteDecision route_step(RouterState& state, const std::optional<RankSignal>& sig,
                         double entropy_value, const RoutingConfig& cfg) {
    if (state.terminated()) {
        throw config_error("TerminalState",
                           "router already terminated; reset before reuse");
    }
    state.steps_seen += 1;

    const bool use_rank = cfg.mode != RoutingMode::EntropyOnly;
    const bool use_entropy = cfg.mode != RoutingMode::RankOnly;

    if (use_rank && !sig &&
        state.steps_seen >= static_cast<std::int64_t>(cfg.window)) {
        throw config_error("MissingSignal",
                           "rank signal required at step " +
                               std::to_string(state.steps_seen - 1) + " in " +
                               to_string(cfg.mode) + " mode");
    }

    bool low_rank = false;
    if (use_rank) {
        if (sig && low_rank_predicate(*sig, cfg.t_r1, cfg.t_r2)) {
            low_rank = true;
            state.consecutive_low_rank += 1;
        } else {
            state.consecutive_low_rank = 0;
        }
    }

    RouteDecision d;
    d.step_index = state.steps_seen - 1;

    if (use_rank && state.consecutive_low_rank >= cfg.collapse_window) {
        d.action = RouteAction::Terminate;
        d.trigger = RouteTrigger::PersistentCollapse;
    } else {
        const bool entropy_fire = use_entropy && entropy_value >= cfg.t_e;
        if (low_rank && entropy_fire) {
            d.action = RouteAction::RouteLRM;
            d.trigger = RouteTrigger::Both;
        } else if (low_rank) {
            d.action = RouteAction::RouteLRM;
            d.trigger = RouteTrigger::LowRank;
        } else if (entropy_fire) {
            d.action = RouteAction::RouteLRM;
            d.trigger = RouteTrigger::HighEntropy;
        } else {
            d.action = RouteAction::ContinueSRM;
            d.trigger = RouteTrigger::None;
        }
    }

    state.last_decision = d;
    return d;
}

void router_reset(RouterState& state) { state = RouterState{}; }

void reset_collapse_counter(RouterState& state) { state.consecutive_low_rank = 0; }

std::string to_string(RouteAction a) {
    switch (a) {
        case RouteAction::ContinueSRM: return "ContinueSRM";
        case RouteAction::RouteLRM: return "RouteLRM";
        case RouteAction::Terminate: return "Terminate";
    }
    return "?";
}

std::string to_string(RouteTrigger t) {
    switch (t) {
        case RouteTrigger::None: return "None";
        case RouteTrigger::LowRank: return "LowRank";
        case RouteTrigger::HighEntropy: return "HighEntropy";
        case RouteTrigger::PersistentCollapse: return "PersistentCollapse";
        case RouteTrigger::Both: return "Both";
    }
    return "?";
}

std::string to_string(RoutingMode m) {
    switch (m) {
        case RoutingMode::Full: return "full";
        case RoutingMode::EntropyOnly: return "entropy_only";
        case RoutingMode::RankOnly: return "rank_only";
    }
    return "?";
}

RoutingMode routing_mode_from_string(const std::string& s) {
    if (s == "full") return RoutingMode::Full;
    if (s == "entropy_only") return RoutingMode::EntropyOnly;
    if (s == "rank_only") return RoutingMode::RankOnly;
    throw config_error("InvalidConfig", "unknown routing mode '" + s + "'");
}

}  // namespace rankguide
