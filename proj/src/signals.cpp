#include "rankguide/signals.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "rankguide/tensor_train.hpp"

namespace rankguide {

void validate_signal_config(const SignalConfig& cfg, std::size_t d_hid) {
    if (cfg.window < 2) {
        throw config_error("InvalidConfig", "window length must be >= 2");
    }
    if (!(cfg.epsilon > 0.0) || cfg.epsilon > 1.0) {
        throw config_error("InvalidEpsilon",
                           "epsilon must lie in (0, 1], got " + std::to_string(cfg.epsilon));
    }
    if (cfg.entropy_k < 1) {
        throw config_error("InvalidConfig", "entropy_k must be >= 1");
    }
    if (cfg.d1 < 1 || cfg.d2 < 1 || d_hid < 1 || d_hid % (cfg.d1 * cfg.d2) != 0) {
        throw config_error("InvalidConfig",
                           "factor dims " + std::to_string(cfg.d1) + "x" +
                               std::to_string(cfg.d2) + " must divide d_hid " +
                               std::to_string(d_hid));
    }
}

std::size_t derived_d3(const SignalConfig& cfg, std::size_t d_hid) {
    validate_signal_config(cfg, d_hid);
    return d_hid / (cfg.d1 * cfg.d2);
}

WindowBuffer::WindowBuffer(std::size_t capacity, std::size_t d_hid)
    : capacity_(capacity), d_hid_(d_hid) {
    if (capacity_ < 2) {
        throw config_error("InvalidConfig", "window capacity must be >= 2");
    }
    if (d_hid_ < 1) {
        throw config_error("InvalidConfig", "d_hid must be >= 1");
    }
}

void WindowBuffer::push(StepHidden h) {
    if (h.vector.size() != d_hid_) {
        throw config_error("DimMismatch",
                           "hidden vector length " + std::to_string(h.vector.size()) +
                               " does not match d_hid " + std::to_string(d_hid_));
    }
    if (!entries_.empty() && h.step_index <= entries_.back().step_index) {
        throw config_error("NonMonotonicStep",
                           "step index " + std::to_string(h.step_index) +
                               " not greater than last " +
                               std::to_string(entries_.back().step_index));
    }
    if (full()) {
        entries_.pop_front();
    }
    entries_.push_back(std::move(h));
}

Tensor window_tensorize(const WindowBuffer& buf, const SignalConfig& cfg) {
    if (!buf.full()) {
        throw config_error("WindowNotFull",
                           "window holds " + std::to_string(buf.size()) + " of " +
                               std::to_string(buf.capacity()) + " steps");
    }
    const std::size_t d3 = derived_d3(cfg, buf.d_hid());
    if (buf.capacity() != cfg.window) {
        throw config_error("InvalidConfig", "buffer capacity does not match configured window");
    }

    std::vector<double> data;
    data.reserve(buf.capacity() * buf.d_hid());
    for (const StepHidden& h : buf.entries()) {
        data.insert(data.end(), h.vector.begin(), h.vector.end());
    }
    return Tensor({cfg.window, cfg.d1, cfg.d2, d3}, std::move(data));
}

RankSignal rank_signal(const WindowBuffer& buf, const SignalConfig& cfg) {
    const Tensor window = window_tensorize(buf, cfg);
    const TensorTrain tt = tt_decompose(window, cfg.epsilon);

    RankSignal sig;
    sig.r1 = tt.ranks[0];
    sig.r2 = tt.ranks[1];
    sig.epsilon = cfg.epsilon;
    sig.window_end_step = buf.entries().back().step_index;
    return sig;
}

double entropy(const TopKLogits& logits) {
    const auto& z = logits.values;
    if (z.empty()) {
        throw config_error("InvalidConfig", "entropy needs at least one logit");
    }
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);

    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);

    double h = 0.0;
    for (double v : z) {
        const double p = std::exp(v - zmax) / denom;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

bool low_rank_predicate(const RankSignal& sig, std::size_t t_r1, std::size_t t_r2) {
    return sig.r1 < t_r1 || sig.r2 < t_r2;
}

}  // namespace rankguide
