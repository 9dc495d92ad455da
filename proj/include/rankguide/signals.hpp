#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "rankguide/tensor.hpp"

namespace rankguide {

/// Middle-layer hidden state captured at one reasoning-step delimiter.
struct StepHidden {
    std::int64_t step_index = 0;
    std::vector<double> vector;
};

/// Parameters of the sliding-window rank signal.
/// d3 is always derived as d_hid / (d1 * d2); a non-dividing d_hid is a
/// configuration error.
struct SignalConfig {
    std::size_t window = 10;
    std::size_t d1 = 16;
    std::size_t d2 = 16;
    double epsilon = 0.1;
    std::size_t entropy_k = 20;
};

void validate_signal_config(const SignalConfig& cfg, std::size_t d_hid);
[[nodiscard]] std::size_t derived_d3(const SignalConfig& cfg, std::size_t d_hid);

/// FIFO of the most recent `capacity` step hidden states.
/// Single-owner mutable; one logical stream per buffer.
class WindowBuffer {
public:
    WindowBuffer(std::size_t capacity, std::size_t d_hid);

    /// Appends h, evicting the oldest entry when full. Step indices must be
    /// strictly increasing.
    void push(StepHidden h);

    [[nodiscard]] bool full() const noexcept { return entries_.size() == capacity_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t d_hid() const noexcept { return d_hid_; }
    [[nodiscard]] const std::deque<StepHidden>& entries() const noexcept { return entries_; }

private:
    std::size_t capacity_;
    std::size_t d_hid_;
    std::deque<StepHidden> entries_;
};

/// Unnormalized top-k logits, descending.
struct TopKLogits {
    std::vector<double> values;
};

/// First two tensor-train ranks of the current window tensor.
struct RankSignal {
    std::size_t r1 = 1;  // reasoning-step-mode rank
    std::size_t r2 = 1;  // first hidden-feature-mode rank
    double epsilon = 0.0;
    std::int64_t window_end_step = 0;
};

/// Stacks the full window into a (W, d1, d2, d3) tensor, rows in temporal
/// order, each hidden vector reshaped row-major.
[[nodiscard]] Tensor window_tensorize(const WindowBuffer& buf, const SignalConfig& cfg);

/// Decomposes the window tensor at cfg.epsilon and reports (r1, r2).
[[nodiscard]] RankSignal rank_signal(const WindowBuffer& buf, const SignalConfig& cfg);

/// Shannon entropy (nats) of the softmax over the top-k logits.
[[nodiscard]] double entropy(const TopKLogits& logits);

/// True iff r1 < t_r1 or r2 < t_r2 (strict, matching the routing rule).
[[nodiscard]] bool low_rank_predicate(const RankSignal& sig, std::size_t t_r1,
                                      std::size_t t_r2);

}  // namespace rankguide
