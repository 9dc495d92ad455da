#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankguide/trace.hpp"

namespace rankguide {

/// Steps in [start, end) have hidden states confined to a random
/// `subspace_dim`-dimensional subspace of R^{d_hid}, so any window drawn
/// fully from the segment has temporal rank <= subspace_dim.
struct CollapseSegment {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t subspace_dim = 1;
};

struct StepRange {
    std::size_t start = 0;
    std::size_t end = 0;
};

/// Parameters for deterministic synthetic traces. Collapse segments carry
/// `collapse_entropy`, high-entropy segments `high_entropy`, everything else
/// `healthy_entropy` (all in nats, hit exactly by construction). The last
/// round(validation_ratio * total_steps) steps carry validation-keyword text.
struct GeneratorSpec {
    std::size_t total_steps = 0;
    std::size_t d_hid = 0;
    std::size_t entropy_k = 20;
    std::vector<CollapseSegment> collapse_segments;
    std::vector<StepRange> high_entropy_segments;
    double healthy_entropy = 0.983;
    double collapse_entropy = 0.388;
    double high_entropy = 1.2;
    double validation_ratio = 0.0;
    std::string delimiter = "\n\n";
    std::string model_tag = "synthetic";
    TraceRole role = TraceRole::Srm;
    int layer_index = 16;
    std::optional<bool> final_answer_correct;
    bool mark_boundaries = true;
};

[[nodiscard]] Trace gen_synthetic_trace(const GeneratorSpec& spec, std::uint64_t seed);

/// Descending top-k logits whose softmax entropy equals `target` nats
/// (within bisection precision). Shared with tests that need exact bands.
[[nodiscard]] std::vector<double> logits_for_entropy(double target, std::size_t k);

}  // namespace rankguide
