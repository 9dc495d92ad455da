#include "rankguide/trace_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Core>
#include <Eigen/QR>

namespace rankguide {

namespace {

double top_heavy_entropy(double a, std::size_t k) {
    // Softmax entropy of [a, 0, ..., 0], written against exp(-a) for stability.
    const double km1 = static_cast<double>(k - 1);
    const double e = std::exp(-a);
    const double denom = 1.0 + km1 * e;
    const double p1 = 1.0 / denom;
    const double q = e / denom;
    double h = -p1 * std::log(p1);
    if (q > 0.0) h -= km1 * q * std::log(q);
    return h;
}

void validate_spec(const GeneratorSpec& spec) {
    if (spec.total_steps < 1) throw config_error("SpecError", "total_steps must be >= 1");
    if (spec.d_hid < 1) throw config_error("SpecError", "d_hid must be >= 1");
    if (spec.entropy_k < 1) throw config_error("SpecError", "entropy_k must be >= 1");
    if (spec.validation_ratio < 0.0 || spec.validation_ratio > 1.0) {
        throw config_error("SpecError", "validation_ratio must lie in [0, 1]");
    }
    const double hmax = std::log(static_cast<double>(spec.entropy_k));
    for (double h : {spec.healthy_entropy, spec.collapse_entropy, spec.high_entropy}) {
        if (h < 0.0 || h > hmax + 1e-12) {
            throw config_error("SpecError",
                               "target entropy " + std::to_string(h) +
                                   " outside [0, ln k] for k=" + std::to_string(spec.entropy_k));
        }
    }
    for (const CollapseSegment& seg : spec.collapse_segments) {
        if (seg.start >= seg.end || seg.end > spec.total_steps) {
            throw config_error("SpecError", "collapse segment out of range");
        }
        if (seg.subspace_dim < 1 || seg.subspace_dim > spec.d_hid) {
            throw config_error("SpecError", "collapse subspace_dim out of range");
        }
    }
    for (std::size_t i = 1; i < spec.collapse_segments.size(); ++i) {
        if (spec.collapse_segments[i].start < spec.collapse_segments[i - 1].end) {
            throw config_error("SpecError", "collapse segments must be disjoint and ordered");
        }
    }
    for (const StepRange& seg : spec.high_entropy_segments) {
        if (seg.start >= seg.end || seg.end > spec.total_steps) {
            throw config_error("SpecError", "high-entropy segment out of range");
        }
    }
}

const CollapseSegment* segment_at(const std::vector<CollapseSegment>& segs, std::size_t t) {
    for (const CollapseSegment& s : segs) {
        if (t >= s.start && t < s.end) return &s;
    }
    return nullptr;
}

bool in_range(const std::vector<StepRange>& segs, std::size_t t) {
    for (const StepRange& s : segs) {
        if (t >= s.start && t < s.end) return true;
    }
    return false;
}

}  // namespace

std::vector<double> logits_for_entropy(double target, std::size_t k) {
    const double hmax = std::log(static_cast<double>(k));
    if (target < 0.0 || target > hmax + 1e-12) {
        throw config_error("SpecError", "target entropy outside [0, ln k]");
    }
    std::vector<double> logits(k, 0.0);
    if (k == 1) return logits;

    // top_heavy_entropy is monotone decreasing in a on [0, inf); bisect.
    double lo = 0.0, hi = 64.0;
    if (target >= hmax) return logits;  // a = 0: uniform
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (top_heavy_entropy(mid, k) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14) break;
    }
    logits[0] = 0.5 * (lo + hi);
    return logits;
}

Trace gen_synthetic_trace(const GeneratorSpec& spec, std::uint64_t seed) {
    validate_spec(spec);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> shift_dist(-2.0, 2.0);

    // One orthonormal basis per collapse segment.
    std::vector<Eigen::MatrixXd> bases;
    bases.reserve(spec.collapse_segments.size());
    for (const CollapseSegment& seg : spec.collapse_segments) {
        Eigen::MatrixXd g(spec.d_hid, seg.subspace_dim);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gauss(rng);
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() *
                            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(spec.d_hid),
                                                      static_cast<Eigen::Index>(seg.subspace_dim));
        bases.push_back(std::move(q));
    }

    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(spec.validation_ratio * static_cast<double>(spec.total_steps)));
    const std::size_t val_start = spec.total_steps - n_val;

    Trace trace;
    trace.header.model_tag = spec.model_tag;
    trace.header.d_hid = spec.d_hid;
    trace.header.layer_index = spec.layer_index;
    trace.header.entropy_k = spec.entropy_k;
    trace.header.delimiter = spec.delimiter;
    trace.header.role = spec.role;
    trace.final_answer_correct = spec.final_answer_correct;
    trace.steps.reserve(spec.total_steps);

    for (std::size_t t = 0; t < spec.total_steps; ++t) {
        StepRecord step;
        step.step_index = static_cast<std::int64_t>(t);
        step.is_boundary = spec.mark_boundaries;

        const CollapseSegment* seg = segment_at(spec.collapse_segments, t);
        if (seg) {
            const std::size_t idx = static_cast<std::size_t>(seg - spec.collapse_segments.data());
            const Eigen::MatrixXd& basis = bases[idx];
            // Scale coefficients so collapsed rows carry the same expected
            // energy as healthy ones.
            const double scale =
                std::sqrt(static_cast<double>(spec.d_hid) / static_cast<double>(seg->subspace_dim));
            Eigen::VectorXd coeff(seg->subspace_dim);
            for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff(i) = scale * gauss(rng);
            Eigen::VectorXd h = basis * coeff;
            step.hidden.assign(h.data(), h.data() + h.size());
        } else {
            step.hidden.resize(spec.d_hid);
            for (double& v : step.hidden) v = gauss(rng);
        }

        double target = spec.healthy_entropy;
        if (seg) target = spec.collapse_entropy;
        if (in_range(spec.high_entropy_segments, t)) target = spec.high_entropy;
        step.topk_logits = logits_for_entropy(target, spec.entropy_k);
        // Constant shifts leave the softmax entropy bit-identical.
        const double shift = shift_dist(rng);
        for (double& v : step.topk_logits) v += shift;

        if (t >= val_start) {
            step.text = "Wait, verify the result of step " + std::to_string(t) +
                        " before continuing.";
            step.gold_class = StepClass::Validation;
        } else {
            step.text = "Step " + std::to_string(t) +
                        ": expand the intermediate terms and simplify.";
            step.gold_class = StepClass::Execution;
        }
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace rankguide
