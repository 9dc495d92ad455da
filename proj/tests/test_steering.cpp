#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rankguide/steering.hpp"
#include "rankguide/trace_gen.hpp"
#include "test_support.hpp"

using namespace rankguide;

namespace {

CalibrationStep make_cal_step(std::int64_t index, std::vector<double> hidden, StepClass cls,
                              std::optional<RankSignal> signal = std::nullopt) {
    CalibrationStep s;
    s.record.step_index = index;
    s.record.hidden = std::move(hidden);
    s.cls = cls;
    s.signal = signal;
    return s;
}

RankSignal sig(std::size_t r1, std::size_t r2) {
    RankSignal s;
    s.r1 = r1;
    s.r2 = r2;
    return s;
}

// Random corpus with per-step synthetic rank signals; `plant_low` samples get
// one low-rank step planted at a deterministic position.
std::vector<CalibrationSample> synthetic_corpus(std::size_t n_samples, std::size_t plant_low,
                                                std::uint64_t seed, std::size_t d_hid = 6) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<CalibrationSample> corpus;
    for (std::size_t i = 0; i < n_samples; ++i) {
        CalibrationSample s;
        s.sample_id = "s" + std::to_string(i);
        s.window = 3;
        const std::size_t n_steps = 6 + rng() % 5;
        const bool planted = i < plant_low;
        const std::size_t low_at = 3 + rng() % (n_steps - 3);
        for (std::size_t j = 0; j < n_steps; ++j) {
            std::vector<double> h(d_hid);
            for (double& v : h) v = gauss(rng);
            const StepClass cls = (j % 3 == 2) ? StepClass::Validation : StepClass::Execution;
            std::optional<RankSignal> rs;
            if (j >= 2) {
                rs = (planted && j == low_at) ? sig(4, 70) : sig(9, 70);
            }
            s.steps.push_back(make_cal_step(static_cast<std::int64_t>(j), std::move(h), cls, rs));
        }
        corpus.push_back(std::move(s));
    }
    // Interleave planted and clean samples deterministically.
    std::shuffle(corpus.begin(), corpus.end(), rng);
    return corpus;
}

}  // namespace

TEST_SUITE_BEGIN("steering");

TEST_CASE("classify_step keyword matching") {
    const auto kw = default_validation_keywords();
    CHECK(classify_step("Wait, let me double-check the arithmetic", kw) ==
          StepClass::Validation);
    CHECK(classify_step("Multiply both sides by 3 to get x = 12", kw) ==
          StepClass::Execution);
    // whole-word: "waiter" must not match "wait"
    CHECK(classify_step("The waiter brought the bill", {"wait"}) == StepClass::Execution);
    CHECK(classify_step("WAIT. that cannot be right", kw) == StepClass::Validation);
    CHECK(classify_step("hold on, rechecking", kw) == StepClass::Validation);
    CHECK(classify_step("Alternativelystated", {"alternatively"}) == StepClass::Execution);
    CHECK(classify_step("alternatively, use the quadratic formula", kw) ==
          StepClass::Validation);
}

TEST_CASE("filter excludes exactly the samples with a low-rank step") {
    CalibrationSample clean;
    clean.sample_id = "clean";
    clean.window = 2;
    clean.steps = {make_cal_step(0, {1, 0}, StepClass::Execution),
                   make_cal_step(1, {0, 1}, StepClass::Validation, sig(9, 70)),
                   make_cal_step(2, {1, 1}, StepClass::Execution, sig(8, 60))};

    CalibrationSample dirty = clean;
    dirty.sample_id = "dirty";
    dirty.steps[2].signal = sig(5, 70);  // r1 = 5 < 8

    const auto kept = filter_calibration({clean, dirty}, 8, 60);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].sample_id == "clean");
}

TEST_CASE("filter requires signals on eligible steps") {
    CalibrationSample s;
    s.sample_id = "missing";
    s.window = 2;
    s.steps = {make_cal_step(0, {1, 0}, StepClass::Execution),
               make_cal_step(1, {0, 1}, StepClass::Execution, sig(9, 70)),
               make_cal_step(2, {1, 1}, StepClass::Execution)};  // index 2 >= W, no signal
    CHECK_THROWS_WITH_AS(filter_calibration({s}, 8, 60),
                         doctest::Contains("MissingRankSignals"), Error);
}

TEST_CASE("filter partitions the corpus: soundness on a random corpus") {
    const auto corpus = synthetic_corpus(200, 57, 99);
    const auto kept = filter_calibration(corpus, 8, 60);
    CHECK(kept.size() == 200 - 57);

    // Every kept sample is all-high; every excluded sample has a witness.
    std::size_t kept_idx = 0;
    for (const CalibrationSample& s : corpus) {
        bool low = false;
        for (const auto& step : s.steps) {
            if (step.signal && low_rank_predicate(*step.signal, 8, 60)) low = true;
        }
        if (!low) {
            REQUIRE(kept_idx < kept.size());
            CHECK(kept[kept_idx].sample_id == s.sample_id);  // order preserved
            ++kept_idx;
        }
    }
    CHECK(kept_idx == kept.size());
}

TEST_CASE("extraction: constant-class case") {
    CalibrationSample s;
    s.sample_id = "s";
    s.window = 99;  // no eligible steps, signals not needed
    s.steps = {make_cal_step(0, {2, 1}, StepClass::Execution),
               make_cal_step(1, {2, 1}, StepClass::Execution),
               make_cal_step(2, {0.5, -1}, StepClass::Validation)};
    const SteeringVector sv = extract_steering_vector({s});
    CHECK(sv.vector == std::vector<double>{1.5, 2.0});
    CHECK(sv.provenance.n_exe == 2);
    CHECK(sv.provenance.n_val == 1);
}

TEST_CASE("extraction: symmetric means cancel") {
    CalibrationSample s;
    s.sample_id = "s";
    s.window = 99;
    s.steps = {make_cal_step(0, {2, 0}, StepClass::Execution),
               make_cal_step(1, {0, 2}, StepClass::Execution),
               make_cal_step(2, {1, 1}, StepClass::Validation)};
    const SteeringVector sv = extract_steering_vector({s});
    CHECK(sv.vector == std::vector<double>{0.0, 0.0});
}

TEST_CASE("extraction matches a two-pass mean-difference oracle") {
    const auto corpus = synthetic_corpus(40, 0, 1234, 8);
    const SteeringVector sv = extract_steering_vector(corpus);

    // Oracle: collect all vectors per class first, then average per class.
    std::vector<std::vector<double>> exe, val;
    for (const auto& s : corpus) {
        for (const auto& step : s.steps) {
            (step.cls == StepClass::Execution ? exe : val).push_back(step.record.hidden);
        }
    }
    for (std::size_t i = 0; i < 8; ++i) {
        double me = 0, mv = 0;
        for (const auto& h : exe) me += h[i];
        for (const auto& h : val) mv += h[i];
        me /= static_cast<double>(exe.size());
        mv /= static_cast<double>(val.size());
        CHECK(sv.vector[i] == doctest::Approx(me - mv).epsilon(1e-12));
    }
    CHECK(sv.provenance.n_exe == exe.size());
    CHECK(sv.provenance.n_val == val.size());
}

TEST_CASE("extraction fails on an empty class") {
    CalibrationSample s;
    s.sample_id = "s";
    s.window = 99;
    s.steps = {make_cal_step(0, {1, 1}, StepClass::Execution)};
    CHECK_THROWS_WITH_AS(extract_steering_vector({s}), doctest::Contains("EmptyClass"),
                         Error);
    CHECK_THROWS_WITH_AS(extract_steering_vector({}), doctest::Contains("EmptyClass"), Error);
}

TEST_CASE("label swap negates the vector exactly") {
    auto corpus = synthetic_corpus(25, 0, 777, 5);
    const SteeringVector sv = extract_steering_vector(corpus);
    for (auto& s : corpus) {
        for (auto& step : s.steps) {
            step.cls = step.cls == StepClass::Execution ? StepClass::Validation
                                                        : StepClass::Execution;
        }
    }
    const SteeringVector swapped = extract_steering_vector(corpus);
    for (std::size_t i = 0; i < sv.vector.size(); ++i) {
        CHECK(swapped.vector[i] == -sv.vector[i]);  // exact IEEE negation
    }
}

TEST_CASE("pooling is invariant under reordering, up to roundoff") {
    auto corpus = synthetic_corpus(30, 0, 31415, 4);
    const SteeringVector sv = extract_steering_vector(corpus);

    std::mt19937_64 rng(1);
    std::shuffle(corpus.begin(), corpus.end(), rng);
    for (auto& s : corpus) std::shuffle(s.steps.begin(), s.steps.end(), rng);
    const SteeringVector shuffled = extract_steering_vector(corpus);
    for (std::size_t i = 0; i < sv.vector.size(); ++i) {
        CHECK(shuffled.vector[i] == doctest::Approx(sv.vector[i]).epsilon(1e-12));
    }
}

TEST_CASE("apply_steering: gating, scaling, and linearity") {
    SteeringVector sv;
    sv.vector = {1.0, -1.0};

    const std::vector<double> h{0.0, 0.0};
    CHECK(apply_steering(h, sv, 0.0, true) == h);
    CHECK(apply_steering(h, sv, 1.0, true) == std::vector<double>{1.0, -1.0});
    CHECK(apply_steering({5.0, 7.0}, sv, 123.0, false) == std::vector<double>{5.0, 7.0});
    CHECK_THROWS_WITH_AS(apply_steering({1.0}, sv, 1.0, true),
                         doctest::Contains("DimMismatch"), Error);

    // additivity: (h + a v) + b v == h + (a+b) v within 1e-12
    std::mt19937_64 rng(22);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x{gauss(rng), gauss(rng)};
        const double a = gauss(rng), b = gauss(rng);
        const auto two_step = apply_steering(apply_steering(x, sv, a, true), sv, b, true);
        const auto one_step = apply_steering(x, sv, a + b, true);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(two_step[i] == doctest::Approx(one_step[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("steering vector file round-trip with exact field names") {
    SteeringVector sv;
    sv.vector = {0.5, -0.25, 1e-17};
    sv.alpha_default = 1.0;
    sv.keywords = {"wait", "verify"};
    sv.t_r1 = 8;
    sv.t_r2 = 60;
    sv.provenance = {12, 7, 738, 1000};

    const std::string path = "test_steer.json";
    save_steering(sv, path);
    const SteeringVector back = load_steering(path);
    CHECK(back.vector == sv.vector);
    CHECK(back.alpha_default == 1.0);
    CHECK(back.keywords == sv.keywords);
    CHECK(back.t_r1 == 8);
    CHECK(back.t_r2 == 60);
    CHECK(back.provenance.samples_kept == 738);
    CHECK(back.provenance.samples_total == 1000);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    for (const char* key : {"\"d_hid\"", "\"vector\"", "\"alpha_default\"", "\"keywords\"",
                            "\"T_r1\"", "\"T_r2\"", "\"n_exe\"", "\"n_val\"",
                            "\"samples_kept\"", "\"samples_total\""}) {
        CHECK(text.find(key) != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("build_calibration_sample attaches signals once the window fills") {
    GeneratorSpec spec;
    spec.total_steps = 15;
    spec.d_hid = 16;
    spec.entropy_k = 4;
    spec.validation_ratio = 0.2;
    spec.role = TraceRole::Calibration;
    const Trace trace = gen_synthetic_trace(spec, 8);

    SignalConfig cfg;
    cfg.window = 10;
    cfg.d1 = 2;
    cfg.d2 = 2;
    const CalibrationSample sample =
        build_calibration_sample(trace, cfg, default_validation_keywords(), "cal-0");
    REQUIRE(sample.steps.size() == 15);
    for (const auto& step : sample.steps) {
        if (step.record.step_index < 9) {
            CHECK_FALSE(step.signal.has_value());
        } else {
            REQUIRE(step.signal.has_value());
            CHECK(step.signal->window_end_step == step.record.step_index);
        }
    }
    // pipeline wrapper records full provenance
    const SteeringVector sv =
        extract_rank_filtered_steering({sample}, 0, 0, default_validation_keywords(), 1.0);
    CHECK(sv.provenance.samples_total == 1);
    CHECK(sv.provenance.samples_kept == 1);
    CHECK(sv.alpha_default == 1.0);
}

TEST_SUITE_END();
