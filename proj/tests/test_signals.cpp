#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rankguide/signals.hpp"

using namespace rankguide;

namespace {

StepHidden make_step(std::int64_t index, std::vector<double> v) {
    return StepHidden{index, std::move(v)};
}

WindowBuffer filled_buffer(const std::vector<std::vector<double>>& rows) {
    WindowBuffer buf(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        buf.push(make_step(static_cast<std::int64_t>(i), rows[i]));
    }
    return buf;
}

}  // namespace

TEST_SUITE_BEGIN("signals");

TEST_CASE("window buffer: fill and evict") {
    WindowBuffer buf(10, 3);
    for (int i = 0; i < 10; ++i) buf.push(make_step(i, {1.0 * i, 0, 0}));
    CHECK(buf.full());
    CHECK(buf.entries().front().step_index == 0);
    CHECK(buf.entries().back().step_index == 9);

    buf.push(make_step(10, {0, 0, 0}));
    CHECK(buf.size() == 10);
    CHECK(buf.entries().front().step_index == 1);
    CHECK(buf.entries().back().step_index == 10);
}

TEST_CASE("window buffer: rejects bad pushes") {
    WindowBuffer buf(4, 3);
    buf.push(make_step(7, {1, 2, 3}));
    CHECK_THROWS_WITH_AS(buf.push(make_step(5, {1, 2, 3})),
                         doctest::Contains("NonMonotonicStep"), Error);
    CHECK_THROWS_WITH_AS(buf.push(make_step(8, {1, 2})), doctest::Contains("DimMismatch"),
                         Error);
}

TEST_CASE("tensorize: row-major element placement") {
    SignalConfig cfg;
    cfg.window = 2;
    cfg.d1 = 2;
    cfg.d2 = 2;
    WindowBuffer buf = filled_buffer({{1, 2, 3, 4}, {5, 6, 7, 8}});
    const Tensor t = window_tensorize(buf, cfg);
    REQUIRE(t.dims() == std::vector<std::size_t>{2, 2, 2, 1});
    // element (1, 0, 1, 0): second step's vector, position (0,1) of 2x2 -> 6
    const std::size_t flat = ((1 * 2 + 0) * 2 + 1) * 1 + 0;
    CHECK(t[flat] == 6.0);
}

TEST_CASE("tensorize: paper-scale shape and flatten round-trip") {
    SignalConfig cfg;  // W=10, 16x16
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(oracles::random_data(1536, 60 + i));
    WindowBuffer buf = filled_buffer(rows);
    const Tensor t = window_tensorize(buf, cfg);
    CHECK(t.dims() == std::vector<std::size_t>{10, 16, 16, 6});

    // Flattening recovers the window matrix row by row.
    for (std::size_t w = 0; w < 10; ++w) {
        for (std::size_t j = 0; j < 1536; ++j) {
            CHECK(t[w * 1536 + j] == rows[w][j]);
        }
    }
}

TEST_CASE("tensorize requires a full window") {
    SignalConfig cfg;
    cfg.window = 3;
    cfg.d1 = 1;
    cfg.d2 = 1;
    WindowBuffer buf(3, 4);
    buf.push(make_step(0, {1, 2, 3, 4}));
    CHECK_THROWS_WITH_AS(window_tensorize(buf, cfg), doctest::Contains("WindowNotFull"),
                         Error);
}

TEST_CASE("rank signal: identical rows give r1 = 1") {
    SignalConfig cfg;
    cfg.window = 10;
    cfg.d1 = 2;
    cfg.d2 = 2;
    const auto row = oracles::random_data(16, 123);
    WindowBuffer buf = filled_buffer(std::vector<std::vector<double>>(10, row));
    const RankSignal sig = rank_signal(buf, cfg);
    CHECK(sig.r1 == 1);
    CHECK(sig.window_end_step == 9);
}

TEST_CASE("rank signal: orthogonal rows give r1 = W") {
    // Gram-Schmidt on random rows; matrix-rank oracle confirms the planting.
    const std::size_t d = 64;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(oracles::random_data(d, 300 + i));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0, nj = 0;
            for (std::size_t k = 0; k < d; ++k) {
                dot += rows[i][k] * rows[j][k];
                nj += rows[j][k] * rows[j][k];
            }
            for (std::size_t k = 0; k < d; ++k) rows[i][k] -= dot / nj * rows[j][k];
        }
    }
    Eigen::MatrixXd m(10, d);
    for (int i = 0; i < 10; ++i) {
        for (std::size_t k = 0; k < d; ++k) m(i, static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    REQUIRE(oracles::numerical_rank(m) == 10);

    SignalConfig cfg;
    cfg.window = 10;
    cfg.d1 = 4;
    cfg.d2 = 4;
    cfg.epsilon = 1e-8;
    CHECK(rank_signal(filled_buffer(rows), cfg).r1 == 10);
}

TEST_CASE("rank signal: subspace construction bounds r1") {
    // Rows drawn from a 3-dimensional subspace, plus noise far below the
    // epsilon budget; matrix-rank oracle confirms the construction.
    const std::size_t d = 64;
    const auto b0 = oracles::random_data(d, 900);
    const auto b1 = oracles::random_data(d, 901);
    const auto b2 = oracles::random_data(d, 902);
    std::mt19937_64 rng(903);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_real_distribution<double> noise(-1e-9, 1e-9);

    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) {
        const double c0 = coeff(rng), c1 = coeff(rng), c2 = coeff(rng);
        std::vector<double> row(d);
        for (std::size_t k = 0; k < d; ++k) {
            row[k] = c0 * b0[k] + c1 * b1[k] + c2 * b2[k] + noise(rng);
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(10, d);
    for (int i = 0; i < 10; ++i) {
        for (std::size_t k = 0; k < d; ++k) m(i, static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    REQUIRE(oracles::numerical_rank(m, 1e-6) == 3);

    SignalConfig cfg;
    cfg.window = 10;
    cfg.d1 = 4;
    cfg.d2 = 4;
    CHECK(rank_signal(filled_buffer(rows), cfg).r1 <= 3);
}

TEST_CASE("entropy: uniform, one-hot, and frozen oracle value") {
    CHECK(entropy(TopKLogits{{1.0, 1.0, 1.0, 1.0}}) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(entropy(TopKLogits{{100.0, 0.0, 0.0}}) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(entropy(TopKLogits{{0.0}}) == 0.0);

    // Direct-formula oracle, frozen: softmax([1.0, 0.5, 0.1]) entropy in nats.
    const double frozen = 1.0320876435380364;
    CHECK(entropy(TopKLogits{{1.0, 0.5, 0.1}}) == doctest::Approx(frozen).epsilon(1e-12));

    double m = 1.0;
    double denom = 0.0;
    for (double z : {1.0, 0.5, 0.1}) denom += std::exp(z - m);
    double h = 0.0;
    for (double z : {1.0, 0.5, 0.1}) {
        const double p = std::exp(z - m) / denom;
        h -= p * std::log(p);
    }
    CHECK(frozen == doctest::Approx(h).epsilon(1e-15));
}

TEST_CASE("entropy properties: bounds, shift and permutation invariance") {
    std::mt19937_64 rng(9001);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + static_cast<std::size_t>(rng() % 8);
        std::vector<double> z(k);
        for (double& v : z) v = uni(rng);

        const double h = entropy(TopKLogits{z});
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);

        std::vector<double> shifted = z;
        for (double& v : shifted) v += 3.25;
        CHECK(entropy(TopKLogits{shifted}) == doctest::Approx(h).epsilon(1e-12));

        std::vector<double> perm = z;
        std::shuffle(perm.begin(), perm.end(), rng);
        CHECK(entropy(TopKLogits{perm}) == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("low rank predicate") {
    auto sig = [](std::size_t r1, std::size_t r2) {
        RankSignal s;
        s.r1 = r1;
        s.r2 = r2;
        return s;
    };
    CHECK(low_rank_predicate(sig(7, 70), 8, 60));
    CHECK_FALSE(low_rank_predicate(sig(10, 60), 8, 60));  // strict inequality
    CHECK(low_rank_predicate(sig(10, 59), 8, 60));
    CHECK_FALSE(low_rank_predicate(sig(1, 1), 0, 0));  // thresholds 0 never fire
}

TEST_CASE("scale covariance: ranks unchanged under scaling") {
    SignalConfig cfg;
    cfg.window = 8;
    cfg.d1 = 4;
    cfg.d2 = 2;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 8; ++i) rows.push_back(oracles::random_data(32, 700 + i));
    const RankSignal base = rank_signal(filled_buffer(rows), cfg);

    for (double c : {-3.0, 0.25, 17.0}) {
        auto scaled = rows;
        for (auto& r : scaled) {
            for (double& v : r) v *= c;
        }
        const RankSignal s = rank_signal(filled_buffer(scaled), cfg);
        CHECK(s.r1 == base.r1);
        CHECK(s.r2 == base.r2);
    }
}

TEST_CASE("window determinism: identical pushes, identical signals") {
    SignalConfig cfg;
    cfg.window = 6;
    cfg.d1 = 2;
    cfg.d2 = 2;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 12; ++i) rows.push_back(oracles::random_data(16, 40 + i));

    auto run = [&] {
        WindowBuffer buf(6, 16);
        std::vector<std::pair<std::size_t, std::size_t>> sigs;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            buf.push(make_step(static_cast<std::int64_t>(i), rows[i]));
            if (buf.full()) {
                const RankSignal s = rank_signal(buf, cfg);
                sigs.emplace_back(s.r1, s.r2);
            }
        }
        return sigs;
    };
    CHECK(run() == run());
}

TEST_CASE("signal config validation") {
    SignalConfig cfg;
    CHECK(derived_d3(cfg, 1536) == 6);
    CHECK_THROWS_WITH_AS(validate_signal_config(cfg, 1000), doctest::Contains("divide"),
                         Error);
    cfg.window = 1;
    CHECK_THROWS_AS(validate_signal_config(cfg, 1536), Error);
    cfg.window = 10;
    cfg.epsilon = 0.0;
    CHECK_THROWS_WITH_AS(validate_signal_config(cfg, 1536),
                         doctest::Contains("InvalidEpsilon"), Error);
}

TEST_SUITE_END();
