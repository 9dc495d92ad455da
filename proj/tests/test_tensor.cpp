#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "rankguide/tensor.hpp"
#include "rankguide/tensor_io.hpp"

using namespace rankguide;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("construction: identity case") {
    Tensor t({2, 2}, {1, 0, 0, 1});
    CHECK(t.ndims() == 2);
    CHECK(t.size() == 4);
    CHECK(t[0] == 1.0);
    CHECK(t[3] == 1.0);
}

TEST_CASE("construction: length mismatch rejected") {
    CHECK_THROWS_WITH_AS(static_cast<void>(Tensor({3}, {1, 2})), doctest::Contains("DimMismatch"), Error);
    CHECK_THROWS_WITH_AS(static_cast<void>(Tensor({}, {})), doctest::Contains("EmptyShape"), Error);
    CHECK_THROWS_WITH_AS(static_cast<void>(Tensor({2, 0}, {})), doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("construction: window-tensor shape") {
    // 10 x 16 x 16 x 6 is the working shape for d_hid = 1536.
    Tensor t({10, 16, 16, 6}, std::vector<double>(15360, 0.5));
    CHECK(t.size() == 15360);
    CHECK(t.dims()[3] == 6);
}

TEST_CASE("frobenius_norm: zero and identity") {
    CHECK(frobenius_norm(Tensor::zeros({2, 2})) == 0.0);
    CHECK(frobenius_norm(Tensor({2, 2}, {1, 0, 0, 1})) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("frobenius_norm matches naive summation oracle") {
    const std::vector<std::size_t> dims{10, 16, 16, 6};
    const auto data = oracles::random_data(15360, 42);
    Tensor t(dims, data);
    const double expected = oracles::naive_frobenius(data);
    CHECK(frobenius_norm(t) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("reshape: row-major layout preserved") {
    Tensor t({4}, {1, 2, 3, 4});
    Tensor m = reshape(t, {2, 2});
    CHECK(m.dims() == std::vector<std::size_t>{2, 2});
    // rows [1,2] and [3,4]
    CHECK(m[0] == 1.0);
    CHECK(m[1] == 2.0);
    CHECK(m[2] == 3.0);
    CHECK(m[3] == 4.0);

    Tensor back = reshape(m, {4});
    CHECK(back == t);
}

TEST_CASE("reshape: window matrix to 4d tensor") {
    Tensor mat({10, 1536}, std::vector<double>(15360, 1.0));
    Tensor t = reshape(mat, {10, 16, 16, 6});
    CHECK(t.dims() == std::vector<std::size_t>{10, 16, 16, 6});
    CHECK_THROWS_WITH_AS(reshape(mat, {10, 16, 16, 7}), doctest::Contains("DimMismatch"),
                         Error);
}

TEST_CASE("unfold: shapes") {
    Tensor t({2, 3, 4}, oracles::random_data(24, 1));
    auto m1 = unfold(t, 1);
    CHECK(m1.rows() == 2);
    CHECK(m1.cols() == 12);
    auto m2 = unfold(t, 2);
    CHECK(m2.rows() == 6);
    CHECK(m2.cols() == 4);
    CHECK_THROWS_WITH_AS(unfold(t, 0), doctest::Contains("DimMismatch"), Error);
    CHECK_THROWS_WITH_AS(unfold(t, 3), doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("unfold matches index-by-index matricization oracle") {
    for (std::uint64_t seed : {7, 8, 9}) {
        const std::vector<std::size_t> dims{2, 2, 2};
        const auto data = oracles::random_data(8, seed);
        Tensor t(dims, data);
        for (std::size_t left = 1; left < dims.size(); ++left) {
            auto view = unfold(t, left);
            Eigen::MatrixXd expect = oracles::matricize(data, dims, left);
            REQUIRE(view.rows() == expect.rows());
            REQUIRE(view.cols() == expect.cols());
            for (Eigen::Index i = 0; i < expect.rows(); ++i) {
                for (Eigen::Index j = 0; j < expect.cols(); ++j) {
                    CHECK(view(i, j) == expect(i, j));
                }
            }
        }
    }
}

TEST_CASE("relative_error basics") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    CHECK(relative_error(a, a) == 0.0);
    CHECK(relative_error(a, Tensor::zeros({2, 2})) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> scaled;
    for (double v : a.data()) scaled.push_back(v * 1.01);
    CHECK(relative_error(a, Tensor({2, 2}, scaled)) == doctest::Approx(0.01).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(relative_error(a, Tensor::zeros({4})),
                         doctest::Contains("DimMismatch"), Error);
    CHECK_THROWS_WITH_AS(relative_error(Tensor::zeros({2, 2}), a),
                         doctest::Contains("ZeroReference"), Error);
}

TEST_CASE("rgt round-trip is bit-exact") {
    const std::string path = "test_roundtrip.rgt";
    Tensor t({3, 4, 5}, oracles::random_data(60, 99));
    write_rgt(t, path);
    Tensor back = read_rgt(path);
    CHECK(back.dims() == t.dims());
    CHECK(back.data() == t.data());  // exact, not approximate
    std::remove(path.c_str());
}

TEST_CASE("rgt rejects malformed input with byte offsets") {
    const std::string path = "test_malformed.rgt";

    SUBCASE("wrong magic") {
        std::ofstream(path, std::ios::binary) << "NOPE";
        CHECK_THROWS_WITH_AS(read_rgt(path), doctest::Contains("FormatError"), Error);
        try {
            read_rgt(path);
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
        }
    }
    SUBCASE("truncated payload") {
        Tensor t({2, 2}, {1, 2, 3, 4});
        write_rgt(t, path);
        // Drop the last 8 bytes.
        std::ifstream in(path, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), {});
        in.close();
        std::ofstream(path, std::ios::binary) << buf.substr(0, buf.size() - 8);
        CHECK_THROWS_WITH_AS(read_rgt(path), doctest::Contains("truncated payload"), Error);
    }
    SUBCASE("trailing bytes") {
        Tensor t({2}, {1, 2});
        write_rgt(t, path);
        std::ofstream(path, std::ios::binary | std::ios::app) << "x";
        CHECK_THROWS_WITH_AS(read_rgt(path), doctest::Contains("trailing bytes"), Error);
    }
    SUBCASE("missing file is an io error") {
        try {
            read_rgt("does_not_exist.rgt");
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Io);
        }
    }
    std::remove(path.c_str());
}

TEST_SUITE_END();
