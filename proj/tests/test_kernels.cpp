#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "auvgp/kernels.hpp"
#include "oracles.hpp"

using namespace auvgp;

TEST_CASE("closed-form convolution matches quadrature in one dimension") {
    std::mt19937_64 rng(101);
    for (int draw = 0; draw < 8; ++draw) {
        const Hyperparameters hp =
            oracles::random_hyperparameters(2, 2, 1, rng);
        const Vec x = oracles::random_point(1, rng);
        const Vec x2 = oracles::random_point(1, rng);
        for (const auto [q, s] : {std::pair{0, 0}, {0, 1}, {1, 1}}) {
            const double closed = cross_covariance(hp, q, s, x, x2);
            const double numeric =
                oracles::quadrature_cross_covariance(hp, q, s, x, x2);
            CHECK(closed ==
                  doctest::Approx(numeric).epsilon(1e-6).scale(1e-12));
        }
    }
}

TEST_CASE("closed-form convolution matches quadrature in two dimensions") {
    std::mt19937_64 rng(202);
    for (int draw = 0; draw < 3; ++draw) {
        const Hyperparameters hp =
            oracles::random_hyperparameters(2, 1, 2, rng);
        const Vec x = oracles::random_point(2, rng);
        const Vec x2 = oracles::random_point(2, rng);
        for (const auto [q, s] : {std::pair{0, 0}, {0, 1}}) {
            const double closed = cross_covariance(hp, q, s, x, x2);
            const double numeric =
                oracles::quadrature_cross_covariance(hp, q, s, x, x2);
            CHECK(closed ==
                  doctest::Approx(numeric).epsilon(1e-6).scale(1e-12));
        }
    }
}

TEST_CASE("structure entries reproduce the reference covariance") {
    std::mt19937_64 rng(303);
    const Hyperparameters hp = oracles::random_hyperparameters(3, 2, 4, rng);
    const CovarianceStructure st = build_structure(hp, {4, 4, 4});
    for (int draw = 0; draw < 40; ++draw) {
        const int q = static_cast<int>(rng() % 3);
        const int s = static_cast<int>(rng() % 3);
        const Vec x = oracles::random_point(4, rng);
        const Vec x2 = oracles::random_point(4, rng);
        const double fast = structure_entry(st, q, s, x, x2);
        const double ref = cross_covariance(hp, q, s, x, x2);
        CHECK(fast == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("cross covariance is symmetric under joint swap") {
    std::mt19937_64 rng(404);
    const Hyperparameters hp = oracles::random_hyperparameters(3, 2, 3, rng);
    for (int draw = 0; draw < 20; ++draw) {
        const int q = static_cast<int>(rng() % 3);
        const int s = static_cast<int>(rng() % 3);
        const Vec x = oracles::random_point(3, rng);
        const Vec x2 = oracles::random_point(3, rng);
        CHECK(cross_covariance(hp, q, s, x, x2) ==
              doctest::Approx(cross_covariance(hp, s, q, x2, x))
                  .epsilon(1e-14));
    }
}

TEST_CASE("covariance decays monotonically with distance") {
    std::mt19937_64 rng(505);
    const Hyperparameters hp = oracles::random_hyperparameters(2, 2, 2, rng);
    const Vec x = oracles::random_point(2, rng);
    Vec dir(2);
    dir << 0.6, -0.8;
    for (const auto [q, s] : {std::pair{0, 0}, {0, 1}}) {
        double prev = std::abs(cross_covariance(hp, q, s, x, x));
        for (double t = 0.5; t <= 4.01; t += 0.5) {
            const Vec x2 = x + t * dir;
            const double cur = std::abs(cross_covariance(hp, q, s, x, x2));
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("single output and latent reduce to a squared exponential") {
    Hyperparameters hp = Hyperparameters::make(1, 1, 1);
    const double l = 0.8, S = 1.3, su2 = 1.7;
    hp.S(0, 0) = S;
    hp.log_ell(0, 0) = std::log(l);
    hp.log_sigma_u2(0) = std::log(su2);
    hp.log_sigma_w2(0) = -3.0;
    Vec x(1), x2(1);
    x << 0.4;
    x2 << -0.9;
    const double delta = x(0) - x2(0);
    const double expected = su2 * S * S * l * std::sqrt(std::numbers::pi) *
                            std::exp(-delta * delta / (4.0 * l * l));
    CHECK(cross_covariance(hp, 0, 0, x, x2) ==
          doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("smoothing kernel evaluates its closed form") {
    Hyperparameters hp = Hyperparameters::make(1, 1, 2);
    hp.S(0, 0) = 1.5;
    hp.log_ell.row(0) << std::log(1.0), std::log(2.0);
    Vec x(2);
    x << 1.0, 2.0;
    CHECK(smoothing_kernel(hp, 0, 0, x) ==
          doctest::Approx(1.5 * std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("parallel and serial assemblies agree") {
    std::mt19937_64 rng(606);
    const Hyperparameters hp = oracles::random_hyperparameters(3, 2, 3, rng);
    std::vector<Mat> X = oracles::random_inputs(3, 9, 3, rng);
    X[1].conservativeResize(5, Eigen::NoChange);
    X[2].conservativeResize(7, Eigen::NoChange);

    double jit_par = 0, jit_ser = 0;
    set_thread_count(3);
    const Mat k_par = assemble_full_covariance(hp, X, &jit_par);
    set_thread_count(0);
    const Mat k_ser = assemble_full_covariance_serial(hp, X, &jit_ser);

    REQUIRE(k_par.rows() == 21);
    CHECK((k_par - k_ser).norm() <= 1e-12 * k_ser.norm());
    CHECK(jit_par == doctest::Approx(jit_ser).epsilon(1e-12));
}

TEST_CASE("assembly rejects mismatched blocks") {
    std::mt19937_64 rng(707);
    const Hyperparameters hp = oracles::random_hyperparameters(2, 1, 3, rng);
    std::vector<Mat> X = oracles::random_inputs(2, 4, 3, rng);
    CHECK_THROWS_AS(
        assemble_full_covariance(hp, {X[0]}), ConfigError);
    X[1] = Mat::Zero(4, 2);
    CHECK_THROWS_AS(assemble_full_covariance(hp, X), ConfigError);
}

TEST_CASE("signal covariance stays positive semidefinite") {
    std::mt19937_64 rng(808);
    for (int draw = 0; draw < 50; ++draw) {
        const int Q = 1 + static_cast<int>(rng() % 3);
        const int R = 1 + static_cast<int>(rng() % 2);
        const int D = 1 + static_cast<int>(rng() % 3);
        const int n = 3 + static_cast<int>(rng() % 6);
        const Hyperparameters hp =
            oracles::random_hyperparameters(Q, R, D, rng);
        const std::vector<Mat> X = oracles::random_inputs(Q, n, D, rng);
        const Mat k = assemble_signal_covariance(hp, X);
        const Eigen::SelfAdjointEigenSolver<Mat> es(k,
                                                    Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        CHECK(lo >= -1e-8 * hi);
    }
}

TEST_CASE("independent terms couple only their own output") {
    std::mt19937_64 rng(909);
    Hyperparameters hp = oracles::random_hyperparameters(3, 1, 2, rng, true);
    REQUIRE(hp.R == 4);
    for (int q = 0; q < 3; ++q) {
        CHECK(hp.is_active(q, 0));
        for (int r = 1; r < 4; ++r) CHECK(hp.is_active(q, r) == (r == 1 + q));
    }

    // with the shared latent silenced, all cross blocks must vanish while
    // each private latent still powers its own diagonal block
    for (int q = 0; q < 3; ++q) hp.S(q, 0) = 0.0;
    const Vec x = oracles::random_point(2, rng);
    const Vec x2 = oracles::random_point(2, rng);
    for (int q = 0; q < 3; ++q)
        for (int s = 0; s < 3; ++s) {
            const double v = cross_covariance(hp, q, s, x, x2);
            if (q == s)
                CHECK(std::abs(v) > 0.0);
            else
                CHECK(v == 0.0);
        }
}

TEST_CASE("pack and unpack invert each other") {
    std::mt19937_64 rng(1010);
    for (const bool independent : {false, true}) {
        const Hyperparameters hp =
            oracles::random_hyperparameters(3, 2, 4, rng, independent);
        const Vec theta = hp.pack();
        Hyperparameters back = Hyperparameters::make(3, 2, 4, independent);
        back.unpack(theta);
        CHECK((back.log_ell - hp.log_ell).norm() == 0.0);
        CHECK((back.log_sigma_u2 - hp.log_sigma_u2).norm() == 0.0);
        CHECK((back.log_sigma_w2 - hp.log_sigma_w2).norm() == 0.0);
        for (int q = 0; q < 3; ++q)
            for (int r = 0; r < hp.R; ++r)
                if (hp.is_active(q, r))
                    CHECK(back.S(q, r) ==
                          doctest::Approx(hp.S(q, r)).epsilon(1e-12));
        CHECK_THROWS_AS(back.unpack(Vec::Zero(theta.size() + 1)),
                        ConfigError);
    }
}

TEST_CASE("packed sensitivities are whitened by the convolution amplitude") {
    std::mt19937_64 rng(1111);
    const Hyperparameters hp = oracles::random_hyperparameters(2, 2, 3, rng);
    const ParamLayout lay = make_layout(hp);
    const Vec theta = hp.pack();
    for (int q = 0; q < 2; ++q)
        for (int r = 0; r < 2; ++r) {
            const double expected =
                hp.S(q, r) * std::exp(hp.log_sensitivity_scale(q, r));
            CHECK(theta(lay.s_idx[q * hp.R + r]) ==
                  doctest::Approx(expected).epsilon(1e-14));
            // the scale is prod_d (pi ell^2)^(1/4) in log space
            double acc = 0;
            for (int d = 0; d < 3; ++d)
                acc += 0.25 * std::log(std::numbers::pi *
                                       std::exp(2.0 *
                                                hp.log_ell(q * hp.R + r, d)));
            CHECK(hp.log_sensitivity_scale(q, r) ==
                  doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("layout places sensitivities, length scales, then variances") {
    const Hyperparameters hp = Hyperparameters::make(2, 1, 3, true);
    REQUIRE(hp.R == 3);
    const ParamLayout lay = make_layout(hp);
    // active pairs in q-major order: (0,0), (0,1), (1,0), (1,2)
    CHECK(lay.s_idx[0 * 3 + 0] == 0);
    CHECK(lay.s_idx[0 * 3 + 1] == 1);
    CHECK(lay.s_idx[1 * 3 + 0] == 2);
    CHECK(lay.s_idx[1 * 3 + 2] == 3);
    CHECK(lay.s_idx[0 * 3 + 2] == -1);
    CHECK(lay.s_idx[1 * 3 + 1] == -1);
    CHECK(lay.ell_idx[0 * 3 + 0] == 4);
    CHECK(lay.ell_idx[0 * 3 + 1] == 7);
    CHECK(lay.ell_idx[1 * 3 + 0] == 10);
    CHECK(lay.ell_idx[1 * 3 + 2] == 13);
    CHECK(lay.u_idx[0] == 16);
    CHECK(lay.u_idx[2] == 18);
    CHECK(lay.w_idx[0] == 19);
    CHECK(lay.w_idx[1] == 20);
    CHECK(lay.n_params == 21);
    CHECK(hp.n_params() == 21);
}

TEST_CASE("hyperparameters serialize and parse back exactly") {
    std::mt19937_64 rng(1212);
    const Hyperparameters hp =
        oracles::random_hyperparameters(3, 2, 4, rng, true);
    const Hyperparameters back = Hyperparameters::from_json(hp.to_json());
    CHECK(back.Q == hp.Q);
    CHECK(back.R == hp.R);
    CHECK(back.D == hp.D);
    CHECK((back.S - hp.S).norm() == 0.0);
    CHECK((back.log_ell - hp.log_ell).norm() == 0.0);
    CHECK((back.log_sigma_u2 - hp.log_sigma_u2).norm() == 0.0);
    CHECK((back.log_sigma_w2 - hp.log_sigma_w2).norm() == 0.0);
    CHECK((back.active == hp.active).all());

    nlohmann::json j = hp.to_json();
    j["schema_version"] = 2;
    CHECK_THROWS_AS(Hyperparameters::from_json(j), ConfigError);
    j = hp.to_json();
    j["log_space"] = false;
    CHECK_THROWS_AS(Hyperparameters::from_json(j), ConfigError);
}

TEST_CASE("validation rejects broken structures") {
    std::mt19937_64 rng(1313);
    Hyperparameters hp = oracles::random_hyperparameters(2, 2, 3, rng);
    CHECK_NOTHROW(hp.validate());
    hp.log_sigma_u2(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(hp.validate(), ConfigError);

    Hyperparameters wrong = oracles::random_hyperparameters(2, 2, 3, rng);
    wrong.S = Mat::Zero(2, 3);
    CHECK_THROWS_AS(wrong.validate(), ConfigError);

    Hyperparameters dead = oracles::random_hyperparameters(2, 2, 3, rng);
    dead.active.col(1).setZero();
    CHECK_THROWS_AS(dead.validate(), ConfigError);

    CHECK_THROWS_AS(Hyperparameters::make(0, 1, 1), ConfigError);
    CHECK_THROWS_AS(build_structure(oracles::random_hyperparameters(2, 1, 2,
                                                                    rng),
                                    {3}),
                    ConfigError);
}

TEST_CASE("thread count override round-trips") {
    const int before = thread_count();
    CHECK(before >= 1);
    set_thread_count(2);
    CHECK(thread_count() == 2);
    set_thread_count(0);
    CHECK(thread_count() == before);
}
