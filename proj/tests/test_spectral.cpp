#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdelab/quadrature.hpp"
#include "spdelab/spectral.hpp"

using namespace spdelab;

namespace {
constexpr double kPi = std::numbers::pi;

SpectralVector random_vector(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    SpectralVector v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(gen);
    return v;
}
}  // namespace

TEST_CASE("dirichlet eigenvalues") {
    const SpectralModel model = SpectralModel::dirichlet(8);
    CHECK(model.eigenvalues[0] == doctest::Approx(kPi * kPi).epsilon(1e-15));
    for (int j = 1; j < 8; ++j)
        CHECK(model.eigenvalues[j] > model.eigenvalues[j - 1]);
}

TEST_CASE("semigroup identity at t=0 and scalar decay") {
    const SpectralModel model = SpectralModel::dirichlet(4);
    const SpectralVector x = random_vector(4, 11);
    CHECK((semigroup_apply(model, 0.0, x) - x).norm() == 0.0);

    const SpectralModel one = SpectralModel::dirichlet(1);
    SpectralVector e1(1);
    e1 << 1.0;
    const double got = semigroup_apply(one, 1.0, e1)[0];
    CHECK(got == doctest::Approx(std::exp(-kPi * kPi)).epsilon(1e-14));
    CHECK(got == doctest::Approx(5.17e-5).epsilon(2e-3));
    CHECK_THROWS_AS(semigroup_apply(one, -0.1, e1), std::invalid_argument);
}

TEST_CASE("semigroup law and contraction on random vectors") {
    const SpectralModel model = SpectralModel::dirichlet(32);
    const SpectralVector x = random_vector(32, 7);
    const SpectralVector ab = semigroup_apply(model, 0.3 + 0.45, x);
    const SpectralVector a_b =
        semigroup_apply(model, 0.3, semigroup_apply(model, 0.45, x));
    CHECK((ab - a_b).norm() <= 1e-12 * x.norm());
    CHECK(semigroup_apply(model, 0.17, x).norm() <= x.norm() * (1.0 + 1e-12));
}

TEST_CASE("fractional powers") {
    const SpectralModel model = SpectralModel::dirichlet(16);
    const SpectralVector x = random_vector(16, 3);
    CHECK((frac_power_apply(model, 0.0, x) - x).norm() == 0.0);
    CHECK((frac_power_apply(model, -0.7, frac_power_apply(model, 0.7, x)) - x).norm() <=
          1e-12 * x.norm());

    const SpectralModel one = SpectralModel::dirichlet(1);
    SpectralVector e1(1);
    e1 << 1.0;
    CHECK(frac_power_apply(one, 1.0, e1)[0] ==
          doctest::Approx(kPi * kPi).epsilon(1e-15));
}

TEST_CASE("property: semigroup law and power inverses over random draws") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> tdist(0.0, 2.0);
    std::uniform_real_distribution<double> rdist(-1.5, 1.5);
    const SpectralModel model = SpectralModel::dirichlet(48);
    for (int trial = 0; trial < 30; ++trial) {
        const SpectralVector x = random_vector(48, 100 + trial);
        const double t1 = tdist(gen), t2 = tdist(gen), rho = rdist(gen);
        const SpectralVector ab = semigroup_apply(model, t1 + t2, x);
        const SpectralVector a_b =
            semigroup_apply(model, t1, semigroup_apply(model, t2, x));
        CHECK((ab - a_b).norm() <= 1e-12 * (x.norm() + 1.0));
        const SpectralVector roundtrip =
            frac_power_apply(model, -rho, frac_power_apply(model, rho, x));
        CHECK((roundtrip - x).norm() <= 1e-10 * (x.norm() + 1.0));
    }
}

TEST_CASE("smoothing bound t^rho ||A^rho S(t)|| <= (rho/e)^rho") {
    const SpectralModel model = SpectralModel::dirichlet(64);
    CHECK_THROWS_AS(smoothing_probe(model, 0.5, 0.0), std::invalid_argument);
    for (double t : {1e-4, 1e-3, 1e-2, 0.1, 1.0})
        CHECK(smoothing_probe(model, 0.0, t) <= 1.0 + 1e-15);

    // sup over t of t^{1/2}||A^{1/2}S(t)||: attained at t = 1/(2 lambda_j)
    const double target = 1.0 / std::sqrt(2.0 * std::numbers::e);
    double sup = 0.0;
    for (int j = 1; j <= model.modes; ++j) {
        const double t = 0.5 / model.eigenvalues[j - 1];
        sup = std::max(sup, std::sqrt(t) * smoothing_probe(model, 0.5, t));
    }
    CHECK(sup == doctest::Approx(target).epsilon(1e-12));

    // dense (rho, t) sample stays below (rho/e)^rho
    for (double rho : {0.25, 0.5, 1.0, 1.5}) {
        const double cap = std::pow(rho / std::numbers::e, rho);
        for (double t = 1e-4; t < 2.0; t *= 2.7)
            CHECK(std::pow(t, rho) * smoothing_probe(model, rho, t) <=
                  cap * (1.0 + 1e-12));
    }
    // single-mode calculus: rho=1 at t = 1/lambda_1
    const double t1 = 1.0 / model.eigenvalues[0];
    const double probe = smoothing_probe(model, 1.0, t1);
    CHECK(probe ==
          doctest::Approx(model.eigenvalues[0] * std::exp(-1.0)).epsilon(1e-12));
    CHECK(t1 * probe == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("L^q-in-time semigroup norm against the mode-wise oracle") {
    const SpectralModel model = SpectralModel::dirichlet(512);
    const NoiseModel white = NoiseModel::power_decay(0.0, 512);
    const LqNorm nrm = semigroup_lq_norm(model, white, 2.0, 1.0);
    CHECK(nrm.converged);
    CHECK_FALSE(nrm.divergent);
    const double oracle = semigroup_l2_norm_sq_modewise(model, white, 1.0);
    CHECK(nrm.value * nrm.value == doctest::Approx(oracle).epsilon(1e-7));
    // tail sum: Sum 1/(2 pi^2 j^2) = 1/12, truncation ~ 1/(2 pi^2 J)
    CHECK(nrm.value * nrm.value == doctest::Approx(1.0 / 12.0).epsilon(1.5e-3));
}

TEST_CASE("q=infinity requires trace-class noise") {
    const SpectralModel model = SpectralModel::dirichlet(64);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(semigroup_lq_norm(model, NoiseModel::power_decay(0.0, 64), inf, 1.0)
              .divergent);
    const LqNorm trace =
        semigroup_lq_norm(model, NoiseModel::power_decay(2.0, 64), inf, 1.0);
    CHECK_FALSE(trace.divergent);
    double trace_sum = 0.0;
    for (int j = 1; j <= 64; ++j) trace_sum += std::pow(j, -2.0);
    CHECK(trace.value == doctest::Approx(std::sqrt(trace_sum)).epsilon(1e-12));
}

TEST_CASE("divergence flag at q >= 2/(1-beta)") {
    const SpectralModel model = SpectralModel::dirichlet(64);
    const NoiseModel white = NoiseModel::power_decay(0.0, 64);  // beta_max = 1/2
    CHECK(semigroup_lq_norm(model, white, 4.0, 1.0).divergent);
    CHECK_FALSE(semigroup_lq_norm(model, white, 3.9, 1.0).divergent);
    CHECK_THROWS_AS(semigroup_lq_norm(model, white, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("Lemma 2.3 bound: lq norm <= C ||A^{(beta-1)/2} Q^{1/2}||_HS") {
    const double T = 1.0;
    for (double alpha : {0.0, 1.0, 2.0, 3.0}) {
        const int modes = 384;
        const SpectralModel model = SpectralModel::dirichlet(modes);
        const NoiseModel noise = NoiseModel::power_decay(alpha, modes);
        const double beta_max = noise.beta_max();
        const double beta = (beta_max == 1.0 && alpha > 1.0) ? 1.0 : beta_max - 0.05;
        const double q = 2.0;
        const LqNorm lhs = semigroup_lq_norm(model, noise, q, T);
        const double rho = 0.5 * (1.0 - beta);
        const double c_rho = rho == 0.0 ? 1.0 : std::pow(rho / std::numbers::e, rho);
        const double time_factor =
            std::pow(std::pow(T, 1.0 - q * rho) / (1.0 - q * rho), 1.0 / q);
        const double rhs = c_rho * time_factor * weighted_hs_norm(noise, beta);
        CAPTURE(alpha);
        CHECK(lhs.value <= rhs * (1.0 + 1e-10));
    }
}

TEST_CASE("lq norm monotone in T and in the beta weight") {
    const SpectralModel model = SpectralModel::dirichlet(256);
    const NoiseModel noise = NoiseModel::power_decay(0.0, 256);
    double prev = 0.0;
    for (double T : {0.25, 0.5, 1.0, 2.0}) {
        const double v = semigroup_lq_norm(model, noise, 2.0, T).value;
        CHECK(v > prev);
        prev = v;
    }
    // weights lambda^{beta-1} q_j increase with beta (lambda_j > 1)
    prev = 0.0;
    for (double beta : {0.0, 0.15, 0.3, 0.45}) {
        Eigen::VectorXd w(256);
        for (int j = 1; j <= 256; ++j)
            w[j - 1] = std::pow(model.eigenvalues[j - 1], beta - 1.0);
        const double v =
            semigroup_lq_norm_weighted(model, w, 2.0, 1.0, 1.0 - beta).value;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("Parseval against grid quadrature") {
    const int J = 256;
    const SpectralModel model = SpectralModel::dirichlet(J);
    const SpectralVector x = random_vector(J, 21);
    const double exact = x.squaredNorm();
    const double quad = adaptive_simpson(
        [&](double xi) {
            const double v = model.evaluate(x, xi);
            return v * v;
        },
        0.0, 1.0, 1e-11);
    CHECK(quad == doctest::Approx(exact).epsilon(1e-8));
}

TEST_CASE("graded quadrature handles the t^{-sigma} singularity") {
    // int_0^1 t^{-0.6} dt = 1/0.4
    const QuadratureResult r =
        graded_integral([](double t) { return std::pow(t, -0.6); }, 1.0, 0.6);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.5).epsilon(1e-9));
}
