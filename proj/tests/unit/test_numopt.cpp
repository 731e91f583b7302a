#include <doctest.h>

#include <cmath>

#include "consensus_vem/errors.hpp"
#include "consensus_vem/numopt.hpp"
#include "consensus_vem/objectives.hpp"
#include "fixtures.hpp"

using namespace cvem;

namespace {

ObjectiveSpec one_d(std::function<double(double)> f, std::function<double(double)> df, bool positive = false) {
    ObjectiveSpec s;
    s.dimension = 1;
    s.eval = [f](std::span<const double> x) { return f(x[0]); };
    s.grad = [df](std::span<const double> x, std::span<double> g) { g[0] = df(x[0]); };
    s.positivity_mask = {positive};
    return s;
}

ObjectiveSpec quadratic(std::vector<double> centre, std::vector<double> weight) {
    ObjectiveSpec s;
    s.dimension = centre.size();
    s.eval = [=](std::span<const double> x) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) v -= weight[i] * (x[i] - centre[i]) * (x[i] - centre[i]);
        return v;
    };
    s.grad = [=](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -2.0 * weight[i] * (x[i] - centre[i]);
    };
    s.positivity_mask.assign(centre.size(), false);
    return s;
}

}  // namespace

TEST_CASE("maximize finds a quadratic vertex") {
    const auto spec = one_d([](double x) { return -(x - 3) * (x - 3); }, [](double x) { return -2 * (x - 3); });
    const std::vector<double> x0{0.0};
    const auto r = maximize(spec, x0, AscentOptions{1e-14, 200, 1.0});
    CHECK(r.argmax[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(r.value == spec.eval(r.argmax));
}

TEST_CASE("maximize respects positivity") {
    const auto spec = one_d([](double x) { return std::log(x) - x; }, [](double x) { return 1.0 / x - 1.0; }, true);
    const std::vector<double> x0{5.0};
    const auto r = maximize(spec, x0, AscentOptions{1e-15, 500, 1.0});
    CHECK(std::abs(r.argmax[0] - 1.0) <= 1e-6);
    CHECK(r.argmax[0] > 0.0);
}

TEST_CASE("maximize error paths") {
    const auto pos = one_d([](double x) { return std::log(x) - x; }, [](double x) { return 1.0 / x - 1.0; }, true);
    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(maximize(pos, bad), InvalidArgument);
    const std::vector<double> ok{1.0};
    CHECK_THROWS_AS(maximize(pos, ok, AscentOptions{0.0, 10, 1.0}), InvalidArgument);
    const auto nan = one_d([](double) { return NAN; }, [](double) { return 0.0; });
    CHECK_THROWS_AS(maximize(nan, ok), NumericalFailure);
}

TEST_CASE("accepted iterates never decrease and the reported value is exact") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        auto in = fixtures::random_instance(100 + t, fixtures::make_shape(1, 3, 3, 2));
        const std::vector<double> votes{1.0, 2.0, 0.0};
        const auto spec = mu_n_objective(in.params, in.vs.eps_n.row(0), in.vs.sigma_n2.row(0), votes,
                                         3.0 / in.vs.kappa[0]);
        std::vector<double> x0(3);
        for (double& x : x0) x = rng.normal(0.0, 2.0);
        const double start = spec.eval(x0);
        double prev = start;
        for (std::size_t iters = 1; iters <= 8; ++iters) {
            const auto r = maximize(spec, x0, AscentOptions{1e-14, iters, 1.0});
            CHECK(r.value >= prev - 1e-12);
            CHECK(std::abs(r.value - spec.eval(r.argmax)) <= 1e-12);
            prev = r.value;
        }
    }
}

TEST_CASE("log-space and direct optimization agree") {
    // f(x) = a log x - b x over x > 0, and the same function of u = log x.
    for (double a : {0.5, 2.0, 7.0}) {
        const double b = 1.3;
        const auto direct = one_d([=](double x) { return a * std::log(x) - b * x; },
                                  [=](double x) { return a / x - b; }, true);
        const auto logged = one_d([=](double u) { return a * u - b * std::exp(u); },
                                  [=](double u) { return a - b * std::exp(u); });
        const std::vector<double> x0{1.0};
        const std::vector<double> u0{0.0};
        const auto r1 = maximize(direct, x0, AscentOptions{1e-12, 500, 1.0});
        const auto r2 = maximize(logged, u0, AscentOptions{1e-12, 500, 1.0});
        CHECK(std::abs(r1.value - r2.value) <= 1e-8 * std::abs(r2.value) + 1e-12);
    }
}

TEST_CASE("epsilon objective agrees with a grid search") {
    auto in = fixtures::random_instance(7, fixtures::make_shape(1, 2, 2, 3));
    const std::vector<double> mass{1.7, 1.3};
    const auto spec = eps_n_objective(in.params, in.vs.mu_n.row(0), in.vs.delta_n2.row(0), mass,
                                      3.0 / in.vs.xi[0]);
    const std::vector<double> x0(2, 0.0);
    const auto r = maximize(spec, x0, AscentOptions{1e-14, 500, 1.0});

    const double lo = -4.0, hi = 4.0;
    const std::size_t steps = 400;
    const double h = (hi - lo) / steps;
    double best = -INFINITY;
    std::vector<double> best_x(2);
    for (std::size_t a = 0; a <= steps; ++a) {
        for (std::size_t b = 0; b <= steps; ++b) {
            const std::vector<double> x{lo + a * h, lo + b * h};
            const double v = spec.eval(x);
            if (v > best) best = v, best_x = x;
        }
    }
    CHECK(r.value >= best - 1e-9);
    CHECK(std::abs(r.argmax[0] - best_x[0]) <= h);
    CHECK(std::abs(r.argmax[1] - best_x[1]) <= h);
}

TEST_CASE("grad_check") {
    const auto q = quadratic({1.0, -2.0, 0.5}, {0.7, 2.0, 1.5});
    const std::vector<double> x{0.3, 4.0, -1.0};
    CHECK(grad_check(q, x, 1e-5) <= 1e-9);

    auto in = fixtures::random_instance(13, fixtures::make_shape(1, 4, 3, 2));
    const std::vector<double> votes{0.0, 2.0, 1.0, 0.0};
    const auto mu = mu_n_objective(in.params, in.vs.eps_n.row(0), in.vs.sigma_n2.row(0), votes,
                                   3.0 / in.vs.kappa[0]);
    CHECK(grad_check(mu, in.vs.mu_n.row(0), 1e-5) <= 1e-5);

    auto wrong = q;
    wrong.grad = [g = q.grad](std::span<const double> x, std::span<double> out) {
        g(x, out);
        for (double& v : out) v *= 2.0;
    };
    // |2g - g| / |2g| with the analytic gradient in the denominator
    CHECK(grad_check(wrong, x, 1e-5) == doctest::Approx(0.5).epsilon(1e-6));
}
