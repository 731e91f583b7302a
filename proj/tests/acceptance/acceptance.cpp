// Acceptance battery. Prints one PASS/FAIL line per criterion with the
// measured numbers. Exits 0 once every criterion has been evaluated; with
// --strict any FAIL makes the exit code 1.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "consensus_vem/baselines/experiment.hpp"
#include "consensus_vem/distributed/audit.hpp"
#include "consensus_vem/distributed/equivalence.hpp"
#include "consensus_vem/distributed/simulator.hpp"
#include "consensus_vem/elbo.hpp"
#include "consensus_vem/objectives.hpp"
#include "fixtures.hpp"

using namespace cvem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::vector<int> vote(const LabelObservations& w, std::size_t k) { return baselines::majority_vote(w, k); }

// ---------------------------------------------------------------------------
// 1. Every update and every outer iteration is non-decreasing in the bound.

Verdict elbo_monotonicity() {
    const double slack = -1e-8;
    double worst = INFINITY;
    std::string worst_where;
    std::size_t checks = 0;
    const auto track = [&](double before, double after, const std::string& where) {
        ++checks;
        if (after - before < worst) {
            worst = after - before;
            worst_where = where;
        }
    };

    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(derive_seed(0xACCE, seed));
        const std::size_t n = 20 + rng.below(181);
        const std::size_t k = 2 + rng.below(3);
        const std::size_t r1 = 1 + rng.below(5);
        const std::size_t r2 = 1 + rng.below(4);
        auto shape = fixtures::make_shape(n, k, r1, r2);
        for (auto& km : shape.clusters_per_clustering) km = 2 + rng.below(5);
        // half the instances are drawn from the model, half are unstructured
        const LabelObservations w = seed % 2 ? fixtures::sampled(seed, shape).w
                                             : fixtures::random_instance(seed, shape).w;
        FitConfig cfg;
        cfg.seed = seed;
        auto init = initialize(w, shape, seed, cfg);
        ModelParams& p = init.params;
        VariationalState& vs = init.state;
        const Matrix votes = vote_counts(w, k);

        double current = elbo(w, p, vs);
        const auto step = [&](const std::string& name, const std::function<void()>& update) {
            update();
            const double next = elbo(w, p, vs);
            track(current, next, "seed " + std::to_string(seed) + " " + name);
            current = next;
        };
        const auto phi_mass = [&](std::size_t obj) {
            std::vector<double> mass(k, 0.0);
            for (std::size_t m = 0; m < r2; ++m) {
                for (std::size_t i = 0; i < k; ++i) mass[i] += vs.phi[m](obj, i);
            }
            return mass;
        };

        for (std::size_t outer = 0; outer < 8; ++outer) {
            const double start = current;
            for (std::size_t sweep = 0; sweep < 2; ++sweep) {
                step("kappa", [&] { update_kappa(vs); });
                step("xi", [&] { update_xi(vs); });
                step("phi", [&] { update_phi(w, p, vs, cfg); });
                step("mu_n", [&] {
                    for (std::size_t o = 0; o < n; ++o) ascend_mu_n(p, vs, o, votes.row(o), r1, cfg);
                });
                step("sigma_n2", [&] {
                    for (std::size_t o = 0; o < n; ++o) ascend_sigma_n2(p, vs, o, r1, cfg);
                });
                step("eps_n", [&] {
                    for (std::size_t o = 0; o < n; ++o) ascend_epsilon_n(p, vs, o, phi_mass(o), r2, cfg);
                });
                step("delta_n2", [&] {
                    for (std::size_t o = 0; o < n; ++o) ascend_delta_n2(p, vs, o, r2, cfg);
                });
            }
            step("mu", [&] { p.mu = mstep_mu(vs); });
            step("delta2", [&] { p.delta2 = mstep_delta2(vs); });
            step("beta", [&] { p.beta = mstep_beta(w, vs, shape.clusters_per_clustering, cfg.beta_floor); });
            step("sigma2", [&] { p.sigma2 = mstep_sigma2(vs, p.mu); });
            track(start, current, "seed " + std::to_string(seed) + " outer " + std::to_string(outer));
        }

        // the library's own loop
        cfg.outer_max_iter = 15;
        const auto r = fit(w, shape, cfg);
        for (std::size_t t = 1; t < r.elbo_trace.size(); ++t) {
            track(r.elbo_trace[t - 1], r.elbo_trace[t], "seed " + std::to_string(seed) + " fit trace");
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu checks, worst change %.3g (%s)", checks, worst, worst_where.c_str());
    return {worst >= slack, buf};
}

// ---------------------------------------------------------------------------
// 2. Finite-difference checks of the five numeric objectives.

Verdict gradient_checks() {
    double worst = 0.0;
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const std::size_t k = 2 + rng.below(3);
        auto in = fixtures::random_instance(derive_seed(0x6AD, t), fixtures::make_shape(1, k, 3, 2));
        std::vector<double> votes(k), mass(k), spread(k);
        for (std::size_t i = 0; i < k; ++i) {
            votes[i] = static_cast<double>(rng.below(4));
            mass[i] = 2.0 * rng.uniform();
            spread[i] = 1.0 + 50.0 * rng.uniform();
        }
        const double wy = 3.0 / in.vs.kappa[0], wt = 2.0 / in.vs.xi[0];
        const auto row = [&](const Matrix& m) { return m.row(0); };
        worst = std::max(worst, grad_check(mu_n_objective(in.params, row(in.vs.eps_n), row(in.vs.sigma_n2), votes, wy),
                                           row(in.vs.mu_n), 1e-5));
        worst = std::max(worst, grad_check(sigma_n2_objective(in.params, row(in.vs.mu_n), wy), row(in.vs.sigma_n2), 1e-6));
        worst = std::max(worst, grad_check(eps_n_objective(in.params, row(in.vs.mu_n), row(in.vs.delta_n2), mass, wt),
                                           row(in.vs.eps_n), 1e-5));
        worst = std::max(worst, grad_check(delta_n2_objective(in.params, row(in.vs.eps_n), wt), row(in.vs.delta_n2), 1e-6));
        worst = std::max(worst, grad_check(sigma2_objective(spread, 20), in.params.sigma2, 1e-6));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "100 checks, max relative error %.3g", worst);
    return {worst <= 1e-5, buf};
}

// ---------------------------------------------------------------------------
// 3. Recovery on model-sampled data.

Verdict model_recovery() {
    std::size_t wins = 0;
    double worst_gap = INFINITY;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto d = fixtures::sampled(seed, fixtures::make_shape(200, 3, 4, 3, 3));
        FitConfig cfg;
        cfg.seed = seed;
        const auto r = fit(d.w, d.shape, cfg);
        const double acc = fixtures::hit_rate(r.posterior.hard_labels, d.labels);
        const double base = fixtures::hit_rate(vote(d.w, 3), d.labels);
        wins += acc > base;
        worst_gap = std::min(worst_gap, acc - base);
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s%.3f/%.3f", seed > 1 ? " " : "", acc, base);
        per_seed += buf;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "wins %zu/10, worst gap %+.1f points; bc3e/vote per seed: ", wins, 100 * worst_gap);
    return {wins >= 8 && worst_gap >= -0.01, buf + per_seed};
}

// ---------------------------------------------------------------------------
// 4. Noise clusterings: accuracy close to classifier-only, larger delta2.

Verdict fail_safe() {
    std::size_t larger = 0;
    double acc_noise = 0.0, acc_clf = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto shape = fixtures::make_shape(200, 3, 4, 3, 3);
        const auto d = fixtures::sampled(derive_seed(0xFA15, seed), shape);
        FitConfig cfg;
        cfg.seed = seed;

        auto noisy = d.w;
        Rng rng(derive_seed(0x0015E, seed));
        for (auto& v : noisy.cluster_labels.data()) v = static_cast<int>(rng.below(3));

        LabelObservations clf_only{d.w.class_labels, LabelMatrix(200, 0)};
        const auto clf_shape = fixtures::make_shape(200, 3, 4, 0);

        const auto informative = fit(d.w, shape, cfg);
        const auto noise = fit(noisy, shape, cfg);
        const auto plain = fit(clf_only, clf_shape, cfg);
        larger += noise.params.delta2 > informative.params.delta2;
        acc_noise += fixtures::hit_rate(noise.posterior.hard_labels, d.labels) / 50;
        acc_clf += fixtures::hit_rate(plain.posterior.hard_labels, d.labels) / 50;
    }
    const bool acc_ok = std::abs(acc_noise - acc_clf) <= 0.02;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "accuracy noise %.4f vs classifier-only %.4f (%s); delta2 larger with noise on %zu/50 (need 45)",
                  acc_noise, acc_clf, acc_ok ? "ok" : "too far", larger);
    return {acc_ok && larger >= 45, buf};
}

// ---------------------------------------------------------------------------
// 5. Distributed runs reproduce the central fit; the audit is clean and
// catches injected faults.

Verdict distributed_equivalence() {
    double worst = 0.0;
    std::size_t violations = 0, runs = 0, faults_missed = 0, faults = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = fixtures::sampled(derive_seed(0xD157, seed), fixtures::make_shape(100, 3, 4, 3, 3));
        FitConfig cfg;
        cfg.seed = seed;
        const auto ref = dist::RunSummary::of(fit(d.w, d.shape, cfg));
        const auto cols = [](std::vector<std::vector<std::string>> groups) {
            dist::PartitionSpec spec;
            spec.mode = dist::PartitionMode::Column;
            for (const auto& g : groups) {
                std::vector<dist::ColumnRef> c;
                for (const auto& name : g) c.push_back(dist::ColumnRef::parse(name));
                spec.column_groups.push_back(c);
            }
            return spec;
        };
        const std::vector<dist::PartitionSpec> layouts{
            dist::row_partition(100, 2),
            dist::row_partition(100, 4),
            cols({{"clf_1", "clf_2", "clu_1", "clu_2"}, {"clf_3", "clf_4", "clu_3"}}),
            cols({{"clf_1", "clf_2", "clu_1"}, {"clu_2"}, {"clf_3", "clf_4", "clu_3"}}),
            dist::six_site_layout(100),
        };
        for (const auto& spec : layouts) {
            const auto r = dist::run_distributed(d.w, d.shape, cfg, spec);
            ++runs;
            const auto rep = dist::verify_equivalence(ref, dist::RunSummary::of(r.fit), 1e-9);
            worst = std::max(worst, rep.max_posterior_diff);
            const auto norm = spec.normalized(d.shape);
            violations += dist::audit_privacy(r.log, norm).size();
            for (auto fault : {dist::FaultKind::RawLabelLeak, dist::FaultKind::SingleColumnVote,
                               dist::FaultKind::BetaThroughServer}) {
                // beta never leaves the server's scope in row mode, where the
                // server is its owner
                if (fault == dist::FaultKind::BetaThroughServer && spec.mode == dist::PartitionMode::Row) continue;
                ++faults;
                faults_missed += dist::audit_privacy(dist::inject_fault(r.log, fault, d.w), norm).size() != 1;
            }
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu runs, max |posterior diff| %.3g, clean-run violations %zu, faults caught %zu/%zu",
                  runs, worst, violations, faults - faults_missed, faults);
    return {worst <= 1e-9 && violations == 0 && faults_missed == 0, buf};
}

// ---------------------------------------------------------------------------
// 6. Semi-supervised reproduction on the two synthetic sets.

Verdict desk_reproduction() {
    baselines::ExperimentConfig cfg;
    cfg.seed = 2024;
    const auto moons = baselines::run_semi_supervised_experiment(baselines::make_half_moons(800, 0.15, 11), 2.0, 20, cfg);
    const auto circles = baselines::run_semi_supervised_experiment(baselines::make_circles(1600, 0.1, 11), 2.0, 20, cfg);
    const double dm = moons.mean_bc3e() - moons.mean_vote();
    const double dc = circles.mean_bc3e() - circles.mean_vote();
    std::size_t iters = 0, count = 0;
    for (const auto* r : {&moons, &circles}) {
        for (const auto& t : r->trials) iters += t.outer_iterations, ++count;
    }
    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "half-moons vote %.2f%% -> bc3e %.2f%% (%+.2f, need +2); circles vote %.2f%% -> bc3e %.2f%% "
                  "(%+.2f, need +10); mean outer iterations %.1f",
                  100 * moons.mean_vote(), 100 * moons.mean_bc3e(), 100 * dm, 100 * circles.mean_vote(),
                  100 * circles.mean_bc3e(), 100 * dc, static_cast<double>(iters) / static_cast<double>(count));
    return {dm >= 0.02 && dc >= 0.10, buf};
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    for (int i = 1; i < argc; ++i) strict |= std::strcmp(argv[i], "--strict") == 0;

    struct Criterion {
        const char* name;
        double budget_s;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {"1 ELBO monotonicity", 60, elbo_monotonicity},
        {"2 gradient checks", 5, gradient_checks},
        {"3 model recovery", 0, model_recovery},
        {"4 fail-safe", 0, fail_safe},
        {"5 distributed equivalence", 120, distributed_equivalence},
        {"6 semi-supervised reproduction", 600, desk_reproduction},
    };
    std::size_t failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        const bool in_time = c.budget_s == 0 || secs <= c.budget_s;
        const bool pass = v.pass && in_time;
        failed += !pass;
        std::printf("%s criterion %s: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs,
                    in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%zu of 6 criteria passed\n", 6 - failed);
    return strict && failed ? 1 : 0;
}
