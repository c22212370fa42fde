// Acceptance suite: one test case per criterion, each printing PASS/FAIL
// lines for its sub-checks. Heavy cases at the pinned production parameters;
// run individual criteria with  acceptance -tc='criterion-N*'.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "core/cavity.hpp"
#include "core/encoder.hpp"
#include "core/experiments.hpp"
#include "core/message_passing.hpp"
#include "test_util.hpp"

using namespace scldgm;

namespace {

struct Reporter {
    int criterion;
    bool all = true;

    bool line(bool pass, const std::string& what) {
        all &= pass;
        std::printf("[criterion %d] %s - %s\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
        std::fflush(stdout);
        return pass;
    }
    void done() {
        std::printf("[criterion %d] %s\n", criterion, all ? "PASS" : "FAIL");
        std::fflush(stdout);
    }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return buf;
}

void note(const std::string& s) {
    std::printf("  .. %s\n", s.c_str());
    std::fflush(stdout);
}

CavityParams cavity_base(int l, int L, int w, int pop) {
    CavityParams p;
    p.l = l;
    p.R = 0.5;
    p.L = L;
    p.w = w;
    p.pop_size = pop;
    p.t_max = 3000;
    p.seed = 20240817;
    p.avg_sweeps = 300;
    p.blocks = 50;
    return p;
}

TrialStats encode_point(int l, int L, int w, int n, double beta, DecimationRule rule,
                        double delta, int trials, uint64_t seed) {
    EnsembleParams p;
    p.l = l;
    p.R = 0.5;
    p.L = L;
    p.w = w;
    p.n = n;
    p.seed = seed;
    DecimationConfig cfg;
    cfg.beta = beta;
    cfg.rule = rule;
    cfg.delta = delta;
    return run_trials(p, cfg, trials, 1);
}

struct SweepResult {
    double argmin_beta = 0.0;
    double min_d = 1e300;
    double min_d_err = 0.0;
};

SweepResult argmin_sweep(int l, int L, int w, int n, double b0, double b1, double step,
                         DecimationRule rule, double delta, int trials, uint64_t seed,
                         const char* tag) {
    SweepResult r;
    for (double b = b0; b <= b1 + 1e-9; b += step) {
        TrialStats st = encode_point(l, L, w, n, b, rule, delta, trials, seed);
        note(fmt(std::string(std::string(tag) + " beta=%.3f D=%.5f +- %.5f").c_str(), b,
                 st.mean_distortion, st.stderr_distortion));
        if (st.mean_distortion < r.min_d) {
            r.min_d = st.mean_distortion;
            r.min_d_err = st.stderr_distortion;
            r.argmin_beta = b;
        }
    }
    return r;
}

} // namespace

TEST_CASE("criterion-1: uncoupled thresholds from population dynamics") {
    Reporter rep{1};
    struct Row {
        int l;
        double bd, bc;
        GridSpec grid;
    };
    std::vector<Row> rows{{3, 0.883, 0.940, {0.85, 0.99, 0.02}},
                          {5, 0.832, 1.032, {0.78, 1.10, 0.04}}};
    for (const Row& row : rows) {
        CavityParams p = cavity_base(row.l, 1, 1, 30000);
        Thresholds th = find_thresholds(p, row.grid, 0.004);
        rep.line(std::fabs(th.beta_d - row.bd) <= 0.01,
                 fmt((std::string("l=") + std::to_string(row.l) +
                      " beta_d=%.4f (target %.3f +- 0.01)")
                         .c_str(),
                     th.beta_d, row.bd));
        rep.line(std::fabs(th.beta_c - row.bc) <= 0.01,
                 fmt((std::string("l=") + std::to_string(row.l) +
                      " beta_c=%.4f (target %.3f +- 0.01)")
                         .c_str(),
                     th.beta_c, row.bc));
    }
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-2: coupled thresholds saturate toward beta_c") {
    Reporter rep{2};
    GridSpec grid{0.975, 1.075, 0.02};
    double tol = 0.004;
    const double beta_c_uncoupled = 1.032;  // w = 1 condensation value
    const double beta_d_uncoupled = 0.832;

    CavityParams p64 = cavity_base(5, 64, 3, 1000);
    Thresholds th64 = find_thresholds(p64, grid, tol);
    rep.line(std::fabs(th64.beta_d - 1.030) <= 0.01,
             fmt("L=64 w=3 beta_d=%.4f (target 1.030 +- 0.01)", th64.beta_d));
    rep.line(th64.beta_d > beta_d_uncoupled,
             fmt("beta_d(coupled)=%.4f above beta_d(uncoupled)=%.3f", th64.beta_d,
                 beta_d_uncoupled));
    rep.line(std::fabs(th64.beta_d - beta_c_uncoupled) <= 0.01,
             fmt("beta_d(coupled)=%.4f within 0.01 of beta_c(w=1)=%.3f", th64.beta_d,
                 beta_c_uncoupled));

    struct Saturation {
        int w;
        double target;
    };
    for (const Saturation& s : {Saturation{2, 1.028}, Saturation{3, 1.029}, Saturation{4, 1.030}}) {
        CavityParams p = cavity_base(5, 128, s.w, 1000);
        Thresholds th = find_thresholds(p, grid, tol);
        rep.line(std::fabs(th.beta_d - s.target) <= 0.01,
                 fmt((std::string("L=128 w=") + std::to_string(s.w) +
                      " beta_d=%.4f (target %.3f +- 0.01)")
                         .c_str(),
                     th.beta_d, s.target));
    }
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-3: large-degree closed-form identities") {
    Reporter rep{3};
    double root = large_degree_beta_c(0.5);
    double bsh = beta_sh(0.5);
    rep.line(std::fabs(root - bsh) < 1e-3,
             fmt("complexity root %.6f equals beta_sh %.6f within 1e-3", root, bsh));
    double sigma = large_degree_complexity(0.5, 0.5);
    rep.line(std::fabs(sigma - 0.23564) < 1e-4,
             fmt("Sigma(0.5, R=0.5)=%.6f equals 0.23564 within 1e-4", sigma));
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-4: full and simplified complexity routes agree") {
    Reporter rep{4};
    CavityParams p = cavity_base(5, 1, 1, 30000);
    p.beta = 0.9;

    SimplifiedDE sde(p);
    DEStatus sst = sde.run();
    note(fmt("simplified DE: sweeps=%.0f mean|tanh|=%.4f", sst.sweeps, sst.mean_abs_tanh));
    ComplexityAccumulator acc(p);
    for (int s = 0; s < p.avg_sweeps; ++s) {
        sde.sweep();
        acc.add_snapshot(sde.population());
    }
    ComplexityResult simp = acc.finalize();
    note(fmt("simplified Sigma=%.6f +- %.6f", simp.sigma, simp.sigma_err));

    FieldsDE fields(p);
    DEStatus fst = fields.run();
    note(fmt("fields DE: sweeps=%.0f mean|tanh|=%.6f trivial=%.0f", fst.sweeps,
             fst.mean_abs_tanh, fst.trivial ? 1.0 : 0.0));
    ConditionalsDE cde(p, fields.population());
    DEStatus cst = cde.run();
    note(fmt("conditional DE: sweeps=%.0f mean|tanh+|=%.4f", cst.sweeps, cst.mean_abs_tanh));

    Welford sig;
    double err2 = 0.0;
    const int batches = 10;
    for (int k = 0; k < batches; ++k) {
        cde.sweep();
        ComplexityResult full = complexity_full(cde.population(), p, 60000, 300 + k);
        sig.add(full.sigma);
        err2 += full.sigma_err * full.sigma_err;
    }
    double full_err = std::max(std::sqrt(err2) / batches, sig.std_error());
    double comb = std::sqrt(full_err * full_err + simp.sigma_err * simp.sigma_err);
    note(fmt("full Sigma=%.6f +- %.6f", sig.mean, full_err));
    rep.line(std::fabs(sig.mean - simp.sigma) <= 3.0 * comb,
             fmt("|full - simplified| = %.6f within 3 sigma = %.6f",
                 std::fabs(sig.mean - simp.sigma), 3.0 * comb));
    rep.line(simp.sigma > 0.0, fmt("Sigma(0.9) positive between the thresholds: %.6f",
                                   simp.sigma));
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-5: BPGD optimal-beta anchors at N = 128000") {
    Reporter rep{5};
    const int trials = 20;
    const double delta = 0.01;
    SweepResult un = argmin_sweep(5, 1, 1, 128000, 0.51, 1.01, 0.05, DecimationRule::Hard,
                                  delta, trials, 515151, "uncoupled");
    rep.line(std::fabs(un.argmin_beta - 0.71) <= 0.05,
             fmt("uncoupled argmin beta=%.2f (target 0.71 +- 0.05)", un.argmin_beta));
    SweepResult cou = argmin_sweep(5, 64, 3, 2000, 0.78, 1.28, 0.05, DecimationRule::Hard,
                                   delta, trials, 626262, "coupled");
    rep.line(std::fabs(cou.argmin_beta - 1.03) <= 0.05,
             fmt("coupled argmin beta=%.2f (target 1.03 +- 0.05)", cou.argmin_beta));
    double gap = un.min_d - cou.min_d;
    double sigma = std::sqrt(un.min_d_err * un.min_d_err + cou.min_d_err * cou.min_d_err);
    rep.line(gap > 3.0 * sigma,
             fmt("coupled D=%.5f below uncoupled D=%.5f by %.5f > 3 sigma=%.5f", cou.min_d,
                 un.min_d, gap, 3.0 * sigma));
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-6: rate-distortion ordering across check degrees") {
    Reporter rep{6};
    const int trials = 20;
    const double delta = 0.01;
    const double beta = beta_sh(0.5);
    const double dsh = shannon_distortion(0.5);
    double cou_d[3], cou_e[3], un_d[3], un_e[3];
    for (int i = 0; i < 3; ++i) {
        int l = 3 + i;
        TrialStats c = encode_point(l, 64, 3, 2000, beta, DecimationRule::Randomized, delta,
                                    trials, 700 + l);
        cou_d[i] = c.mean_distortion;
        cou_e[i] = c.stderr_distortion;
        note(fmt((std::string("coupled l=") + std::to_string(l) + " D=%.5f +- %.5f").c_str(),
                 c.mean_distortion, c.stderr_distortion));
        TrialStats u = encode_point(l, 1, 1, 128000, beta, DecimationRule::Randomized, delta,
                                    trials, 800 + l);
        un_d[i] = u.mean_distortion;
        un_e[i] = u.stderr_distortion;
        note(fmt((std::string("uncoupled l=") + std::to_string(l) + " D=%.5f +- %.5f").c_str(),
                 u.mean_distortion, u.stderr_distortion));
    }
    for (int i = 0; i < 2; ++i) {
        double sig = 3.0 * std::sqrt(cou_e[i] * cou_e[i] + cou_e[i + 1] * cou_e[i + 1]);
        rep.line(cou_d[i] - cou_d[i + 1] > sig,
                 fmt((std::string("coupled D(l=") + std::to_string(3 + i) + ") - D(l=" +
                      std::to_string(4 + i) + ") = %.5f > 3 sigma = %.5f")
                         .c_str(),
                     cou_d[i] - cou_d[i + 1], sig));
        double sigu = 3.0 * std::sqrt(un_e[i] * un_e[i] + un_e[i + 1] * un_e[i + 1]);
        rep.line(un_d[i + 1] - un_d[i] > sigu,
                 fmt((std::string("uncoupled D(l=") + std::to_string(4 + i) + ") - D(l=" +
                      std::to_string(3 + i) + ") = %.5f > 3 sigma = %.5f")
                         .c_str(),
                     un_d[i + 1] - un_d[i], sigu));
    }
    for (int i = 0; i < 3; ++i) {
        rep.line(cou_d[i] >= dsh - 2.0 * cou_e[i], fmt("coupled point %.5f above the Shannon "
                                                       "floor %.5f",
                                                       cou_d[i], dsh));
        rep.line(un_d[i] >= dsh - 2.0 * un_e[i],
                 fmt("uncoupled point %.5f above the Shannon floor %.5f", un_d[i], dsh));
    }
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-7: randomized rule tracks the internal-energy curve") {
    Reporter rep{7};
    const int trials = 20;
    const double delta = 0.005;
    for (double beta : {0.2, 0.45, 0.7}) {
        TrialStats st = encode_point(5, 1, 1, 32000, beta, DecimationRule::Randomized, delta,
                                     trials, 910);
        double ref = 0.5 * internal_energy(beta);
        rep.line(std::fabs(st.mean_distortion - ref) < 0.01,
                 fmt("uncoupled beta=%.2f |D - u/2| = %.5f < 0.01", beta,
                     std::fabs(st.mean_distortion - ref)));
    }
    for (double beta : {0.2, 0.45, 0.7, 0.95}) {
        TrialStats st = encode_point(5, 64, 3, 500, beta, DecimationRule::Randomized, delta,
                                     trials, 920);
        double ref = 0.5 * internal_energy(beta);
        rep.line(std::fabs(st.mean_distortion - ref) < 0.01,
                 fmt("coupled beta=%.2f |D - u/2| = %.5f < 0.01", beta,
                     std::fabs(st.mean_distortion - ref)));
    }
    rep.done();
    CHECK(rep.all);
}

TEST_CASE("criterion-8: always-on oracle suites") {
    Reporter rep{8};

    // BP marginals equal the exhaustive oracle on 50 random trees
    {
        int trees = 0;
        double worst = 0.0;
        for (uint64_t seed = 1; trees < 50; ++seed) {
            FactorGraph g = testutil::random_tree(4 + seed % 9, seed * 131 + 7);
            if (g.num_codebits() > 12) continue;
            ++trees;
            auto x = sample_source(g.num_checks(), seed);
            double beta = 0.4 + 0.11 * static_cast<double>(seed % 11);
            MessageState st = MessageState::zero_init(g, x, beta);
            for (int round = 0; round < 2 * g.num_codebits() + 6; ++round) iterate_round(g, st);
            BiasVector b = compute_biases(g, st);
            auto oracle = exact_marginal_oracle(g, x, beta);
            for (int i = 0; i < g.num_codebits(); ++i)
                worst = std::max(worst,
                                 std::fabs(bp_marginal(b.eta[i], beta).first - oracle[i].first));
        }
        rep.line(worst <= 1e-8, fmt("tree marginals: worst |BP - exact| = %.2e <= 1e-8", worst));
    }

    // BPGD never beats the exhaustive optimum (100 instances, M <= 16)
    {
        int done = 0;
        bool ok = true;
        for (uint64_t s = 1; done < 100; ++s) {
            EnsembleParams p;
            p.l = 3;
            p.R = 0.5;
            p.n = 24 + static_cast<int>(s % 9);
            p.seed = s * 7 + 1;
            FactorGraph g = sample_underlying(p);
            if (g.num_codebits() > 16) continue;
            ++done;
            auto x = sample_source(g.num_checks(), s + 5000);
            auto opt = exhaustive_optimal(g, x);
            DecimationConfig cfg;
            cfg.beta = 0.7 + 0.06 * static_cast<double>(s % 10);
            cfg.rule = s % 2 ? DecimationRule::Hard : DecimationRule::Randomized;
            cfg.seed = s;
            ok &= run_bpgd(g, x, cfg).distortion >= opt.distortion - 1e-15;
        }
        rep.line(ok, "oracle domination on 100 instances with M <= 16");
    }

    // channel symmetry of the simplified DE at every 100th sweep
    {
        CavityParams p = cavity_base(5, 1, 1, 10000);
        p.beta = 0.9;
        p.t_max = 420;
        p.conv_window = 1000;
        SimplifiedDE de(p);
        bool ok = true;
        int checks = 0;
        de.run([&](int sweep, const ScalarPopulation& pop) {
            if (sweep % 100 != 0) return;
            ++checks;
            for (double c : {0.2, 0.5, 0.8}) {
                Welford w;
                for (double v : pop.chk[0])
                    w.add((v < -c ? 1.0 : 0.0) - (v > c ? std::exp(-2.0 * p.beta * v) : 0.0));
                ok &= std::fabs(w.mean) < 5.0 * w.std_error() + 1e-12;
            }
        });
        rep.line(ok && checks >= 4,
                 fmt("channel symmetry within 5 MC sigma at %.0f checkpoints",
                     static_cast<double>(checks)));
    }

    // |eta_hat| <= 1 exactly, everywhere
    {
        bool ok = true;
        Rng rng(17);
        for (int t = 0; t < 5000; ++t) {
            int k = 1 + static_cast<int>(rng.uniform_index(6));
            std::vector<double> in(k);
            for (auto& v : in) v = rng.uniform(-80.0, 80.0);
            ok &= std::fabs(check_update(in.data(), k, rng.sign(), rng.uniform(0.01, 20.0))) <=
                  1.0;
        }
        CavityParams p = cavity_base(5, 4, 2, 400);
        p.beta = 1.05;
        p.t_max = 60;
        SimplifiedDE de(p);
        for (int s = 0; s < 60; ++s) {
            de.sweep();
            for (const auto& v : de.population().chk)
                for (double x : v) ok &= std::fabs(x) <= 1.0;
        }
        rep.line(ok, "check messages bounded by 1 exactly");
    }

    // the zero point mass is preserved exactly
    {
        CavityParams p = cavity_base(5, 1, 1, 500);
        p.beta = 0.9;
        ScalarPopulation zeros;
        zeros.var.assign(p.var_positions(), std::vector<double>(p.pop_size, 0.0));
        zeros.chk.assign(p.L, std::vector<double>(p.pop_size, 0.0));
        bool ok = true;
        FieldsDE fde(p);
        fde.set_population(zeros);
        fde.sweep();
        for (const auto& v : fde.population().chk)
            for (double x : v) ok &= x == 0.0;
        for (const auto& v : fde.population().var)
            for (double x : v) ok &= x == 0.0;
        SimplifiedDE sde(p);
        sde.set_population(zeros);
        sde.sweep();
        for (const auto& v : sde.population().chk)
            for (double x : v) ok &= x == 0.0;
        rep.line(ok, "point mass at zero is an exact fixed point");
    }

    rep.done();
    CHECK(rep.all);
}
