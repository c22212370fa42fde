#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "core/cavity.hpp"
#include "core/mathutil.hpp"
#include "test_util.hpp"

using namespace scldgm;

TEST_CASE("closed forms: free and internal energy") {
    CHECK(free_energy_simplified(1.0, 0.5) == doctest::Approx(0.219646).epsilon(1e-5));
    CHECK(free_energy_simplified(2.0, 1.0) ==
          doctest::Approx(-std::log1p(std::exp(-4.0)) / 2.0).epsilon(1e-13));
    CHECK(internal_energy(0.0) == 1.0);
    CHECK(0.5 * internal_energy(1.0) == doctest::Approx(0.119203).epsilon(1e-5));
    // d/dbeta (beta f) equals 1 - tanh(beta), by central differences
    for (double beta : {0.4, 0.9, 1.3}) {
        double h = 1e-5;
        double d = ((beta + h) * free_energy_simplified(beta + h, 0.5) -
                    (beta - h) * free_energy_simplified(beta - h, 0.5)) /
                   (2.0 * h);
        CHECK(d == doctest::Approx(internal_energy(beta)).epsilon(1e-6));
    }
    // large-degree mode: flat at 2 D_sh beyond beta_sh
    CHECK(0.5 * internal_energy_large_degree(2.0, 0.5) ==
          doctest::Approx(0.1100).epsilon(2e-3));
    CHECK(internal_energy_large_degree(0.5, 0.5) == internal_energy(0.5));
}

TEST_CASE("closed forms: Shannon curve and test-channel parameter") {
    CHECK(shannon_distortion(0.5) == doctest::Approx(0.1100).epsilon(5e-4));
    CHECK(beta_sh(0.5) == doctest::Approx(1.0452282535441407).epsilon(1e-10));
    CHECK(shannon_distortion(0.999) < 2e-4 + 1e-3);
    CHECK(shannon_distortion(0.9999) < shannon_distortion(0.99));
    CHECK_THROWS_AS(shannon_distortion(0.0), std::invalid_argument);
    CHECK_THROWS_AS(shannon_distortion(1.0), std::invalid_argument);
    CHECK_THROWS_AS(beta_sh(-0.1), std::invalid_argument);
}

TEST_CASE("closed forms: large-degree complexity and its root") {
    CHECK(large_degree_complexity(0.5, 0.5) == doctest::Approx(0.23563).epsilon(5e-5));
    CHECK(large_degree_complexity(0.0, 1.0) == doctest::Approx(M_LN2).epsilon(1e-12));
    double root = large_degree_beta_c(0.5);
    CHECK(root == doctest::Approx(beta_sh(0.5)).epsilon(1e-8));
    CHECK(std::fabs(large_degree_complexity(root, 0.5)) < 1e-10);
}

TEST_CASE("nu1 sampling: fair at beta = 0, pinned at saturated fields") {
    Rng rng(4);
    std::vector<double> h{0.7, -1.2, 0.4, 2.0};
    int plus = 0;
    int n = 40000;
    for (int t = 0; t < n; ++t) {
        auto s = sample_nu1(1, 1, h, 0.0, rng);
        for (int8_t v : s) plus += v > 0;
    }
    double frac = static_cast<double>(plus) / (4.0 * n);
    CHECK(std::fabs(frac - 0.5) < 0.01);

    std::vector<double> big{200.0, 300.0, 250.0};
    for (int t = 0; t < 50; ++t) {
        auto s = sample_nu1(-1, 1, big, 1.0, rng);
        for (int8_t v : s) CHECK(v == 1);
    }
}

TEST_CASE("nu1 sampling matches the enumerated table for l = 3") {
    // k = 2 spins; enumerate nu1 directly from its definition
    double beta = 0.9;
    double tb = std::tanh(beta);
    std::vector<double> h{0.8, -0.5};
    for (int c : {1, -1}) {
        double t1 = std::tanh(beta * h[0]), t2 = std::tanh(beta * h[1]);
        double table[2][2];
        double norm = 0.0;
        for (int s1 : {0, 1})
            for (int s2 : {0, 1}) {
                double sp1 = s1 ? 1.0 : -1.0, sp2 = s2 ? 1.0 : -1.0;
                double wgt = (1.0 + c * tb * sp1 * sp2) * 0.25 * (1.0 + sp1 * t1) *
                             (1.0 + sp2 * t2);
                table[s1][s2] = wgt;
                norm += wgt;
            }
        long long counts[2][2] = {{0, 0}, {0, 0}};
        Rng rng(100 + c);
        int n = 100000;
        for (int t = 0; t < n; ++t) {
            auto s = sample_nu1(c, 1, h, beta, rng);
            counts[s[0] > 0][s[1] > 0]++;
        }
        for (int s1 : {0, 1})
            for (int s2 : {0, 1}) {
                double p = table[s1][s2] / norm;
                double got = static_cast<double>(counts[s1][s2]) / n;
                double sigma = std::sqrt(p * (1.0 - p) / n);
                CHECK(std::fabs(got - p) < 3.5 * sigma + 1e-9);
            }
    }
}

namespace {

CavityParams small_params(double beta, int pop = 2000) {
    CavityParams p;
    p.l = 5;
    p.R = 0.5;
    p.beta = beta;
    p.pop_size = pop;
    p.t_max = 1500;
    p.seed = 12345;
    return p;
}

ScalarPopulation zero_population(const CavityParams& p) {
    ScalarPopulation z;
    z.var.assign(p.var_positions(), std::vector<double>(p.pop_size, 0.0));
    z.chk.assign(p.L, std::vector<double>(p.pop_size, 0.0));
    return z;
}

} // namespace

TEST_CASE("point mass at zero is an exact fixed point of both scalar systems") {
    CavityParams p = small_params(0.9, 500);
    SimplifiedDE de(p);
    de.set_population(zero_population(p));
    de.sweep();
    for (const auto& v : de.population().chk)
        for (double x : v) CHECK(x == 0.0);
    for (const auto& v : de.population().var)
        for (double x : v) CHECK(x == 0.0);

    FieldsDE fde(p);
    fde.set_population(zero_population(p));
    fde.sweep();
    for (const auto& v : fde.population().chk)
        for (double x : v) CHECK(x == 0.0);
    for (const auto& v : fde.population().var)
        for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("beta = 0 collapses the populations in one sweep") {
    CavityParams p = small_params(0.0, 500);
    SimplifiedDE de(p);
    de.sweep();
    for (const auto& v : de.population().chk)
        for (double x : v) CHECK(x == 0.0);
    DEStatus st = SimplifiedDE(p).run();
    CHECK(st.trivial);
    CHECK(st.sweeps <= 3);
}

TEST_CASE("check-side samples stay inside [-1, 1]") {
    CavityParams p = small_params(1.1, 500);
    p.t_max = 40;
    SimplifiedDE de(p);
    for (int s = 0; s < 40; ++s) {
        de.sweep();
        for (const auto& v : de.population().chk)
            for (double x : v) CHECK(std::fabs(x) <= 1.0);
    }
}

TEST_CASE("simplified DE: subcritical beta collapses, supercritical survives") {
    // l = 5, R = 0.5: the dynamical threshold sits near 0.83
    DEStatus low = SimplifiedDE(small_params(0.70)).run();
    CHECK(low.trivial);
    DEStatus high = SimplifiedDE(small_params(0.90)).run();
    CHECK(!high.trivial);
    CHECK(high.mean_abs_tanh > 1e-3);
}

TEST_CASE("fields DE: uniform initial condition decays to the trivial point") {
    CavityParams p = small_params(0.5, 1000);
    p.t_max = 2000;
    FieldsDE de(p);
    DEStatus st = de.run();
    CHECK(st.trivial);
    // the field density stays symmetric on the way down (sampled before the
    // quartic contraction flattens everything onto zero)
    CavityParams p2 = small_params(0.9, 4000);
    p2.t_max = 30;
    FieldsDE de2(p2);
    de2.sweep();
    de2.sweep();
    std::vector<double> pop = de2.population().chk[0];
    double spread = 0.0;
    for (double v : pop) spread += std::fabs(v);
    CHECK(spread / pop.size() > 1e-3);
    std::vector<double> neg(pop);
    for (auto& v : neg) v = -v;
    double d = testutil::ks_statistic(pop, neg);
    CHECK(d < testutil::ks_critical(pop.size(), neg.size(), 0.001));
}

TEST_CASE("simplified DE: channel symmetry holds along the iteration") {
    CavityParams p = small_params(0.9, 5000);
    p.t_max = 320;
    p.conv_window = 1000;  // disable early convergence so checkpoints fire
    SimplifiedDE de(p);
    int checked = 0;
    de.run([&](int sweep, const ScalarPopulation& pop) {
        if (sweep % 100 != 0) return;
        ++checked;
        for (double c : {0.2, 0.5, 0.8}) {
            Welford w;
            for (double v : pop.chk[0]) {
                double x = (v < -c ? 1.0 : 0.0) -
                           (v > c ? std::exp(-2.0 * p.beta * v) : 0.0);
                w.add(x);
            }
            CHECK(std::fabs(w.mean) < 5.0 * w.std_error() + 1e-12);
        }
    });
    CHECK(checked >= 3);
}

TEST_CASE("large degrees: check population concentrates at +-1 with test-channel weights") {
    CavityParams p;
    p.l = 20;
    p.R = 0.5;
    p.beta = 1.0;
    p.pop_size = 20000;
    p.t_max = 60;
    p.conv_window = 100;
    p.seed = 777;
    SimplifiedDE de(p);
    double bound_plus = std::exp(2.0) / (1.0 + std::exp(2.0)) * 0.95;
    // the minus-side mass is small (~0.119); leave statistical headroom
    double bound_minus = 1.0 / (1.0 + std::exp(2.0)) * 0.90;
    for (int s = 0; s < 60; ++s) {
        de.sweep();
        if (s % 10 != 9) continue;
        long long hi = 0, lo = 0;
        const auto& chk = de.population().chk[0];
        for (double v : chk) {
            if (v >= 0.95) ++hi;
            if (v <= -0.95) ++lo;
        }
        CHECK(static_cast<double>(hi) / chk.size() > bound_plus);
        CHECK(static_cast<double>(lo) / chk.size() > bound_minus);
    }
}

TEST_CASE("complexity of the exact trivial population is exactly zero") {
    CavityParams p = small_params(0.9, 500);
    ComplexityResult r = complexity_simplified(zero_population(p), p);
    CHECK(r.sigma == 0.0);
    CHECK(r.f == doctest::Approx(free_energy_simplified(0.9, 0.5)).epsilon(1e-13));
}

TEST_CASE("full complexity on all-zero triples reproduces the closed-form free energy") {
    CavityParams p = small_params(0.9, 500);
    TriplePopulation z;
    z.var_h.assign(p.var_positions(), std::vector<double>(p.pop_size, 0.0));
    z.var_p = z.var_m = z.var_h;
    z.chk_h.assign(p.L, std::vector<double>(p.pop_size, 0.0));
    z.chk_p = z.chk_m = z.chk_h;
    ComplexityResult r = complexity_full(z, p, 4000);
    CHECK(r.sigma == 0.0);
    CHECK(r.f == doctest::Approx(free_energy_simplified(p.beta, p.R)).epsilon(1e-12));
    CHECK(r.phi_int == doctest::Approx(r.f).epsilon(1e-12));
}

TEST_CASE("conditional DE: zero fields keep the +- branch mirror symmetry") {
    CavityParams p = small_params(0.9, 3000);
    p.t_max = 25;
    ConditionalsDE de(p, zero_population(p));
    for (int s = 0; s < 12; ++s) de.sweep();
    std::vector<double> plus = de.population().chk_p[0];
    std::vector<double> minus = de.population().chk_m[0];
    for (auto& v : minus) v = -v;
    double d = testutil::ks_statistic(plus, minus);
    CHECK(d < testutil::ks_critical(plus.size(), minus.size(), 0.001));
}

TEST_CASE("conditional DE: beta = 0 collapses the eta branches in one sweep") {
    CavityParams p = small_params(0.0, 500);
    ConditionalsDE de(p, zero_population(p));
    de.sweep();
    for (const auto& v : de.population().chk_p)
        for (double x : v) CHECK(x == 0.0);
    for (const auto& v : de.population().chk_m)
        for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("conditional DE keeps a nontrivial branch between the thresholds") {
    CavityParams p = small_params(0.9, 2000);
    p.t_max = 400;
    FieldsDE fields(p);
    fields.run();
    ConditionalsDE de(p, fields.population());
    DEStatus st = de.run();
    CHECK(!st.trivial);
    CHECK(st.mean_abs_tanh > 0.05);
}

TEST_CASE("full and simplified complexity agree on a desk-size run") {
    CavityParams p = small_params(0.9, 4000);
    p.avg_sweeps = 120;
    SimplifiedDE sde(p);
    DEStatus sst = sde.run();
    REQUIRE(!sst.trivial);
    ComplexityAccumulator acc(p);
    for (int s = 0; s < p.avg_sweeps; ++s) {
        sde.sweep();
        acc.add_snapshot(sde.population());
    }
    ComplexityResult simp = acc.finalize();

    FieldsDE fields(p);
    fields.run();
    ConditionalsDE cde(p, fields.population());
    DEStatus cst = cde.run();
    REQUIRE(!cst.trivial);
    Welford sig;
    double err2 = 0.0;
    for (int k = 0; k < 6; ++k) {
        cde.sweep();
        ComplexityResult full = complexity_full(cde.population(), p, 30000, 100 + k);
        sig.add(full.sigma);
        err2 += full.sigma_err * full.sigma_err;
    }
    double full_err = std::max(std::sqrt(err2) / 6.0, sig.std_error());
    double comb = std::sqrt(full_err * full_err + simp.sigma_err * simp.sigma_err);
    CHECK(std::fabs(sig.mean - simp.sigma) < 5.0 * comb + 2e-3);
    CHECK(simp.sigma > 0.0);  // between beta_d and beta_c
}

TEST_CASE("scan points are deterministic") {
    CavityParams p = small_params(0.95, 1000);
    p.avg_sweeps = 40;
    ScanPoint a = evaluate_scan_point(p);
    ScanPoint b = evaluate_scan_point(p);
    CHECK(a.sigma == b.sigma);
    CHECK(a.sigma_err == b.sigma_err);
    CHECK(a.trivial == b.trivial);
}

TEST_CASE("threshold finder brackets both transitions at desk scale") {
    CavityParams p = small_params(1.0, 2500);
    p.t_max = 1200;
    p.avg_sweeps = 120;
    GridSpec grid{0.78, 1.12, 0.04};
    Thresholds th = find_thresholds(p, grid, 0.02);
    CHECK(th.beta_d > 0.78);
    CHECK(th.beta_d < 0.90);
    CHECK(th.beta_c > 0.95);
    CHECK(th.beta_c < 1.12);
    CHECK(th.beta_d <= th.beta_c);
    CHECK(th.beta_d_bracket <= 0.02 + 1e-12);
    // complexity is non-increasing along the nontrivial branch
    const std::vector<ScanPoint>& scan = th.scan;
    for (size_t k = 1; k < scan.size(); ++k) {
        if (scan[k - 1].trivial || scan[k].trivial) continue;
        CHECK(scan[k].sigma <=
              scan[k - 1].sigma + 5.0 * (scan[k].sigma_err + scan[k - 1].sigma_err) + 1e-4);
    }
}

TEST_CASE("threshold finder reports a diagnostic scan when the grid misses") {
    CavityParams p = small_params(0.5, 600);
    p.t_max = 400;
    GridSpec grid{0.40, 0.55, 0.05};  // everything trivial down here
    try {
        find_thresholds(p, grid, 0.02);
        FAIL("expected BracketError");
    } catch (const BracketError& e) {
        CHECK(e.scan.size() >= 3);
        for (const auto& s : e.scan) CHECK(s.trivial);
    }
}

TEST_CASE("population snapshots round-trip") {
    CavityParams p = small_params(0.9, 300);
    p.L = 1;
    SimplifiedDE de(p);
    for (int s = 0; s < 5; ++s) de.sweep();
    std::string path = "test_pop_snapshot.bin";
    save_population(de.population(), p, path);
    CavityParams q;
    ScalarPopulation loaded = load_population(path, &q);
    CHECK(q.l == p.l);
    CHECK(q.beta == p.beta);
    CHECK(q.pop_size == p.pop_size);
    REQUIRE(loaded.var.size() == de.population().var.size());
    CHECK(loaded.var == de.population().var);
    CHECK(loaded.chk == de.population().chk);
    std::remove(path.c_str());
}
