#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace scldgm {

struct CavityParams {
    int l = 5;
    double R = 0.5;
    int L = 1, w = 1;       // L = w = 1 selects the underlying ensemble
    double beta = 1.0;
    int pop_size = 1000;    // samples per position
    int t_max = 3000;       // hard cap on sweeps
    uint64_t seed = 0;
    uint64_t stream = 0;
    // Finite stand-in for point masses at +-infinity: large enough that
    // tanh(beta * cap) is 1 to machine precision. <= 0 selects 60/beta.
    double saturation_cap = 0.0;
    // Convergence: first two moments of tanh(beta eta_hat) per position move
    // by less than conv_tol over conv_window sweeps.
    int conv_window = 50;
    double conv_tol = 1e-4;
    // Fixed point counts as nontrivial when E|tanh(beta eta_hat)| exceeds
    // this and the complexity estimate clears 3 standard errors.
    double trivial_tol = 1e-3;
    int avg_sweeps = 200;   // extra sweeps pooled into functional estimates
    int blocks = 50;        // jackknife blocks

    void validate() const;
    double cap() const;
    int var_positions() const { return L + w - 1; }
    double poisson_mean() const { return static_cast<double>(l) / R; }
};

// Position-indexed sample arrays for the scalar densities: var[z] holds the
// code-bit-side samples at position z (0-based, L+w-1 of them), chk[z] the
// check-side samples (L of them). Check-side values lie in [-1, 1].
// Out-of-range positions act as a point mass at zero.
struct ScalarPopulation {
    std::vector<std::vector<double>> var, chk;
};

// Joint (h, eta+, eta-) samples; the components of one triple stay correlated
// through the sweeps.
struct TriplePopulation {
    std::vector<std::vector<double>> var_h, var_p, var_m;
    std::vector<std::vector<double>> chk_h, chk_p, chk_m;
};

struct DEStatus {
    bool trivial = false;
    bool converged = false;  // moment-stability rule fired before t_max
    int sweeps = 0;
    double mean_abs_tanh = 0.0;  // pooled E|tanh(beta eta_hat)| at exit
};

using SweepObserver = std::function<void(int sweep, const ScalarPopulation&)>;

// Density evolution of the coupled LDGM ensemble over a test-BSC with
// half-log-likelihood beta: code-bit side sums r ~ Poisson(l/R) incoming
// check samples drawn within the window, check side applies the
// J beta^{-1} atanh(tanh(beta) prod tanh(beta eta)) kernel with J drawn from
// (1 + J tanh(beta))/2. Initial code-bit density is a point mass at +cap.
class SimplifiedDE {
public:
    explicit SimplifiedDE(const CavityParams& p);
    DEStatus run(const SweepObserver& observer = nullptr);
    void sweep();
    const ScalarPopulation& population() const { return pop_; }
    // replaces the state (shape-checked) and refreshes the tanh caches
    void set_population(const ScalarPopulation& pop);
    const CavityParams& params() const { return p_; }
    // pooled E|tanh(beta eta_hat)| of the last completed sweep
    double pooled_mean_abs_tanh() const { return pooled_abs_; }
    int sweeps_done() const { return sweeps_; }

private:
    void update_check_side();
    void update_var_side();
    bool moments_stable() const;

    CavityParams p_;
    ScalarPopulation pop_;
    std::vector<std::vector<double>> var_tanh_;  // tanh(beta * var sample)
    Rng rng_;
    std::poisson_distribution<int> pois_;
    int sweeps_ = 0;
    double pooled_abs_ = 0.0;
    // moment history ring: per sweep, per check position (m1, m2)
    std::vector<std::vector<std::pair<double, double>>> moment_ring_;
};

// Field equations solved by population dynamics: same graph-side kernels but
// with a fair source sign, uniform [-1,1] initial check density. The trivial
// point mass at zero is an exact fixed point.
class FieldsDE {
public:
    explicit FieldsDE(const CavityParams& p);
    DEStatus run();
    void sweep();
    const ScalarPopulation& population() const { return pop_; }
    void set_population(const ScalarPopulation& pop);
    double pooled_mean_abs_tanh() const { return pooled_abs_; }

private:
    void update_var_side();
    void update_check_side();
    bool moments_stable() const;

    CavityParams p_;
    ScalarPopulation pop_;
    std::vector<std::vector<double>> var_tanh_;
    Rng rng_;
    std::poisson_distribution<int> pois_;
    int sweeps_ = 0;
    double pooled_abs_ = 0.0;
    std::vector<std::vector<std::pair<double, double>>> moment_ring_;
};

// Conditional-density equations: triples evolve jointly, spins are sampled
// from the parity-tilted product measure, eta components start at +-cap.
class ConditionalsDE {
public:
    ConditionalsDE(const CavityParams& p, const ScalarPopulation& fields);
    DEStatus run();
    void sweep();
    const TriplePopulation& population() const { return pop_; }
    double pooled_mean_abs_tanh() const { return pooled_abs_; }

private:
    void update_check_side();
    void update_var_side();
    bool moments_stable() const;

    CavityParams p_;
    TriplePopulation pop_;
    // tanh caches aligned with pop_ samples
    std::vector<std::vector<double>> var_th_, var_tp_, var_tm_;
    Rng rng_;
    std::poisson_distribution<int> pois_;
    int sweeps_ = 0;
    double pooled_abs_ = 0.0;
    std::vector<std::vector<std::pair<double, double>>> moment_ring_;
};

// Exact sample from nu1(s_1..s_k) proportional to
// (1 + c tanh(beta) prod_i s_i) prod_i (1 + s_i tanh(beta h_i))/2, c = +-1.
// tanh_h holds tanh(beta h_i). Sequential conditional sampling, O(k).
void sample_nu1_tanh(int k, int c, const double* tanh_h, double tanh_beta, Rng& rng,
                     int8_t* spins_out);
// Spec-facing wrapper: conditioning value is J * sigma_parent.
std::vector<int8_t> sample_nu1(int sigma_parent, int J, const std::vector<double>& h_list,
                               double beta, Rng& rng);

struct ComplexityResult {
    double sigma = 0.0, sigma_err = 0.0;
    double f = 0.0, f_err = 0.0;
    double phi_int = 0.0, phi_int_err = 0.0;
    bool trivial = false;
    // per-position functional values of the last snapshot (diagnostics)
    std::vector<double> sigma_v_var, sigma_v_chk, sigma_e;
};

// Monte-Carlo estimate of the complexity functionals from a simplified-DE
// population snapshot; jackknife errors over sample-index blocks.
class ComplexityAccumulator {
public:
    ComplexityAccumulator(const CavityParams& p, uint64_t substream = 7);
    void add_snapshot(const ScalarPopulation& pop);
    ComplexityResult finalize() const;

private:
    CavityParams p_;
    Rng rng_;
    std::vector<double> block_sum_, block_cnt_;
    std::vector<double> last_sv_var_, last_sv_chk_, last_se_;
};

// One-shot complexity from a converged simplified population.
ComplexityResult complexity_simplified(const ScalarPopulation& pop, const CavityParams& p);

// Full six-density complexity: Monte-Carlo evaluation of the free and
// internal free energy functionals over converged triple populations.
ComplexityResult complexity_full(const TriplePopulation& pop, const CavityParams& p,
                                 int n_draws = 20000, uint64_t substream = 19);

// Closed forms.
double free_energy_simplified(double beta, double R);
double internal_energy(double beta);                       // 1 - tanh(beta)
double internal_energy_large_degree(double beta, double R);  // flat beyond beta_sh
double shannon_distortion(double R);                        // h2^{-1}(1-R)
double beta_sh(double R);
double large_degree_complexity(double beta, double R);
double large_degree_beta_c(double R);

struct GridSpec {
    double start = 0.5, stop = 1.5, step = 0.05;
};

struct ScanPoint {
    double beta = 0.0;
    double sigma = 0.0, sigma_err = 0.0;
    double f = 0.0, phi_int = 0.0;
    bool trivial = true;
    bool nontrivial_fp = false;  // passed both nontriviality clauses
    int sweeps = 0;
};

struct Thresholds {
    double beta_d = 0.0, beta_c = 0.0;
    double beta_d_bracket = 0.0, beta_c_bracket = 0.0;
    std::vector<ScanPoint> scan;
};

class BracketError : public std::runtime_error {
public:
    BracketError(const std::string& what, std::vector<ScanPoint> scan_points)
        : std::runtime_error(what), scan(std::move(scan_points)) {}
    std::vector<ScanPoint> scan;
};

ScanPoint evaluate_scan_point(const CavityParams& p);

// beta_d: infimum beta where the simplified DE keeps a nontrivial fixed
// point; beta_c: zero crossing of the complexity over the nontrivial branch.
// Both refined by bisection to tol. Throws BracketError with the scan
// attached when the grid fails to bracket either threshold.
Thresholds find_thresholds(const CavityParams& base, const GridSpec& grid, double tol);

// Population snapshot I/O: text header, then raw little-endian doubles.
void save_population(const ScalarPopulation& pop, const CavityParams& p, const std::string& path);
ScalarPopulation load_population(const std::string& path, CavityParams* params_out = nullptr);

} // namespace scldgm
