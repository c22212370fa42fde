#include "core/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "core/mathutil.hpp"

namespace scldgm {

void CavityParams::validate() const {
    if (l < 1) throw std::invalid_argument("cavity: l must be >= 1");
    if (!(R > 0.0) || R > 1.0) throw std::invalid_argument("cavity: R must be in (0,1]");
    if (L < 1 || w < 1 || w > L) throw std::invalid_argument("cavity: need L >= w >= 1");
    if (beta < 0.0) throw std::invalid_argument("cavity: beta must be >= 0");
    if (pop_size < 100) throw std::invalid_argument("cavity: pop_size must be >= 100");
    if (t_max < 1) throw std::invalid_argument("cavity: t_max must be >= 1");
    if (blocks < 2) throw std::invalid_argument("cavity: blocks must be >= 2");
}

double CavityParams::cap() const {
    if (saturation_cap > 0.0) return saturation_cap;
    return beta > 0.0 ? 60.0 / beta : 60.0;
}

namespace {

constexpr double kAtanhCap = 1.0 - 1e-15;

inline double ghat_from_prod(double prod, double J, double beta, double tanh_beta) {
    if (beta == 0.0) return 0.0;
    double arg = tanh_beta * prod;
    if (arg > kAtanhCap)
        arg = kAtanhCap;
    else if (arg < -kAtanhCap)
        arg = -kAtanhCap;
    double v = J * std::atanh(arg) / beta;
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

using MomentRow = std::vector<std::pair<double, double>>;

bool ring_stable(const std::vector<MomentRow>& ring, int sweeps, int window, double tol) {
    if (sweeps <= window) return false;
    int size = window + 1;
    const MomentRow& now = ring[sweeps % size];
    const MomentRow& then = ring[(sweeps - window) % size];
    for (size_t z = 0; z < now.size(); ++z) {
        if (std::fabs(now[z].first - then[z].first) >= tol) return false;
        if (std::fabs(now[z].second - then[z].second) >= tol) return false;
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// SimplifiedDE

SimplifiedDE::SimplifiedDE(const CavityParams& p)
    : p_(p), rng_(Rng::stream(p.seed, p.stream, 11)), pois_(p.poisson_mean()) {
    p_.validate();
    int VP = p_.var_positions();
    pop_.var.assign(VP, std::vector<double>(p_.pop_size, p_.cap()));
    pop_.chk.assign(p_.L, std::vector<double>(p_.pop_size, 0.0));
    double t0 = std::tanh(p_.beta * p_.cap());
    var_tanh_.assign(VP, std::vector<double>(p_.pop_size, t0));
    moment_ring_.assign(p_.conv_window + 1, MomentRow(p_.L, {0.0, 0.0}));
}

void SimplifiedDE::update_check_side() {
    double tb = std::tanh(p_.beta);
    double p_plus = 0.5 * (1.0 + tb);
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    MomentRow& mom = moment_ring_[(sweeps_ + 1) % (p_.conv_window + 1)];
    double abs_sum = 0.0;
    for (int z = 0; z < p_.L; ++z) {
        auto& out = pop_.chk[z];
        double m1 = 0.0, m2 = 0.0;
        for (int a = 0; a < p_.pop_size; ++a) {
            double J = rng_.uniform() < p_plus ? 1.0 : -1.0;
            double prod = 1.0;
            for (int i = 0; i < p_.l - 1; ++i) {
                int zz = z + (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                prod *= var_tanh_[zz][rng_.uniform_index(pop)];
            }
            double v = ghat_from_prod(prod, J, p_.beta, tb);
            out[a] = v;
            double th = std::tanh(p_.beta * v);
            m1 += th;
            m2 += th * th;
            abs_sum += std::fabs(th);
        }
        mom[z] = {m1 / p_.pop_size, m2 / p_.pop_size};
    }
    pooled_abs_ = abs_sum / (static_cast<double>(p_.L) * p_.pop_size);
}

void SimplifiedDE::update_var_side() {
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    int VP = p_.var_positions();
    for (int z = 0; z < VP; ++z) {
        auto& out = pop_.var[z];
        auto& tout = var_tanh_[z];
        for (int i = 0; i < p_.pop_size; ++i) {
            int r = pois_(rng_.engine());
            double sum = 0.0;
            for (int k = 0; k < r; ++k) {
                int zc = z - (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                if (zc >= 0 && zc < p_.L) sum += pop_.chk[zc][rng_.uniform_index(pop)];
                // out-of-range positions contribute a point mass at zero
            }
            out[i] = sum;
            tout[i] = std::tanh(p_.beta * sum);
        }
    }
}

void SimplifiedDE::sweep() {
    update_check_side();
    update_var_side();
    ++sweeps_;
}

bool SimplifiedDE::moments_stable() const {
    return ring_stable(moment_ring_, sweeps_, p_.conv_window, p_.conv_tol);
}

DEStatus SimplifiedDE::run(const SweepObserver& observer) {
    DEStatus st;
    while (sweeps_ < p_.t_max) {
        sweep();
        if (observer) observer(sweeps_, pop_);
        double abs_tanh = pooled_abs_;
        if (abs_tanh < p_.trivial_tol) {
            st.trivial = true;
            st.mean_abs_tanh = abs_tanh;
            st.sweeps = sweeps_;
            return st;
        }
        if (moments_stable()) {
            st.converged = true;
            st.mean_abs_tanh = abs_tanh;
            st.sweeps = sweeps_;
            return st;
        }
    }
    st.sweeps = sweeps_;
    st.mean_abs_tanh = pooled_abs_;
    st.trivial = st.mean_abs_tanh < p_.trivial_tol;
    return st;
}


namespace {

void check_shape(const CavityParams& p, const ScalarPopulation& pop) {
    if (static_cast<int>(pop.var.size()) != p.var_positions() ||
        static_cast<int>(pop.chk.size()) != p.L)
        throw std::invalid_argument("set_population: position count mismatch");
    for (const auto& v : pop.var)
        if (static_cast<int>(v.size()) != p.pop_size)
            throw std::invalid_argument("set_population: sample count mismatch");
    for (const auto& v : pop.chk)
        if (static_cast<int>(v.size()) != p.pop_size)
            throw std::invalid_argument("set_population: sample count mismatch");
}

} // namespace

void SimplifiedDE::set_population(const ScalarPopulation& pop) {
    check_shape(p_, pop);
    pop_ = pop;
    for (int z = 0; z < p_.var_positions(); ++z)
        for (int i = 0; i < p_.pop_size; ++i)
            var_tanh_[z][i] = std::tanh(p_.beta * pop_.var[z][i]);
}

// ---------------------------------------------------------------------------
// FieldsDE

FieldsDE::FieldsDE(const CavityParams& p)
    : p_(p), rng_(Rng::stream(p.seed, p.stream, 13)), pois_(p.poisson_mean()) {
    p_.validate();
    int VP = p_.var_positions();
    pop_.var.assign(VP, std::vector<double>(p_.pop_size, 0.0));
    var_tanh_.assign(VP, std::vector<double>(p_.pop_size, 0.0));
    pop_.chk.assign(p_.L, std::vector<double>(p_.pop_size, 0.0));
    for (int z = 0; z < p_.L; ++z)
        for (int a = 0; a < p_.pop_size; ++a) pop_.chk[z][a] = rng_.uniform(-1.0, 1.0);
    moment_ring_.assign(p_.conv_window + 1, MomentRow(p_.L, {0.0, 0.0}));
}

void FieldsDE::update_var_side() {
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    int VP = p_.var_positions();
    for (int z = 0; z < VP; ++z) {
        for (int i = 0; i < p_.pop_size; ++i) {
            int r = pois_(rng_.engine());
            double sum = 0.0;
            for (int k = 0; k < r; ++k) {
                int zc = z - (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                if (zc >= 0 && zc < p_.L) sum += pop_.chk[zc][rng_.uniform_index(pop)];
            }
            pop_.var[z][i] = sum;
            var_tanh_[z][i] = std::tanh(p_.beta * sum);
        }
    }
}

void FieldsDE::update_check_side() {
    double tb = std::tanh(p_.beta);
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    MomentRow& mom = moment_ring_[(sweeps_ + 1) % (p_.conv_window + 1)];
    double abs_sum = 0.0;
    for (int z = 0; z < p_.L; ++z) {
        double m1 = 0.0, m2 = 0.0;
        for (int a = 0; a < p_.pop_size; ++a) {
            double J = rng_.sign();
            double prod = 1.0;
            for (int i = 0; i < p_.l - 1; ++i) {
                int zz = z + (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                prod *= var_tanh_[zz][rng_.uniform_index(pop)];
            }
            double v = ghat_from_prod(prod, J, p_.beta, tb);
            pop_.chk[z][a] = v;
            double th = std::tanh(p_.beta * v);
            m1 += th;
            m2 += th * th;
            abs_sum += std::fabs(th);
        }
        mom[z] = {m1 / p_.pop_size, m2 / p_.pop_size};
    }
    pooled_abs_ = abs_sum / (static_cast<double>(p_.L) * p_.pop_size);
}

void FieldsDE::sweep() {
    update_var_side();
    update_check_side();
    ++sweeps_;
}

void FieldsDE::set_population(const ScalarPopulation& pop) {
    check_shape(p_, pop);
    pop_ = pop;
    for (int z = 0; z < p_.var_positions(); ++z)
        for (int i = 0; i < p_.pop_size; ++i)
            var_tanh_[z][i] = std::tanh(p_.beta * pop_.var[z][i]);
}

bool FieldsDE::moments_stable() const {
    return ring_stable(moment_ring_, sweeps_, p_.conv_window, p_.conv_tol);
}

DEStatus FieldsDE::run() {
    DEStatus st;
    while (sweeps_ < p_.t_max) {
        sweep();
        double abs_tanh = pooled_abs_;
        if (abs_tanh < p_.trivial_tol) {
            st.trivial = true;
            st.mean_abs_tanh = abs_tanh;
            st.sweeps = sweeps_;
            return st;
        }
        if (moments_stable()) {
            st.converged = true;
            st.mean_abs_tanh = abs_tanh;
            st.sweeps = sweeps_;
            return st;
        }
        st.mean_abs_tanh = abs_tanh;
    }
    st.sweeps = sweeps_;
    st.trivial = st.mean_abs_tanh < p_.trivial_tol;
    return st;
}

// ---------------------------------------------------------------------------
// nu1 sampling

void sample_nu1_tanh(int k, int c, const double* tanh_h, double tanh_beta, Rng& rng,
                     int8_t* spins_out) {
    double suffix[64];
    std::vector<double> heap;
    double* S = suffix;
    if (k + 1 > 64) {
        heap.resize(k + 1);
        S = heap.data();
    }
    S[k] = 1.0;
    for (int i = k - 1; i >= 0; --i) S[i] = S[i + 1] * tanh_h[i];
    double C = static_cast<double>(c) * tanh_beta;
    double s = 1.0;  // running product of chosen spins
    for (int i = 0; i < k; ++i) {
        double denom = 1.0 + C * s * S[i];
        double num = 0.5 * (1.0 + tanh_h[i]) * (1.0 + C * s * S[i + 1]);
        double pp = num / denom;
        if (pp < 0.0) pp = 0.0;
        if (pp > 1.0) pp = 1.0;
        int sigma = rng.uniform() < pp ? 1 : -1;
        spins_out[i] = static_cast<int8_t>(sigma);
        s *= static_cast<double>(sigma);
    }
}

std::vector<int8_t> sample_nu1(int sigma_parent, int J, const std::vector<double>& h_list,
                               double beta, Rng& rng) {
    int k = static_cast<int>(h_list.size());
    std::vector<double> th(k);
    for (int i = 0; i < k; ++i) th[i] = std::tanh(beta * h_list[i]);
    std::vector<int8_t> out(k);
    if (k > 0) sample_nu1_tanh(k, J * sigma_parent, th.data(), std::tanh(beta), rng, out.data());
    return out;
}

// ---------------------------------------------------------------------------
// ConditionalsDE

ConditionalsDE::ConditionalsDE(const CavityParams& p, const ScalarPopulation& fields)
    : p_(p), rng_(Rng::stream(p.seed, p.stream, 17)), pois_(p.poisson_mean()) {
    p_.validate();
    if (p_.l > 64) throw std::invalid_argument("cavity: l > 64 not supported");
    int VP = p_.var_positions();
    if (static_cast<int>(fields.var.size()) != VP)
        throw std::invalid_argument("conditionals: field population shape mismatch");
    double cap = p_.cap();
    pop_.var_h.assign(VP, std::vector<double>(p_.pop_size, 0.0));
    pop_.var_p.assign(VP, std::vector<double>(p_.pop_size, cap));
    pop_.var_m.assign(VP, std::vector<double>(p_.pop_size, -cap));
    pop_.chk_h.assign(p_.L, std::vector<double>(p_.pop_size, 0.0));
    pop_.chk_p.assign(p_.L, std::vector<double>(p_.pop_size, 0.0));
    pop_.chk_m.assign(p_.L, std::vector<double>(p_.pop_size, 0.0));
    var_th_.assign(VP, std::vector<double>(p_.pop_size, 0.0));
    double tp0 = std::tanh(p_.beta * cap);
    var_tp_.assign(VP, std::vector<double>(p_.pop_size, tp0));
    var_tm_.assign(VP, std::vector<double>(p_.pop_size, -tp0));
    for (int z = 0; z < VP; ++z) {
        uint32_t fpop = static_cast<uint32_t>(fields.var[z].size());
        for (int i = 0; i < p_.pop_size; ++i) {
            double h = fields.var[z][rng_.uniform_index(fpop)];
            pop_.var_h[z][i] = h;
            var_th_[z][i] = std::tanh(p_.beta * h);
        }
    }
    moment_ring_.assign(p_.conv_window + 1, MomentRow(p_.L, {0.0, 0.0}));
}

void ConditionalsDE::update_check_side() {
    double tb = std::tanh(p_.beta);
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    int k = p_.l - 1;
    int zz[64];
    uint32_t jj[64];
    double th[64];
    int8_t spins[64];
    MomentRow& mom = moment_ring_[(sweeps_ + 1) % (p_.conv_window + 1)];
    double abs_sum = 0.0;
    for (int z = 0; z < p_.L; ++z) {
        double m1 = 0.0, m2 = 0.0;
        for (int a = 0; a < p_.pop_size; ++a) {
            int J = rng_.sign();
            double prod_h = 1.0;
            for (int i = 0; i < k; ++i) {
                zz[i] = z + (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                jj[i] = rng_.uniform_index(pop);
                th[i] = var_th_[zz[i]][jj[i]];
                prod_h *= th[i];
            }
            pop_.chk_h[z][a] = ghat_from_prod(prod_h, J, p_.beta, tb);

            sample_nu1_tanh(k, J, th, tb, rng_, spins);
            double prod_p = 1.0;
            for (int i = 0; i < k; ++i)
                prod_p *= spins[i] > 0 ? var_tp_[zz[i]][jj[i]] : var_tm_[zz[i]][jj[i]];
            double vp = ghat_from_prod(prod_p, J, p_.beta, tb);
            pop_.chk_p[z][a] = vp;

            sample_nu1_tanh(k, -J, th, tb, rng_, spins);
            double prod_m = 1.0;
            for (int i = 0; i < k; ++i)
                prod_m *= spins[i] > 0 ? var_tp_[zz[i]][jj[i]] : var_tm_[zz[i]][jj[i]];
            pop_.chk_m[z][a] = ghat_from_prod(prod_m, J, p_.beta, tb);

            double t = std::tanh(p_.beta * vp);
            m1 += t;
            m2 += t * t;
            abs_sum += std::fabs(t);
        }
        mom[z] = {m1 / p_.pop_size, m2 / p_.pop_size};
    }
    pooled_abs_ = abs_sum / (static_cast<double>(p_.L) * p_.pop_size);
}

void ConditionalsDE::update_var_side() {
    uint32_t pop = static_cast<uint32_t>(p_.pop_size);
    int VP = p_.var_positions();
    for (int z = 0; z < VP; ++z) {
        for (int i = 0; i < p_.pop_size; ++i) {
            int r = pois_(rng_.engine());
            double h = 0.0, ep = 0.0, em = 0.0;
            for (int q = 0; q < r; ++q) {
                int zc = z - (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
                if (zc < 0 || zc >= p_.L) continue;  // zero triple
                uint32_t j = rng_.uniform_index(pop);
                h += pop_.chk_h[zc][j];
                ep += pop_.chk_p[zc][j];
                em += pop_.chk_m[zc][j];
            }
            pop_.var_h[z][i] = h;
            pop_.var_p[z][i] = ep;
            pop_.var_m[z][i] = em;
            var_th_[z][i] = std::tanh(p_.beta * h);
            var_tp_[z][i] = std::tanh(p_.beta * ep);
            var_tm_[z][i] = std::tanh(p_.beta * em);
        }
    }
}

void ConditionalsDE::sweep() {
    update_check_side();
    update_var_side();
    ++sweeps_;
}

bool ConditionalsDE::moments_stable() const {
    return ring_stable(moment_ring_, sweeps_, p_.conv_window, p_.conv_tol);
}

DEStatus ConditionalsDE::run() {
    DEStatus st;
    while (sweeps_ < p_.t_max) {
        sweep();
        double abs_tanh = pooled_abs_;
        st.mean_abs_tanh = abs_tanh;
        if (abs_tanh < p_.trivial_tol) {
            st.trivial = true;
            st.sweeps = sweeps_;
            return st;
        }
        if (moments_stable()) {
            st.converged = true;
            st.sweeps = sweeps_;
            return st;
        }
    }
    st.sweeps = sweeps_;
    st.trivial = st.mean_abs_tanh < p_.trivial_tol;
    return st;
}

// ---------------------------------------------------------------------------
// Complexity functionals

ComplexityAccumulator::ComplexityAccumulator(const CavityParams& p, uint64_t substream)
    : p_(p), rng_(Rng::stream(p.seed, p.stream, substream)) {
    block_sum_.assign(p_.blocks, 0.0);
    block_cnt_.assign(p_.blocks, 0.0);
}

void ComplexityAccumulator::add_snapshot(const ScalarPopulation& pop) {
    double beta = p_.beta;
    int B = p_.blocks;
    int n = p_.pop_size;
    // All weights are per check node (the free energy is normalized by the
    // source length): each of the L+w-1 code-bit positions carries m/n = R
    // nodes per check position.
    double wE = static_cast<double>(p_.l - 1) / p_.L;
    double wV = static_cast<double>(p_.l) / p_.L;
    double wVar = p_.R / p_.L;
    uint32_t upop = static_cast<uint32_t>(n);

    std::vector<double> per_index(n, 0.0);
    last_sv_chk_.assign(p_.L, 0.0);
    last_se_.assign(p_.L, 0.0);
    last_sv_var_.assign(p_.var_positions(), 0.0);

    for (int z = 0; z < p_.L; ++z) {
        double sv = 0.0, se = 0.0;
        for (int a = 0; a < n; ++a) {
            double ehat = pop.chk[z][a];
            int zz = z + (p_.w > 1 ? static_cast<int>(rng_.uniform_index(p_.w)) : 0);
            double eta = pop.var[zz][rng_.uniform_index(upop)];
            double lpv = log1p_tanh(beta * ehat);
            double lpe = log1p_tanh_prod(beta * eta, beta * ehat);
            per_index[a] += wE * lpe - wV * lpv;
            sv += lpv;
            se += lpe;
        }
        last_sv_chk_[z] = sv / n;
        last_se_[z] = se / n;
    }
    for (int z = 0; z < p_.var_positions(); ++z) {
        double sv = 0.0;
        for (int i = 0; i < n; ++i) {
            double lpv = log1p_tanh(beta * pop.var[z][i]);
            per_index[i] += wVar * lpv;
            sv += lpv;
        }
        last_sv_var_[z] = sv / n;
    }
    for (int i = 0; i < n; ++i) {
        int b = static_cast<int>(static_cast<long long>(i) * B / n);
        block_sum_[b] += per_index[i];
        block_cnt_[b] += 1.0;
    }
}

ComplexityResult ComplexityAccumulator::finalize() const {
    ComplexityResult r;
    JackknifeResult j = jackknife_blocks(block_sum_, block_cnt_);
    r.sigma = j.mean;
    r.sigma_err = j.std_error;
    if (p_.beta > 0.0) {
        // free energy of the chain per check node: the boundary code-bits
        // raise the design rate to R (1 + (w-1)/L)
        double r_cou = p_.R * (1.0 + static_cast<double>(p_.w - 1) / p_.L);
        r.f = free_energy_simplified(p_.beta, r_cou);
        r.phi_int = r.f + r.sigma / p_.beta;
        r.f_err = 0.0;
        r.phi_int_err = r.sigma_err / p_.beta;
    }
    r.sigma_v_var = last_sv_var_;
    r.sigma_v_chk = last_sv_chk_;
    r.sigma_e = last_se_;
    return r;
}

ComplexityResult complexity_simplified(const ScalarPopulation& pop, const CavityParams& p) {
    ComplexityAccumulator acc(p);
    acc.add_snapshot(pop);
    return acc.finalize();
}

ComplexityResult complexity_full(const TriplePopulation& pop, const CavityParams& p,
                                 int n_draws, uint64_t substream) {
    p.validate();
    if (p.beta <= 0.0) throw std::invalid_argument("complexity_full: beta must be > 0");
    double beta = p.beta;
    double tb = std::tanh(beta);
    double r_cou = p.R * (1.0 + static_cast<double>(p.w - 1) / p.L);
    double A0 = std::log1p(std::exp(-2.0 * beta)) + (r_cou - 1.0) * M_LN2;
    double wC = static_cast<double>(p.l - 1) / p.L;
    double wVar = p.R / p.L;  // per check node; see ComplexityAccumulator
    uint32_t upop = static_cast<uint32_t>(p.pop_size);
    Rng rng = Rng::stream(p.seed, p.stream, substream);
    std::poisson_distribution<int> pois(p.poisson_mean());

    int B = p.blocks;
    std::vector<double> bf(B, 0.0), bphi(B, 0.0), bsig(B, 0.0), bcnt(B, 0.0);

    double th[64], tp[64], tm[64];
    int8_t spins[64];
    std::vector<double> hh, hp, hm;

    for (int d = 0; d < n_draws; ++d) {
        double tf = 0.0, tphi = 0.0;
        // check-node terms: l fields / l spins
        for (int z = 0; z < p.L; ++z) {
            double prod_h = 1.0;
            for (int i = 0; i < p.l; ++i) {
                int zz = z + (p.w > 1 ? static_cast<int>(rng.uniform_index(p.w)) : 0);
                uint32_t j = rng.uniform_index(upop);
                th[i] = std::tanh(beta * pop.var_h[zz][j]);
                tp[i] = std::tanh(beta * pop.var_p[zz][j]);
                tm[i] = std::tanh(beta * pop.var_m[zz][j]);
                prod_h *= th[i];
            }
            tf -= wC * 0.5 * (std::log1p(tb * prod_h) + std::log1p(-tb * prod_h));
            double ci = 0.0;
            for (int J = 1; J >= -1; J -= 2) {
                sample_nu1_tanh(p.l, J, th, tb, rng, spins);
                double prod = 1.0;
                for (int i = 0; i < p.l; ++i) prod *= spins[i] > 0 ? tp[i] : tm[i];
                ci += 0.5 * std::log1p(J * tb * prod);
            }
            tphi -= wC * ci;
        }
        // code-bit-node terms: r ~ Poisson(l/R) incoming triples
        for (int z = 0; z < p.var_positions(); ++z) {
            int r = pois(rng.engine());
            hh.clear();
            hp.clear();
            hm.clear();
            for (int q = 0; q < r; ++q) {
                int zc = z - (p.w > 1 ? static_cast<int>(rng.uniform_index(p.w)) : 0);
                if (zc < 0 || zc >= p.L) {
                    hh.push_back(0.0);
                    hp.push_back(0.0);
                    hm.push_back(0.0);
                } else {
                    uint32_t j = rng.uniform_index(upop);
                    hh.push_back(pop.chk_h[zc][j]);
                    hp.push_back(pop.chk_p[zc][j]);
                    hm.push_back(pop.chk_m[zc][j]);
                }
            }
            double lnA = 0.0, lnB = 0.0, sum_h = 0.0;
            for (double v : hh) {
                lnA += log1p_tanh(beta * v);
                lnB += log1p_tanh(-beta * v);
                sum_h += v;
            }
            double lnZ2_h = lnA - log1p_tanh(beta * sum_h);
            tf += wVar * lnZ2_h;

            double p_plus = 1.0 / (1.0 + std::exp(lnB - lnA));
            double sp = 0.0, sm = 0.0, ssp = 0.0, ssm = 0.0;
            for (double v : hp) {
                sp += log1p_tanh(beta * v);
                ssp += v;
            }
            for (double v : hm) {
                sm += log1p_tanh(beta * v);
                ssm += v;
            }
            double lnZ2_p = sp - log1p_tanh(beta * ssp);
            double lnZ2_m = sm - log1p_tanh(beta * ssm);
            tphi += wVar * (p_plus * lnZ2_p + (1.0 - p_plus) * lnZ2_m);
        }
        int b = static_cast<int>(static_cast<long long>(d) * B / n_draws);
        bf[b] += tf;
        bphi[b] += tphi;
        bsig[b] += tf - tphi;
        bcnt[b] += 1.0;
    }

    ComplexityResult r;
    JackknifeResult jf = jackknife_blocks(bf, bcnt);
    JackknifeResult jp = jackknife_blocks(bphi, bcnt);
    JackknifeResult js = jackknife_blocks(bsig, bcnt);
    r.f = -(A0 + jf.mean) / beta;
    r.f_err = jf.std_error / beta;
    r.phi_int = -(A0 + jp.mean) / beta;
    r.phi_int_err = jp.std_error / beta;
    r.sigma = js.mean;
    r.sigma_err = js.std_error;
    return r;
}

// ---------------------------------------------------------------------------
// Closed forms

double free_energy_simplified(double beta, double R) {
    if (!(beta > 0.0)) throw std::invalid_argument("free_energy_simplified: beta must be > 0");
    return -(std::log1p(std::exp(-2.0 * beta)) + (R - 1.0) * M_LN2) / beta;
}

double internal_energy(double beta) {
    if (beta < 0.0) throw std::invalid_argument("internal_energy: beta must be >= 0");
    return 1.0 - std::tanh(beta);
}

double internal_energy_large_degree(double beta, double R) {
    if (beta < beta_sh(R)) return 1.0 - std::tanh(beta);
    return 2.0 * shannon_distortion(R);
}

double shannon_distortion(double R) {
    if (!(R > 0.0) || !(R < 1.0))
        throw std::invalid_argument("shannon_distortion: R must be in (0,1)");
    return binary_entropy_inv_bits(1.0 - R);
}

double beta_sh(double R) {
    double D = shannon_distortion(R);
    return 0.5 * std::log((1.0 - D) / D);
}

double large_degree_complexity(double beta, double R) {
    if (beta < 0.0) throw std::invalid_argument("large_degree_complexity: beta must be >= 0");
    return (R - 1.0) * M_LN2 + binary_entropy_nats(0.5 * (1.0 + std::tanh(beta)));
}

double large_degree_beta_c(double R) {
    if (!(R > 0.0) || !(R < 1.0))
        throw std::invalid_argument("large_degree_beta_c: R must be in (0,1)");
    double lo = 0.0, hi = 20.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (large_degree_complexity(mid, R) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Threshold extraction

ScanPoint evaluate_scan_point(const CavityParams& p) {
    ScanPoint pt;
    pt.beta = p.beta;
    SimplifiedDE de(p);
    DEStatus st = de.run();
    pt.sweeps = st.sweeps;
    if (st.trivial) {
        pt.trivial = true;
        pt.sigma = 0.0;
        pt.sigma_err = 0.0;
        if (p.beta > 0.0) {
            double r_cou = p.R * (1.0 + static_cast<double>(p.w - 1) / p.L);
            pt.f = free_energy_simplified(p.beta, r_cou);
            pt.phi_int = pt.f;
        }
        return pt;
    }
    pt.trivial = false;
    ComplexityAccumulator acc(p);
    for (int s = 0; s < p.avg_sweeps; ++s) {
        de.sweep();
        acc.add_snapshot(de.population());
    }
    ComplexityResult c = acc.finalize();
    pt.sigma = c.sigma;
    pt.sigma_err = c.sigma_err;
    pt.f = c.f;
    pt.phi_int = c.phi_int;
    pt.nontrivial_fp =
        st.mean_abs_tanh > p.trivial_tol && pt.sigma > 3.0 * pt.sigma_err;
    return pt;
}

Thresholds find_thresholds(const CavityParams& base, const GridSpec& grid, double tol) {
    if (!(grid.step > 0.0) || !(grid.stop > grid.start))
        throw std::invalid_argument("find_thresholds: bad grid");
    if (!(tol > 0.0)) throw std::invalid_argument("find_thresholds: tol must be > 0");

    Thresholds out;
    std::vector<double> betas;
    for (double b = grid.start; b <= grid.stop + 1e-12; b += grid.step) betas.push_back(b);

    for (double b : betas) {
        CavityParams p = base;
        p.beta = b;
        out.scan.push_back(evaluate_scan_point(p));
    }

    // beta_d bracket: last trivial grid point before the first qualifying one
    int first_nt = -1;
    for (size_t k = 0; k < out.scan.size(); ++k) {
        if (out.scan[k].nontrivial_fp) {
            first_nt = static_cast<int>(k);
            break;
        }
    }
    if (first_nt < 0)
        throw BracketError("find_thresholds: no nontrivial fixed point on the grid", out.scan);
    if (first_nt == 0)
        throw BracketError("find_thresholds: grid start is already nontrivial", out.scan);

    double lo = betas[first_nt - 1], hi = betas[first_nt];
    while (hi - lo > tol) {
        CavityParams p = base;
        p.beta = 0.5 * (lo + hi);
        ScanPoint pt = evaluate_scan_point(p);
        if (pt.nontrivial_fp)
            hi = p.beta;
        else
            lo = p.beta;
    }
    out.beta_d = 0.5 * (lo + hi);
    out.beta_d_bracket = hi - lo;

    // beta_c bracket: complexity zero crossing over the nontrivial branch
    int cross = -1;
    for (size_t k = first_nt + 1; k < out.scan.size(); ++k) {
        if (!out.scan[k].trivial && out.scan[k].sigma <= 0.0 && !out.scan[k - 1].trivial &&
            out.scan[k - 1].sigma > 0.0) {
            cross = static_cast<int>(k);
            break;
        }
    }
    if (cross < 0)
        throw BracketError("find_thresholds: complexity does not cross zero on the grid",
                           out.scan);
    lo = betas[cross - 1];
    hi = betas[cross];
    while (hi - lo > tol) {
        CavityParams p = base;
        p.beta = 0.5 * (lo + hi);
        ScanPoint pt = evaluate_scan_point(p);
        if (!pt.trivial && pt.sigma > 0.0)
            lo = p.beta;
        else
            hi = p.beta;
    }
    out.beta_c = 0.5 * (lo + hi);
    out.beta_c_bracket = hi - lo;

    if (out.beta_d > out.beta_c + tol)
        throw BracketError("find_thresholds: beta_d above beta_c", out.scan);
    return out;
}

// ---------------------------------------------------------------------------
// Population snapshots

void save_population(const ScalarPopulation& pop, const CavityParams& p,
                     const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_population: cannot open " + path);
    char head[256];
    std::snprintf(head, sizeof(head), "scpop 1\n%d %.17g %d %d %.17g %d %llu\n", p.l, p.R, p.L,
                  p.w, p.beta, p.pop_size, static_cast<unsigned long long>(p.seed));
    os << head;
    os << pop.var.size() << ' ' << pop.chk.size();
    // position offsets (sample counts per position)
    for (const auto& v : pop.var) os << ' ' << v.size();
    for (const auto& v : pop.chk) os << ' ' << v.size();
    os << '\n';
    for (const auto& v : pop.var)
        os.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    for (const auto& v : pop.chk)
        os.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

ScalarPopulation load_population(const std::string& path, CavityParams* params_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_population: cannot open " + path);
    std::string tag;
    int version;
    is >> tag >> version;
    if (tag != "scpop" || version != 1) throw std::runtime_error("load_population: bad header");
    CavityParams p;
    is >> p.l >> p.R >> p.L >> p.w >> p.beta >> p.pop_size >> p.seed;
    size_t nv, nc;
    is >> nv >> nc;
    std::vector<size_t> sizes(nv + nc);
    for (auto& s : sizes) is >> s;
    is.ignore(1);  // newline before the binary payload
    ScalarPopulation pop;
    pop.var.resize(nv);
    pop.chk.resize(nc);
    for (size_t z = 0; z < nv; ++z) {
        pop.var[z].resize(sizes[z]);
        is.read(reinterpret_cast<char*>(pop.var[z].data()), sizes[z] * sizeof(double));
    }
    for (size_t z = 0; z < nc; ++z) {
        pop.chk[z].resize(sizes[nv + z]);
        is.read(reinterpret_cast<char*>(pop.chk[z].data()), sizes[nv + z] * sizeof(double));
    }
    if (!is) throw std::runtime_error("load_population: truncated payload");
    if (params_out) *params_out = p;
    return pop;
}

} // namespace scldgm
