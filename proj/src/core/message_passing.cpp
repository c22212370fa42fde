#include "core/message_passing.hpp"

#include <cmath>
#include <stdexcept>

namespace scldgm {

MessageState MessageState::zero_init(const FactorGraph& g, const std::vector<uint8_t>& x,
                                     double beta) {
    if (static_cast<int>(x.size()) != g.num_checks())
        throw std::invalid_argument("MessageState: source length mismatch");
    MessageState s;
    s.beta = beta;
    s.eta.assign(g.num_edges(), 0.0);
    s.eta_hat.assign(g.num_edges(), 0.0);
    s.source_sign.resize(g.num_checks());
    for (int c = 0; c < g.num_checks(); ++c) s.source_sign[c] = x[c] ? -1 : 1;
    return s;
}

namespace {

// The math bounds |eta_hat| <= 1; the cap only keeps atanh finite under
// floating-point rounding.
constexpr double kAtanhCap = 1.0 - 1e-15;

inline double check_kernel(double prod_tanh, int J, double beta, double tanh_beta) {
    double arg = tanh_beta * prod_tanh;
    if (arg > kAtanhCap) arg = kAtanhCap;
    if (arg < -kAtanhCap) arg = -kAtanhCap;
    double v = std::atanh(arg) / beta * static_cast<double>(J);
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

} // namespace

double check_update(const double* incoming, int count, int J, double beta) {
    if (count == 0) return static_cast<double>(J);
    if (beta == 0.0) return 0.0;
    double prod = 1.0;
    for (int k = 0; k < count; ++k) prod *= std::tanh(beta * incoming[k]);
    return check_kernel(prod, J, beta, std::tanh(beta));
}

double variable_update(const double* incoming, int count) {
    double s = 0.0;
    for (int k = 0; k < count; ++k) s += incoming[k];
    return s;
}

double iterate_round(const FactorGraph& g, MessageState& st) {
    int E = g.num_edges();
    double beta = st.beta;
    double tb = std::tanh(beta);
    double tv = 0.0;

    // check half-round
    std::vector<double> t(E);
    for (int e = 0; e < E; ++e) t[e] = std::tanh(beta * st.eta[e]);
    std::vector<double> pre, suf;
    for (int c = 0; c < g.num_checks(); ++c) {
        int b = g.check_off[c], d = g.check_off[c + 1] - b;
        int J = st.source_sign[c];
        if (d == 0) continue;
        pre.assign(d + 1, 1.0);
        suf.assign(d + 1, 1.0);
        for (int k = 0; k < d; ++k) pre[k + 1] = pre[k] * t[b + k];
        for (int k = d - 1; k >= 0; --k) suf[k] = suf[k + 1] * t[b + k];
        for (int k = 0; k < d; ++k) {
            double excl = pre[k] * suf[k + 1];
            double nh;
            if (d == 1)
                nh = static_cast<double>(J);
            else if (beta == 0.0)
                nh = 0.0;
            else
                nh = check_kernel(excl, J, beta, tb);
            tv += std::fabs(nh - st.eta_hat[b + k]);
            st.eta_hat[b + k] = nh;
        }
    }
    tv = E > 0 ? tv / static_cast<double>(E) : 0.0;

    // variable half-round
    for (int i = 0; i < g.num_codebits(); ++i) {
        double sum = 0.0;
        for (int k = g.var_off[i]; k < g.var_off[i + 1]; ++k) sum += st.eta_hat[g.var_edges[k]];
        for (int k = g.var_off[i]; k < g.var_off[i + 1]; ++k) {
            int e = g.var_edges[k];
            st.eta[e] = sum - st.eta_hat[e];
        }
    }
    return tv;
}

BiasVector compute_biases(const FactorGraph& g, const MessageState& st) {
    BiasVector b;
    b.eta.assign(g.num_codebits(), 0.0);
    for (int i = 0; i < g.num_codebits(); ++i) {
        double sum = 0.0;
        for (int k = g.var_off[i]; k < g.var_off[i + 1]; ++k) sum += st.eta_hat[g.var_edges[k]];
        b.eta[i] = sum;
    }
    return b;
}

std::pair<double, double> bp_marginal(double eta, double beta) {
    // p(u) = exp(beta (-1)^u eta) / (2 cosh(beta eta))
    double p0 = 1.0 / (1.0 + std::exp(-2.0 * beta * eta));
    return {p0, 1.0 - p0};
}

std::vector<std::pair<double, double>> exact_marginal_oracle(const FactorGraph& g,
                                                             const std::vector<uint8_t>& x,
                                                             double beta) {
    int M = g.num_codebits();
    int N = g.num_checks();
    if (M > 20) throw std::invalid_argument("exact_marginal_oracle: M > 20 refused");
    if (static_cast<int>(x.size()) != N)
        throw std::invalid_argument("exact_marginal_oracle: source length mismatch");

    std::vector<std::vector<int>> odd_checks(M);
    for (int i = 0; i < M; ++i) {
        std::vector<int> checks;
        for (int k = g.var_off[i]; k < g.var_off[i + 1]; ++k)
            checks.push_back(g.edge_check[g.var_edges[k]]);
        std::sort(checks.begin(), checks.end());
        for (size_t k = 0; k < checks.size();) {
            size_t j = k;
            while (j < checks.size() && checks[j] == checks[k]) ++j;
            if ((j - k) % 2 == 1) odd_checks[i].push_back(checks[k]);
            k = j;
        }
    }

    std::vector<uint8_t> resid(x);
    int mism = 0;
    for (int a = 0; a < N; ++a) mism += resid[a];

    std::vector<double> z0(M, 0.0);
    double Z = 0.0;
    uint32_t u = 0;
    uint64_t total = 1ull << M;
    for (uint64_t k = 0; k < total; ++k) {
        if (k > 0) {
            int bit = __builtin_ctzll(k);
            u ^= (1u << bit);
            for (int c : odd_checks[bit]) {
                if (resid[c]) {
                    resid[c] = 0;
                    --mism;
                } else {
                    resid[c] = 1;
                    ++mism;
                }
            }
        }
        double wgt = std::exp(-2.0 * beta * static_cast<double>(mism));
        Z += wgt;
        for (int i = 0; i < M; ++i)
            if (((u >> i) & 1u) == 0) z0[i] += wgt;
    }

    std::vector<std::pair<double, double>> out(M);
    for (int i = 0; i < M; ++i) {
        double p0 = z0[i] / Z;
        out[i] = {p0, 1.0 - p0};
    }
    return out;
}

} // namespace scldgm
