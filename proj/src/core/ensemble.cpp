#include "core/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace scldgm {

int EnsembleParams::codebits_per_position() const {
    // The ensemble only fixes m/n = R; we round to nearest. Results are
    // insensitive to the choice for n >= 2000.
    return static_cast<int>(std::lround(R * static_cast<double>(n)));
}

void EnsembleParams::validate() const {
    if (l < 1) throw std::invalid_argument("ensemble: check degree l must be >= 1");
    if (!(R > 0.0) || R > 1.0) throw std::invalid_argument("ensemble: rate R must be in (0,1]");
    if (n < 1) throw std::invalid_argument("ensemble: n must be >= 1");
    if (L < 1 || w < 1) throw std::invalid_argument("ensemble: L and w must be >= 1");
    if (w > L) throw std::invalid_argument("ensemble: w must not exceed L");
    if (codebits_per_position() < 1)
        throw std::invalid_argument("ensemble: m = round(n R) must be >= 1");
}

namespace {

void build_var_incidence(FactorGraph& g) {
    int M = g.num_codebits();
    int E = g.num_edges();
    int C = g.num_checks();
    g.edge_check.assign(E, 0);
    for (int c = 0; c < C; ++c)
        for (int e = g.check_off[c]; e < g.check_off[c + 1]; ++e) g.edge_check[e] = c;
    g.var_off.assign(M + 1, 0);
    for (int e = 0; e < E; ++e) g.var_off[g.edge_codebit[e] + 1]++;
    for (int i = 0; i < M; ++i) g.var_off[i + 1] += g.var_off[i];
    g.var_edges.assign(E, 0);
    std::vector<int> cursor(g.var_off.begin(), g.var_off.end() - 1);
    for (int e = 0; e < E; ++e) g.var_edges[cursor[g.edge_codebit[e]]++] = e;
}

FactorGraph sample_impl(const EnsembleParams& params) {
    params.validate();
    FactorGraph g;
    g.l = params.l;
    g.R = params.R;
    g.L = params.L;
    g.w = params.w;
    g.n = params.n;
    g.m = params.codebits_per_position();
    g.seed = params.seed;
    g.stream = params.stream;

    int num_checks = g.n * g.L;
    int var_positions = g.L + g.w - 1;
    int M = g.m * var_positions;

    g.check_pos.resize(num_checks);
    g.codebit_pos.resize(M);
    for (int z = 0; z < g.L; ++z)
        for (int a = 0; a < g.n; ++a) g.check_pos[z * g.n + a] = z + 1;
    for (int z = 0; z < var_positions; ++z)
        for (int i = 0; i < g.m; ++i) g.codebit_pos[z * g.m + i] = z + 1;

    Rng rng = Rng::stream(params.seed, params.stream);
    g.check_off.resize(num_checks + 1);
    g.edge_codebit.resize(static_cast<size_t>(num_checks) * g.l);
    int e = 0;
    for (int c = 0; c < num_checks; ++c) {
        g.check_off[c] = e;
        int z = g.check_pos[c];  // 1-based
        for (int k = 0; k < g.l; ++k) {
            // Two-stage draw: offset y uniform in {0..w-1}, then a uniform
            // code-bit at position z+y.
            int y = g.w > 1 ? static_cast<int>(rng.uniform_index(static_cast<uint32_t>(g.w))) : 0;
            int node = static_cast<int>(rng.uniform_index(static_cast<uint32_t>(g.m)));
            g.edge_codebit[e++] = (z - 1 + y) * g.m + node;
        }
    }
    g.check_off[num_checks] = e;
    build_var_incidence(g);
    return g;
}

} // namespace

FactorGraph sample_underlying(const EnsembleParams& params) {
    if (params.L != 1 || params.w != 1)
        throw std::invalid_argument("sample_underlying: requires L = w = 1");
    return sample_impl(params);
}

FactorGraph sample_coupled(const EnsembleParams& params) { return sample_impl(params); }

FactorGraph make_graph(const EnsembleParams& params,
                       const std::vector<std::vector<int>>& check_adj,
                       const std::vector<int>& check_positions, int codebits) {
    FactorGraph g;
    g.l = params.l;
    g.R = params.R;
    g.L = params.L;
    g.w = params.w;
    g.n = params.n;
    g.seed = params.seed;
    g.stream = params.stream;

    int num_checks = static_cast<int>(check_adj.size());
    if (static_cast<int>(check_positions.size()) != num_checks)
        throw std::invalid_argument("make_graph: positions/adjacency size mismatch");
    int var_positions = g.L + g.w - 1;
    int M;
    if (codebits < 0) {
        g.m = params.codebits_per_position();
        M = g.m * var_positions;
    } else {
        if (g.L != 1 || g.w != 1)
            throw std::invalid_argument("make_graph: explicit codebits requires L = w = 1");
        g.m = codebits;
        M = codebits;
    }

    g.check_pos = check_positions;
    g.codebit_pos.resize(M);
    for (int z = 0; z < var_positions; ++z)
        for (int i = 0; i < g.m; ++i) g.codebit_pos[z * g.m + i] = z + 1;

    g.check_off.resize(num_checks + 1);
    int e = 0;
    for (int c = 0; c < num_checks; ++c) {
        g.check_off[c] = e;
        for (int i : check_adj[c]) {
            if (i < 0 || i >= M) throw std::invalid_argument("make_graph: code-bit index out of range");
            g.edge_codebit.push_back(i);
            ++e;
        }
    }
    g.check_off[num_checks] = e;
    build_var_incidence(g);
    return g;
}

double coupled_rate(double R, int L, int w) {
    if (L < 1 || w < 1) throw std::invalid_argument("coupled_rate: L and w must be >= 1");
    return R * (1.0 + static_cast<double>(w - 1) / static_cast<double>(L));
}

std::vector<uint8_t> sample_source(size_t N, uint64_t seed, uint64_t stream) {
    if (N < 1) throw std::invalid_argument("sample_source: N must be >= 1");
    Rng rng = Rng::stream(seed, stream, 1);
    std::vector<uint8_t> x(N);
    for (size_t a = 0; a < N; ++a) x[a] = static_cast<uint8_t>(rng.fair_bit());
    return x;
}

std::vector<uint8_t> reconstruct(const FactorGraph& g, const std::vector<uint8_t>& u) {
    if (static_cast<int>(u.size()) != g.num_codebits())
        throw std::invalid_argument("reconstruct: codeword length mismatch");
    std::vector<uint8_t> xhat(g.num_checks());
    for (int c = 0; c < g.num_checks(); ++c) {
        uint8_t b = 0;
        for (int e = g.check_off[c]; e < g.check_off[c + 1]; ++e) b ^= u[g.edge_codebit[e]];
        xhat[c] = b;
    }
    return xhat;
}

double distortion(const std::vector<uint8_t>& x, const std::vector<uint8_t>& xhat) {
    if (x.size() != xhat.size() || x.empty())
        throw std::invalid_argument("distortion: length mismatch");
    long long mism = 0;
    for (size_t a = 0; a < x.size(); ++a) mism += (x[a] != xhat[a]);
    return static_cast<double>(mism) / static_cast<double>(x.size());
}

namespace {

// Lexicographic order on the bit sequence u_0, u_1, ...
bool lex_less(uint32_t a, uint32_t b, int M) {
    for (int i = 0; i < M; ++i) {
        unsigned ba = (a >> i) & 1u, bb = (b >> i) & 1u;
        if (ba != bb) return ba < bb;
    }
    return false;
}

} // namespace

ExhaustiveResult exhaustive_optimal(const FactorGraph& g, const std::vector<uint8_t>& x) {
    int M = g.num_codebits();
    int N = g.num_checks();
    if (M > 24) throw std::invalid_argument("exhaustive_optimal: M > 24 refused");
    if (static_cast<int>(x.size()) != N)
        throw std::invalid_argument("exhaustive_optimal: source length mismatch");

    // Checks where code-bit i appears with odd multiplicity: flipping u_i
    // toggles exactly those reconstructed bits.
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

    std::vector<uint8_t> resid(x);  // x XOR reconstruct(u) for current u
    int mism = 0;
    for (int a = 0; a < N; ++a) mism += resid[a];

    uint32_t best_u = 0;
    int best_mism = mism;
    uint32_t u = 0;
    uint64_t total = 1ull << M;
    for (uint64_t k = 1; k < total; ++k) {
        int bit = __builtin_ctzll(k);  // Gray-code walk
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
        if (mism < best_mism || (mism == best_mism && lex_less(u, best_u, M))) {
            best_mism = mism;
            best_u = u;
        }
    }

    ExhaustiveResult r;
    r.codeword.resize(M);
    for (int i = 0; i < M; ++i) r.codeword[i] = static_cast<uint8_t>((best_u >> i) & 1u);
    r.distortion = static_cast<double>(best_mism) / static_cast<double>(N);
    return r;
}

void save_graph(const FactorGraph& g, std::ostream& os) {
    char head[160];
    std::snprintf(head, sizeof(head), "ldgm %d %.17g %d %d %d %llu\n", g.l, g.R, g.L, g.w, g.n,
                  static_cast<unsigned long long>(g.seed));
    os << head;
    for (int c = 0; c < g.num_checks(); ++c) {
        os << g.check_pos[c];
        for (int e = g.check_off[c]; e < g.check_off[c + 1]; ++e) os << ' ' << g.edge_codebit[e];
        os << '\n';
    }
}

void save_graph(const FactorGraph& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_graph: cannot open " + path);
    save_graph(g, os);
}

FactorGraph load_graph(std::istream& is) {
    std::string tag;
    EnsembleParams p;
    if (!(is >> tag) || tag != "ldgm") throw std::runtime_error("load_graph: bad header");
    if (!(is >> p.l >> p.R >> p.L >> p.w >> p.n >> p.seed))
        throw std::runtime_error("load_graph: bad header fields");
    p.validate();
    int num_checks = p.n * p.L;
    std::vector<std::vector<int>> adj(num_checks);
    std::vector<int> pos(num_checks);
    std::string line;
    std::getline(is, line);  // rest of header line
    for (int c = 0; c < num_checks; ++c) {
        if (!std::getline(is, line)) throw std::runtime_error("load_graph: truncated check list");
        std::istringstream ls(line);
        if (!(ls >> pos[c])) throw std::runtime_error("load_graph: bad check line");
        int idx;
        while (ls >> idx) adj[c].push_back(idx);
        if (static_cast<int>(adj[c].size()) != p.l)
            throw std::runtime_error("load_graph: check degree != l");
    }
    return make_graph(p, adj, pos);
}

FactorGraph load_graph_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_graph: cannot open " + path);
    return load_graph(is);
}

} // namespace scldgm
