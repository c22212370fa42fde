#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace scldgm {

// Parameters of the LDGM(l, R, L, w, n) ensemble. The underlying
// (uncoupled) ensemble is the special case L = w = 1.
struct EnsembleParams {
    int l = 3;          // check degree
    double R = 0.5;     // design compression rate, in (0, 1]
    int L = 1;          // number of coupled positions
    int w = 1;          // coupling window
    int n = 0;          // checks per position
    uint64_t seed = 0;
    uint64_t stream = 0;

    // m = round(n R) code-bit nodes per position.
    int codebits_per_position() const;
    // Throws std::invalid_argument when any constraint is violated.
    void validate() const;
};

// Bipartite graph between N = nL check nodes (each carrying a source bit)
// and M = m(L+w-1) code-bit nodes. Edges are slots: multi-edges between the
// same pair are distinct slots and every check owns exactly l of them while
// pristine. Immutable after construction.
struct FactorGraph {
    int l = 0;
    double R = 0.0;
    int L = 1, w = 1, n = 0, m = 0;
    uint64_t seed = 0;
    uint64_t stream = 0;

    std::vector<int> check_pos;     // 1-based position per check
    std::vector<int> codebit_pos;   // 1-based position per code-bit
    // check-major edge slots: check c owns [check_off[c], check_off[c+1])
    std::vector<int> check_off;
    std::vector<int> edge_codebit;  // code-bit endpoint of each edge slot
    std::vector<int> edge_check;    // owning check of each edge slot
    // code-bit incidence: edge ids per code-bit
    std::vector<int> var_off;
    std::vector<int> var_edges;

    int num_checks() const { return static_cast<int>(check_pos.size()); }
    int num_codebits() const { return static_cast<int>(codebit_pos.size()); }
    int num_edges() const { return static_cast<int>(edge_codebit.size()); }
    bool coupled() const { return L > 1 || w > 1; }

    int check_degree(int c) const { return check_off[c + 1] - check_off[c]; }
    int codebit_degree(int i) const { return var_off[i + 1] - var_off[i]; }
};

FactorGraph sample_underlying(const EnsembleParams& params);
FactorGraph sample_coupled(const EnsembleParams& params);

// Assembles a graph from explicit check adjacency lists (tests, loader).
// codebits < 0 derives the count from params; an explicit count requires
// L = w = 1.
FactorGraph make_graph(const EnsembleParams& params,
                       const std::vector<std::vector<int>>& check_adj,
                       const std::vector<int>& check_positions, int codebits = -1);

// R_cou = R (1 + (w-1)/L)
double coupled_rate(double R, int L, int w);

std::vector<uint8_t> sample_source(size_t N, uint64_t seed, uint64_t stream = 0);

// x_hat_a = XOR of u_i over the slots of check a (multiplicity counts).
std::vector<uint8_t> reconstruct(const FactorGraph& graph, const std::vector<uint8_t>& u);

// Relative Hamming distance between equal-length words.
double distortion(const std::vector<uint8_t>& x, const std::vector<uint8_t>& xhat);

struct ExhaustiveResult {
    std::vector<uint8_t> codeword;
    double distortion = 0.0;
};

// Minimizes distortion over all 2^M codewords; ties broken toward the
// lexicographically smallest codeword. Refuses M > 24.
ExhaustiveResult exhaustive_optimal(const FactorGraph& graph, const std::vector<uint8_t>& x);

// Line-based text format: header "ldgm l R L w n seed", then one line per
// check: "z i1 ... il" with 0-based code-bit indices. Round-trips bit-exactly.
void save_graph(const FactorGraph& graph, std::ostream& os);
void save_graph(const FactorGraph& graph, const std::string& path);
FactorGraph load_graph(std::istream& is);
FactorGraph load_graph_file(const std::string& path);

} // namespace scldgm
