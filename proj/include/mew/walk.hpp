#pragma once

#include <vector>

#include "mew/state.hpp"

namespace mew {

/*
 * One proposed move of the marked edge walk. A composite proposal carries
 * both halves (cycle basis step then marked edge step); the single-step
 * variant carries exactly one. Degree bookkeeping for the transition ratio is
 * captured at proposal time, before any mutation.
 */
struct Proposal {
    bool has_cycle = false;
    bool has_marked = false;

    // cycle basis step: T' = (T + e_plus) - e_minus. e_minus == e_plus is the
    // lazy tree move (T' = T).
    EdgeId e_plus = -1;
    EdgeId e_minus = -1;
    std::vector<EdgeId> cycle;  // fundamental cycle, e_plus included
    int cycle_minus_m = 0;      // |C \ M|
    int cycle_minus_mprime = 0; // |C \ M'|

    // marked edge step: m_new = {u, v}, v drawn from u's neighbors in T'.
    EdgeId m_old = -1;
    EdgeId m_new = -1;
    VertexId endpoint_u = -1;
    VertexId neighbor_v = -1;
    int deg_t_u = 0, deg_t_v = 0;    // degrees in T
    int deg_tp_u = 0, deg_tp_v = 0;  // degrees in T'

    // m_new collides with another marked edge; the proposal leaves the state
    // space and is rejected outright
    bool collision = false;
};

// The unique cycle in T + e_plus: tree path between the endpoints plus e_plus
// itself. Throws MewError if e_plus is already a tree edge.
std::vector<EdgeId> fundamental_cycle(const MarkedTreeState& s, EdgeId e_plus);

// Composite MEW proposal: e_plus uniform over E \ T, e_minus uniform over
// C \ M, m uniform over M, u uniform over m's endpoints, v uniform over
// N_{T'}(u). Throws ConfigError when E \ T is empty (the graph is a tree).
Proposal propose(const MarkedTreeState& s, RngStream& rng);

// Probabilistic one-step variant: with probability p_cycle only the cycle
// basis step runs (marks frozen), otherwise only the marked edge step (tree
// frozen). Symmetric, so its ratio is 1.
Proposal propose_single_step(const MarkedTreeState& s, RngStream& rng, double p_cycle);

// P(x|x') / P(x'|x) for the proposal's move. Exactly 0 when m' = e_plus
// (the reverse cycle step would have to remove a marked edge) or on a
// collision.
double transition_ratio(const Proposal& p);

struct RatioParts {
    double indicator = 1.0;      // 1[m' != e_plus]
    double tree_factor = 1.0;    // |C \ M| / |C \ M'|
    double marked_factor = 1.0;  // degree terms
};
RatioParts transition_ratio_parts(const Proposal& p);

// Recomputes labels and tallies for every part touched by the move, without
// mutating the state. Throws on collisions.
StateDelta build_delta(const MarkedTreeState& s, const Proposal& p);

// apply: fresh state with the move committed; the input state is untouched.
MarkedTreeState applied(const MarkedTreeState& s, const Proposal& p);

// Explicit reverse proposal from the post-move state back to the original;
// exists whenever transition_ratio(p) > 0. Used by reversibility tests.
Proposal reverse_proposal(const MarkedTreeState& before, const MarkedTreeState& after,
                          const Proposal& p);

}  // namespace mew
