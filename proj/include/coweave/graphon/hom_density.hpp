#pragma once

// Homomorphism densities of small directed graphs in a step kernel:
//   t(F, k) = sum over maps phi: V(F) -> labels of
//             prod_{(u,v) in E(F)} k(phi(u), phi(v)) * prod_v mass(phi(v)).
// Computed by bucket elimination so that cycles of length L cost
// O(L * n^2) instead of n^L.

#include <utility>
#include <vector>

#include "coweave/graphon/kernel.hpp"

namespace coweave {

// Directed multigraph on vertices 0..n_vertices-1; loops and parallel
// edges are allowed.
struct digraph {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // (tail, head)
};

digraph digraph_edge();           // 0 -> 1
digraph digraph_path(int len);    // len edges, len+1 vertices
digraph digraph_cycle(int len);   // directed cycle, len >= 1 (len 1 = loop)
digraph digraph_complete(int n);  // all ordered pairs (u, v), u != v

// Bucket elimination over a min-degree ordering.  Supports up to 8 vertices;
// throws resource_error if an intermediate table would exceed 2^24 entries.
double hom_density(const digraph& f, const step_kernel& k);

}  // namespace coweave
