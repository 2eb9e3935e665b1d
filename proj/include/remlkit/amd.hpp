#ifndef REMLKIT_AMD_HPP
#define REMLKIT_AMD_HPP

#include <vector>

#include "remlkit/sparse.hpp"

namespace remlkit {

/// Approximate-minimum-degree fill-reducing ordering.
///
/// Quotient-graph elimination with Amestoy-style approximate external
/// degrees. Ties are broken by smallest original index, absorption is
/// non-aggressive (an element dies only when its boundary empties or its
/// pivot neighbour is eliminated), and rows whose initial degree exceeds
/// max(16, 10*sqrt(m)) are deferred to the end of the ordering so a single
/// dense row cannot drag the whole elimination into one clique.
///
/// Returns perm with perm[k] = original index eliminated at step k.
std::vector<int> amd_order(const SparseSymPattern& pattern);

/// perm[k] = k; baseline for ordering comparisons.
std::vector<int> natural_order(int m);

std::vector<int> invert_permutation(const std::vector<int>& perm);

}  // namespace remlkit

#endif
