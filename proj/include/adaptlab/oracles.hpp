#pragma once

#include "adaptlab/numeric.hpp"

namespace adaptlab {

// Euclidean projection onto the probability simplex by exhaustive
// support-set search: for every nonempty support S the candidate
// p_i = z_i - (sum_S z - 1)/|S| (i in S, 0 elsewhere) is checked for
// feasibility and the feasible candidate minimizing ||p - z||^2 is
// returned. Independent of the sort-and-threshold implementation; used
// only for verification. Practical for length <= ~20.
Vector simplex_projection_bruteforce(const Vector& z);

}  // namespace adaptlab
