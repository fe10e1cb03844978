#pragma once

#include "ralab/types.hpp"

namespace ralab {

enum class TransformKind { hadamard, mht, imht };

// Square transform held as an explicit dense matrix.  Hadamard matrices are
// stored unnormalized (entries +-1, so H H^T = D I); the modified pair is the
// integer analysis matrix and its exact rational inverse.
struct TransformMatrix {
    RealMatrix entries;
    TransformKind kind = TransformKind::hadamard;

    int dim() const { return static_cast<int>(entries.rows()); }
};

// Sylvester-recursion Hadamard matrix of order d (d a power of two).
TransformMatrix hadamard_matrix(int d);

// Modified length-8 analysis matrix: rows 1-4 are the first four Hadamard
// rows (averaging bank), rows 5-8 are shifted copies of the second-derivative
// filter {1, -2, 1} (detail bank).  Applied unnormalized.
TransformMatrix mht_matrix_8();

// Exact inverse of mht_matrix_8().  All entries are dyadic rationals, so the
// floating-point product with the forward matrix is the identity bit-exactly.
TransformMatrix imht_matrix_8();

// y = Q8 x and x = Q8^-1 y for one length-8 block.
Vector8 mht_forward(const Vector8& x);
Vector8 mht_inverse(const Vector8& y);

// Magnitude response of the second-derivative detail filter {1, -2, 1} at
// normalized angular frequency w: |H(w)| = 4 sin^2(w/2).
double second_derivative_response(double w);

// Two-channel Haar analysis bank (low {1/sqrt2, 1/sqrt2}, high
// {-1/sqrt2, 1/sqrt2}) applied as a full packet tree of the given depth:
// every subband is split again at each level, and each split of a length-n
// signal yields the decimated outputs (x[2i]+x[2i+1])/sqrt2 and
// (x[2i]-x[2i+1])/sqrt2.  Subbands are concatenated low-branch first, so for
// a length-4 input at depth 2 the four singleton outputs are
// (ll, lh, hl, hh).  x.size() must be divisible by 2^levels.
RealVector haar_packet_analysis(const RealVector& x, int levels);

} // namespace ralab
