#pragma once

#include "koopmatch/edmd.hpp"
#include "koopmatch/matching.hpp"

namespace koop {

// A pair of matching states z2 = h(z1) pinning the eigenfunction scales.
struct MatchingPoint {
    Vec z1;
    Vec z2;
};

struct EdmdmOptions {
    double pair_tol = 1e-6;        // eigenvalue pairing tolerance
    double a5_tol = 1e-10;         // minimum |denominator|
    double cond_limit = 1e10;      // V2 condition number limit
    double imag_tol = 1e-6;        // max imaginary residue of h on probes
    std::vector<Vec> probe_points; // imaginary-residue probes (optional)
};

struct MatchResult {
    CVec d_diag;
    CMat h_matrix;  // B [V2]^{-1} D V1, d x N
    TransformMap h_map;
    CVec denominators;
    std::vector<int> permutation;
    double similarity_residual = 0.0;  // max |lambda1_j - lambda2_perm(j)|
    double max_imag_residue = 0.0;
    bool distinct_spectra = true;
    CVec lambda1, lambda2;
};

// D_jj = (v2_perm(j) . Psi(z2)) / (v1_j . Psi(z1)); throws on A5 violation
// naming the offending mode.
CVec compute_d(const SpectralDecomposition& v1, const SpectralDecomposition& v2,
               const Dictionary& dict, const MatchingPoint& mp,
               const std::vector<int>& perm, double a5_tol = 1e-10);

// h(z) = Re( B [V2]^{-1} D V1 Psi(z) ), with V2 rows permuted into alignment.
MatchResult reconstruct_h(const Mat& b, const SpectralDecomposition& v1,
                          const SpectralDecomposition& v2, const CVec& d_diag,
                          const Dictionary& dict, const std::vector<int>& perm,
                          const EdmdmOptions& opts = {});

// left_eigens + pair_spectra + compute_d + reconstruct_h.
MatchResult edmdm_pipeline(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                           const Dictionary& dict, const MatchingPoint& mp,
                           const EdmdmOptions& opts = {});

// Leading-block generator projection: terms produced outside the dictionary
// are dropped instead of raising a closure error. This is the finite
// truncation of the infinite-dictionary projection; left eigenvectors of the
// truncated block coincide with truncations of the infinite ones whenever the
// dictionary ordering is graded by degree.
KoopmanMatrix project_generator_truncated(const SystemSpec& sys, const Dictionary& dict);

}  // namespace koop
