#pragma once

#include "koopmatch/dynsys.hpp"

namespace koop {

// Finite dictionary Psi: R^d -> R^N. Monomial dictionaries carry their
// exponent tuples so the generator can be projected exactly.
struct Dictionary {
    int n = 0;
    int fixed_prefix = 0;  // leading entries that are the constant/coordinates
    enum class Kind { multinomial, mlp, custom } kind = Kind::custom;
    std::function<Vec(const Vec&)> eval;
    std::function<Mat(const Mat&)> eval_batch;  // defaults to column-wise eval
    std::vector<Monomial> monomials;            // set iff entries are monomials
    std::vector<int> coordinate_rows;           // indices of z_1..z_d in Psi

    Mat evaluate(const Mat& points) const;
    // Selection matrix B with P = B Psi (coordinate projections).
    Mat selection_matrix(int d) const;
    // Linear independence probe: min singular value of the Gram matrix on a
    // seeded 200-point grid must exceed 1e-10.
    void validate_independence(const Vec& lo, const Vec& hi, std::uint64_t seed = 0) const;
};

int cantor_pair(int m, int n);
std::pair<int, int> cantor_unpair(int j);

// Bivariate monomials ordered by the Cantor pairing, entry j = z1^m z2^n with
// c(m,n) = j; the (0,0) constant is skipped.
Dictionary multinomial_dictionary(int d, int max_index);

struct KoopmanMatrix {
    CMat k;
    enum class Mode { generator, discrete } mode = Mode::generator;
    double dt = 0.0;
    enum class Provenance { analytic, least_squares } provenance = Provenance::analytic;
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(k.rows()); }
};

// Exact projection of the generator F . grad onto a monomial dictionary.
// Throws ValidationError naming the offending term if the action leaves the
// span.
KoopmanMatrix project_generator(const SystemSpec& sys, const Dictionary& dict);

// Regularized least squares fit of Psi(x') ~ K Psi(x).
KoopmanMatrix edmd_fit(const SamplePairs& pairs, const Dictionary& dict, double ridge);

struct SpectralDecomposition {
    CVec eigenvalues;   // sorted descending by (Re, Im)
    CMat left_vectors;  // row j satisfies v_j^T K = lambda_j v_j^T
    bool distinct = true;
    double min_gap = 0.0;
    std::vector<int> pivots;  // first significant entry per row

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

// Full left-eigendecomposition with deterministic canonicalization: rows are
// scaled so the largest-modulus entry equals one (ties resolved toward the
// highest index), and numerically repeated eigenvalues get the canonical
// reduced-row-echelon basis of their joint left eigenspace.
SpectralDecomposition left_eigens(const KoopmanMatrix& k);

// Optimal assignment (Hungarian) on the |lambda_i - lambda_j| cost matrix;
// perm[i] gives the row of s2 matched to row i of s1.
std::vector<int> pair_spectra(const SpectralDecomposition& s1,
                              const SpectralDecomposition& s2, double tol);

// Principal-branch generator eigenvalue log(mu)/dt.
CVec discrete_to_generator(const CVec& eigenvalues, double dt);

// Polynomial helpers (sparse, exponent tuple -> coefficient).
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_partial(const Poly& p, int var);
void poly_add_scaled(Poly& acc, const Poly& p, double scale);

}  // namespace koop
