#include "koopmatch/edmdm.hpp"

#include <cmath>

namespace koop {

CVec compute_d(const SpectralDecomposition& v1, const SpectralDecomposition& v2,
               const Dictionary& dict, const MatchingPoint& mp,
               const std::vector<int>& perm, double a5_tol) {
    const int n = v1.size();
    if (v2.size() != n || static_cast<int>(perm.size()) != n)
        throw ValidationError("compute_d: size mismatch");
    if (!finite(mp.z1) || !finite(mp.z2))
        throw ValidationError("compute_d: matching point must be finite");

    CVec psi1 = dict.eval(mp.z1).cast<Complex>();
    CVec psi2 = dict.eval(mp.z2).cast<Complex>();
    CVec d(n);
    for (int j = 0; j < n; ++j) {
        const Complex den = (v1.left_vectors.row(j) * psi1)(0, 0);
        const Complex num = (v2.left_vectors.row(perm[j]) * psi2)(0, 0);
        if (std::abs(den) < a5_tol)
            throw ValidationError("compute_d: A5 violation, |denominator| < tol at mode " +
                                  std::to_string(j) + " (try a different matching point)");
        d[j] = num / den;
    }
    return d;
}

MatchResult reconstruct_h(const Mat& b, const SpectralDecomposition& v1,
                          const SpectralDecomposition& v2, const CVec& d_diag,
                          const Dictionary& dict, const std::vector<int>& perm,
                          const EdmdmOptions& opts) {
    const int n = v1.size();
    const int d = static_cast<int>(b.rows());

    CMat v2_aligned(n, n);
    for (int j = 0; j < n; ++j) v2_aligned.row(j) = v2.left_vectors.row(perm[j]);

    Eigen::JacobiSVD<CMat> svd(v2_aligned, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0 || smax / smin >= opts.cond_limit)
        throw NumericalError("reconstruct_h: V2 is ill-conditioned (cond >= limit)");

    CMat h_full = v2_aligned.fullPivLu().solve(d_diag.asDiagonal() * v1.left_vectors);
    CMat bh = b.cast<Complex>() * h_full;

    MatchResult res;
    res.d_diag = d_diag;
    res.h_matrix = bh;
    res.permutation = perm;

    double max_imag = 0.0;
    for (const Vec& p : opts.probe_points) {
        CVec val = bh * dict.eval(p).cast<Complex>();
        for (int i = 0; i < d; ++i)
            max_imag = std::max(max_imag, std::abs(val[i].imag()));
    }
    res.max_imag_residue = max_imag;
    if (!opts.probe_points.empty() && max_imag > opts.imag_tol)
        throw NumericalError("reconstruct_h: imaginary residue " + std::to_string(max_imag) +
                             " exceeds threshold");

    Dictionary dcopy = dict;
    TransformMap h;
    h.dim_in = d;
    h.dim_out = d;
    h.label = "edmdm";
    h.forward = [bh, dcopy](const Vec& z) {
        CVec val = bh * dcopy.eval(z).cast<Complex>();
        Vec out(val.size());
        for (int i = 0; i < val.size(); ++i) out[i] = val[i].real();
        return out;
    };
    res.h_map = h;
    return res;
}

MatchResult edmdm_pipeline(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                           const Dictionary& dict, const MatchingPoint& mp,
                           const EdmdmOptions& opts) {
    if (k1.size() != k2.size() || k1.size() != dict.n)
        throw ValidationError("edmdm_pipeline: K matrices and dictionary must share size");
    if (k1.mode != k2.mode)
        throw ValidationError("edmdm_pipeline: K matrices have different modes");

    SpectralDecomposition s1 = left_eigens(k1);
    SpectralDecomposition s2 = left_eigens(k2);
    std::vector<int> perm = pair_spectra(s1, s2, opts.pair_tol);

    CVec d_diag = compute_d(s1, s2, dict, mp, perm, opts.a5_tol);
    const int d = static_cast<int>(mp.z1.size());
    MatchResult res = reconstruct_h(dict.selection_matrix(d), s1, s2, d_diag, dict, perm, opts);

    res.lambda1 = s1.eigenvalues;
    res.lambda2.resize(s2.size());
    for (int j = 0; j < s2.size(); ++j) res.lambda2[j] = s2.eigenvalues[perm[j]];
    res.similarity_residual = 0.0;
    for (int j = 0; j < s1.size(); ++j)
        res.similarity_residual =
            std::max(res.similarity_residual, std::abs(res.lambda1[j] - res.lambda2[j]));
    res.distinct_spectra = s1.distinct && s2.distinct;

    CVec den(s1.size());
    CVec psi1 = dict.eval(mp.z1).cast<Complex>();
    for (int j = 0; j < s1.size(); ++j) den[j] = (s1.left_vectors.row(j) * psi1)(0, 0);
    res.denominators = den;
    return res;
}

KoopmanMatrix project_generator_truncated(const SystemSpec& sys, const Dictionary& dict) {
    if (sys.polynomial.empty())
        throw ValidationError("project_generator_truncated: field is not polynomial");
    if (dict.monomials.empty())
        throw ValidationError("project_generator_truncated: dictionary is not monomial");

    std::map<Monomial, int> index;
    for (int j = 0; j < dict.n; ++j) index[dict.monomials[j]] = j;

    KoopmanMatrix km;
    km.k = CMat::Zero(dict.n, dict.n);
    km.mode = KoopmanMatrix::Mode::generator;
    km.provenance = KoopmanMatrix::Provenance::analytic;

    for (int j = 0; j < dict.n; ++j) {
        Poly psi{{dict.monomials[j], 1.0}};
        Poly action;
        for (int i = 0; i < sys.dim; ++i)
            poly_add_scaled(action, poly_mul(sys.polynomial[i], poly_partial(psi, i)), 1.0);
        for (const auto& [e, c] : action) {
            auto it = index.find(e);
            if (it != index.end()) km.k(j, it->second) = c;
        }
    }
    return km;
}

}  // namespace koop
