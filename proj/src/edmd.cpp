#include "koopmatch/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace koop {

Mat Dictionary::evaluate(const Mat& points) const {
    if (eval_batch) return eval_batch(points);
    Mat out(n, points.cols());
    for (int j = 0; j < points.cols(); ++j) out.col(j) = eval(points.col(j));
    return out;
}

Mat Dictionary::selection_matrix(int d) const {
    if (static_cast<int>(coordinate_rows.size()) < d)
        throw ValidationError("Dictionary: coordinate maps missing (assumption A4)");
    Mat b = Mat::Zero(d, n);
    for (int i = 0; i < d; ++i) b(i, coordinate_rows[i]) = 1.0;
    return b;
}

void Dictionary::validate_independence(const Vec& lo, const Vec& hi,
                                       std::uint64_t seed) const {
    const int probes = 200;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Mat pts(lo.size(), probes);
    for (int j = 0; j < probes; ++j)
        for (int i = 0; i < lo.size(); ++i) pts(i, j) = lo[i] + (hi[i] - lo[i]) * unit(rng);
    Mat psi = evaluate(pts);
    Mat gram = (psi * psi.transpose()) / probes;
    Eigen::JacobiSVD<Mat> svd(gram);
    if (svd.singularValues().minCoeff() <= 1e-10)
        throw ValidationError("Dictionary: entries not linearly independent on probe grid");
}

int cantor_pair(int m, int n) { return (m + n) * (m + n + 1) / 2 + n; }

std::pair<int, int> cantor_unpair(int j) {
    const int w = static_cast<int>((std::sqrt(8.0 * j + 1.0) - 1.0) / 2.0);
    const int t = w * (w + 1) / 2;
    const int n = j - t;
    const int m = w - n;
    if (cantor_pair(m, n) != j || m < 0 || n < 0)
        throw ValidationError("cantor_unpair: index out of range");
    return {m, n};
}

Dictionary multinomial_dictionary(int d, int max_index) {
    if (d != 2)
        throw ValidationError("multinomial_dictionary: Cantor pairing is bivariate (d=2)");
    if (max_index < 2)
        throw ValidationError("multinomial_dictionary: max_index must be >= 2");
    Dictionary dict;
    dict.n = max_index;
    dict.kind = Dictionary::Kind::multinomial;
    dict.fixed_prefix = 2;  // z1, z2 lead the ordering
    for (int j = 1; j <= max_index; ++j) {
        auto [m, n] = cantor_unpair(j);
        dict.monomials.push_back({m, n});
    }
    dict.coordinate_rows = {0, 1};
    auto monomials = dict.monomials;
    dict.eval = [monomials](const Vec& z) {
        Vec out(monomials.size());
        for (std::size_t j = 0; j < monomials.size(); ++j)
            out[j] = std::pow(z[0], monomials[j][0]) * std::pow(z[1], monomials[j][1]);
        return out;
    };
    return dict;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            Monomial e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            out[e] += ca * cb;
        }
    return out;
}

Poly poly_partial(const Poly& p, int var) {
    Poly out;
    for (const auto& [e, c] : p) {
        if (e[var] == 0) continue;
        Monomial d = e;
        d[var] -= 1;
        out[d] += c * e[var];
    }
    return out;
}

void poly_add_scaled(Poly& acc, const Poly& p, double scale) {
    for (const auto& [e, c] : p) acc[e] += scale * c;
}

namespace {

std::string monomial_name(const Monomial& e) {
    std::ostringstream os;
    bool any = false;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (any) os << "*";
        os << "z" << (i + 1);
        if (e[i] > 1) os << "^" << e[i];
        any = true;
    }
    if (!any) os << "1";
    return os.str();
}

}  // namespace

KoopmanMatrix project_generator(const SystemSpec& sys, const Dictionary& dict) {
    if (sys.polynomial.empty())
        throw ValidationError("project_generator: system '" + sys.id +
                              "' has no polynomial field representation");
    if (dict.monomials.empty())
        throw ValidationError("project_generator: dictionary entries are not monomials");

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
            if (c == 0.0) continue;
            auto it = index.find(e);
            if (it == index.end())
                throw ValidationError("project_generator: closure violation, term " +
                                      monomial_name(e) + " produced by entry " +
                                      monomial_name(dict.monomials[j]) +
                                      " is outside the dictionary");
            km.k(j, it->second) = c;
        }
    }
    return km;
}

KoopmanMatrix edmd_fit(const SamplePairs& pairs, const Dictionary& dict, double ridge) {
    if (pairs.count() == 0) throw ValidationError("edmd_fit: empty sample pairs");
    if (ridge < 0) throw ValidationError("edmd_fit: ridge must be >= 0");
    const int m = pairs.count();

    Mat px = dict.evaluate(pairs.x);
    Mat pn = dict.evaluate(pairs.x_next);
    Mat gram = (px * px.transpose()) / m;
    Mat across = (px * pn.transpose()) / m;

    KoopmanMatrix km;
    km.mode = KoopmanMatrix::Mode::discrete;
    km.dt = pairs.dt;
    km.provenance = KoopmanMatrix::Provenance::least_squares;
    if (m < dict.n) km.warnings.push_back("underdetermined: fewer pairs than dictionary size");

    Mat reg = gram + ridge * Mat::Identity(dict.n, dict.n);
    Eigen::FullPivLU<Mat> lu(reg);
    if (!lu.isInvertible())
        throw NumericalError("edmd_fit: singular Gram matrix (increase ridge)");
    // Solve (G + ridge I) X = A, then K = X^T so that Psi(x') ~ K Psi(x).
    Mat x = lu.solve(across);
    km.k = x.transpose().cast<Complex>();
    return km;
}

namespace {

// Canonical row scaling: divide by the entry of largest modulus, ties broken
// toward the highest index, so that entry becomes exactly one.
void canonicalize_row(CMat& m, int i) {
    int best = 0;
    double best_mod = std::abs(m(i, 0));
    for (int k = 1; k < m.cols(); ++k) {
        const double mod = std::abs(m(i, k));
        if (mod >= best_mod * (1.0 - 1e-12)) {
            if (mod > best_mod * (1.0 + 1e-12) || k > best) {
                best = k;
                best_mod = std::max(best_mod, mod);
            }
        }
    }
    if (best_mod == 0.0) throw NumericalError("left_eigens: zero eigenvector row");
    m.row(i) /= m(i, best);
}

int row_pivot(const Eigen::RowVectorXcd& row) {
    double scale = 0.0;
    for (int k = 0; k < row.size(); ++k) scale = std::max(scale, std::abs(row[k]));
    for (int k = 0; k < row.size(); ++k)
        if (std::abs(row[k]) > 1e-8 * scale) return k;
    return static_cast<int>(row.size());
}

// In-place reduced row echelon form of a small complex row block; returns the
// pivot column of each row. Used to pick a canonical basis of a repeated
// eigenvalue's left eigenspace.
std::vector<int> rref(CMat& block) {
    const int rows = static_cast<int>(block.rows());
    const int cols = static_cast<int>(block.cols());
    std::vector<int> pivots;
    int r = 0;
    for (int c = 0; c < cols && r < rows; ++c) {
        int best = -1;
        double best_mod = 1e-7;  // rows are O(1) after eigensolver normalization
        for (int i = r; i < rows; ++i) {
            if (std::abs(block(i, c)) > best_mod) {
                best_mod = std::abs(block(i, c));
                best = i;
            }
        }
        if (best < 0) continue;
        block.row(r).swap(block.row(best));
        block.row(r) /= block(r, c);
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            block.row(i) -= block(i, c) * block.row(r);
        }
        pivots.push_back(c);
        ++r;
    }
    if (r < rows)
        throw NumericalError("left_eigens: rank-deficient eigenvalue cluster");
    return pivots;
}

}  // namespace

SpectralDecomposition left_eigens(const KoopmanMatrix& km) {
    if (!km.k.allFinite()) throw ValidationError("left_eigens: non-finite matrix");
    const int n = km.size();
    const double scale = std::max(1.0, km.k.norm());

    Eigen::ComplexEigenSolver<CMat> solver(km.k.transpose());
    if (solver.info() != Eigen::Success)
        throw NumericalError("left_eigens: eigensolver failed");

    CVec vals = solver.eigenvalues();
    CMat rows(n, n);
    for (int i = 0; i < n; ++i) rows.row(i) = solver.eigenvectors().col(i).transpose();

    // Descending by (Re, Im).
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto later = [&vals](int a, int b) {
        if (vals[a].real() != vals[b].real()) return vals[a].real() > vals[b].real();
        return vals[a].imag() > vals[b].imag();
    };
    std::sort(order.begin(), order.end(), later);

    CVec sorted_vals(n);
    CMat sorted_rows(n, n);
    for (int i = 0; i < n; ++i) {
        sorted_vals[i] = vals[order[i]];
        sorted_rows.row(i) = rows.row(order[i]);
    }

    // Cluster numerically repeated eigenvalues and rebuild each cluster's rows
    // as the reduced row echelon basis of the joint eigenspace. Individual
    // eigenvectors of a repeated eigenvalue are solver-dependent; the row
    // space is not.
    const double cluster_tol = 1e-8 * scale;
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n && std::abs(sorted_vals[end] - sorted_vals[start]) <= cluster_tol) ++end;
        if (end - start > 1) {
            CMat block = sorted_rows.middleRows(start, end - start);
            rref(block);
            Complex mean = 0.0;
            for (int i = start; i < end; ++i) mean += sorted_vals[i];
            mean /= static_cast<double>(end - start);
            for (int i = start; i < end; ++i) sorted_vals[i] = mean;
            sorted_rows.middleRows(start, end - start) = block;
        }
        start = end;
    }

    for (int i = 0; i < n; ++i) canonicalize_row(sorted_rows, i);

    SpectralDecomposition dec;
    dec.eigenvalues = sorted_vals;
    dec.left_vectors = sorted_rows;
    dec.pivots.resize(n);
    for (int i = 0; i < n; ++i) dec.pivots[i] = row_pivot(sorted_rows.row(i));

    // Stable secondary order: pivot index within equal eigenvalues.
    std::vector<int> final_order(n);
    std::iota(final_order.begin(), final_order.end(), 0);
    std::stable_sort(final_order.begin(), final_order.end(), [&dec](int a, int b) {
        const Complex la = dec.eigenvalues[a], lb = dec.eigenvalues[b];
        if (la.real() != lb.real()) return la.real() > lb.real();
        if (la.imag() != lb.imag()) return la.imag() > lb.imag();
        return dec.pivots[a] < dec.pivots[b];
    });
    CVec fv(n);
    CMat fr(n, n);
    std::vector<int> fp(n);
    for (int i = 0; i < n; ++i) {
        fv[i] = dec.eigenvalues[final_order[i]];
        fr.row(i) = dec.left_vectors.row(final_order[i]);
        fp[i] = dec.pivots[final_order[i]];
    }
    dec.eigenvalues = fv;
    dec.left_vectors = fr;
    dec.pivots = fp;

    dec.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dec.min_gap = std::min(dec.min_gap, std::abs(dec.eigenvalues[i] - dec.eigenvalues[j]));
    if (n < 2) dec.min_gap = std::numeric_limits<double>::infinity();
    dec.distinct = dec.min_gap >= 1e-8 * scale;

    for (int i = 0; i < n; ++i) {
        const double resid =
            (dec.left_vectors.row(i) * km.k - dec.eigenvalues[i] * dec.left_vectors.row(i))
                .norm();
        if (resid > 1e-6 * scale * dec.left_vectors.row(i).norm())
            throw NumericalError("left_eigens: eigen residual check failed");
    }
    return dec;
}

namespace {

// Hungarian algorithm with potentials, O(n^3), minimizing total cost.
std::vector<int> hungarian(const Mat& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> perm(n);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) perm[p[j] - 1] = j - 1;
    return perm;
}

}  // namespace

std::vector<int> pair_spectra(const SpectralDecomposition& s1,
                              const SpectralDecomposition& s2, double tol) {
    if (s1.size() != s2.size())
        throw ValidationError("pair_spectra: decompositions differ in size");
    const int n = s1.size();
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        scale = std::max(scale, std::max(std::abs(s1.eigenvalues[i]),
                                         std::abs(s2.eigenvalues[i])));
    Mat cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = std::abs(s1.eigenvalues[i] - s2.eigenvalues[j]) +
                         1e-12 * scale * std::abs(i - j);  // prefer natural order on ties
    std::vector<int> perm = hungarian(cost);
    for (int i = 0; i < n; ++i) {
        if (std::abs(s1.eigenvalues[i] - s2.eigenvalues[perm[i]]) > tol)
            throw ValidationError(
                "pair_spectra: eigenvalue " + std::to_string(i) +
                " has no partner within tol (systems not spectrally matched)");
    }
    return perm;
}

CVec discrete_to_generator(const CVec& eigenvalues, double dt) {
    if (dt <= 0) throw ValidationError("discrete_to_generator: dt must be positive");
    CVec out(eigenvalues.size());
    for (int i = 0; i < eigenvalues.size(); ++i) out[i] = std::log(eigenvalues[i]) / dt;
    return out;
}

}  // namespace koop
