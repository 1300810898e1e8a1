#include "koopmatch/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace koop {

MlpDictionary MlpDictionary::init(int width, int out_dim, std::uint64_t seed) {
    MlpDictionary d;
    d.width = width;
    d.out_dim = out_dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto layer = [&](int rows, int cols) {
        Mat m(rows, cols);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = scale * unit(rng);
        return m;
    };
    d.w = {layer(width, d.input_dim), layer(width, width), layer(width, width),
           layer(out_dim, width)};
    for (const Mat& m : d.w) d.b.push_back(Vec::Zero(m.rows()));
    return d;
}

int MlpDictionary::param_count() const {
    int c = 0;
    for (std::size_t l = 0; l < w.size(); ++l)
        c += static_cast<int>(w[l].size() + b[l].size());
    return c;
}

Vec MlpDictionary::flatten() const {
    Vec theta(param_count());
    int at = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (int j = 0; j < w[l].cols(); ++j)
            for (int i = 0; i < w[l].rows(); ++i) theta[at++] = w[l](i, j);
        for (int i = 0; i < b[l].size(); ++i) theta[at++] = b[l][i];
    }
    return theta;
}

void MlpDictionary::unflatten(const Vec& theta) {
    if (theta.size() != param_count())
        throw ValidationError("MlpDictionary::unflatten: size mismatch");
    int at = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (int j = 0; j < w[l].cols(); ++j)
            for (int i = 0; i < w[l].rows(); ++i) w[l](i, j) = theta[at++];
        for (int i = 0; i < b[l].size(); ++i) b[l][i] = theta[at++];
    }
}

MlpDictionary::ForwardCache MlpDictionary::forward(const Mat& z) const {
    ForwardCache c;
    Mat h = z;
    for (int l = 0; l < 3; ++l) {
        h = ((w[l] * h).colwise() + b[l]).array().tanh().matrix();
        c.act.push_back(h);
    }
    c.out = (w[3] * h).colwise() + b[3];
    return c;
}

Vec MlpDictionary::backward(const ForwardCache& cache, const Mat& z, const Mat& dout) const {
    std::vector<Mat> gw(4);
    std::vector<Vec> gb(4);
    gw[3] = dout * cache.act[2].transpose();
    gb[3] = dout.rowwise().sum();
    Mat delta = w[3].transpose() * dout;
    for (int l = 2; l >= 0; --l) {
        delta = delta.array() * (1.0 - cache.act[l].array().square());
        const Mat& prev = l == 0 ? z : cache.act[l - 1];
        gw[l] = delta * prev.transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) delta = w[l].transpose() * delta;
    }
    Vec grad(param_count());
    int at = 0;
    for (int l = 0; l < 4; ++l) {
        for (int j = 0; j < gw[l].cols(); ++j)
            for (int i = 0; i < gw[l].rows(); ++i) grad[at++] = gw[l](i, j);
        for (int i = 0; i < gb[l].size(); ++i) grad[at++] = gb[l][i];
    }
    return grad;
}

Mat MlpDictionary::psi(const Mat& z) const {
    Mat out(n(), z.cols());
    out.row(0).setOnes();
    out.row(1) = z.row(0);
    out.row(2) = z.row(1);
    out.bottomRows(out_dim) = forward(z).out;
    if (!out.allFinite()) throw NumericalError("MlpDictionary: non-finite evaluation");
    return out;
}

Dictionary MlpDictionary::as_dictionary() const {
    Dictionary dict;
    dict.n = n();
    dict.fixed_prefix = 3;
    dict.kind = Dictionary::Kind::mlp;
    dict.coordinate_rows = {1, 2};
    MlpDictionary copy = *this;
    dict.eval = [copy](const Vec& z) { return Vec(copy.psi(z)); };
    dict.eval_batch = [copy](const Mat& z) { return copy.psi(z); };
    return dict;
}

namespace {

Mat real_k(const KoopmanMatrix& k) { return k.k.real(); }

double half_loss(const Mat& k, const Dictionary& dict, const SamplePairs& data) {
    if (data.count() == 0) throw ValidationError("combined_loss: empty data");
    if (k.rows() != dict.n)
        throw ValidationError("combined_loss: K size does not match dictionary");
    Mat px = dict.evaluate(data.x);
    Mat pn = dict.evaluate(data.x_next);
    return (pn - k * px).squaredNorm() / data.count();
}

}  // namespace

double combined_loss(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                     const Dictionary& dict, const SamplePairs& data1,
                     const SamplePairs& data2) {
    return half_loss(real_k(k1), dict, data1) + half_loss(real_k(k2), dict, data2);
}

double combined_loss(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                     const MlpDictionary& dict, const SamplePairs& data1,
                     const SamplePairs& data2) {
    return combined_loss(k1, k2, dict.as_dictionary(), data1, data2);
}

KoopmanMatrix kstep(const MlpDictionary& dict, const SamplePairs& data, double ridge) {
    return edmd_fit(data, dict.as_dictionary(), ridge);
}

Vec loss_gradient(const MlpDictionary& dict, const KoopmanMatrix& k1,
                  const KoopmanMatrix& k2, const SamplePairs& data1,
                  const SamplePairs& data2) {
    Vec grad = Vec::Zero(dict.param_count());
    auto accumulate = [&](const Mat& k, const SamplePairs& data) {
        if (data.count() == 0) return;
        const double inv_m = 1.0 / data.count();
        auto fx = dict.forward(data.x);
        auto fn = dict.forward(data.x_next);
        Mat px(dict.n(), data.count()), pn(dict.n(), data.count());
        px.row(0).setOnes();
        px.row(1) = data.x.row(0);
        px.row(2) = data.x.row(1);
        px.bottomRows(dict.out_dim) = fx.out;
        pn.row(0).setOnes();
        pn.row(1) = data.x_next.row(0);
        pn.row(2) = data.x_next.row(1);
        pn.bottomRows(dict.out_dim) = fn.out;

        Mat r = pn - k * px;                      // N x M
        Mat d_pn = 2.0 * inv_m * r;               // dJ/dPsi(x')
        Mat d_px = -2.0 * inv_m * (k.transpose() * r);  // dJ/dPsi(x)
        grad += dict.backward(fn, data.x_next, d_pn.bottomRows(dict.out_dim));
        grad += dict.backward(fx, data.x, d_px.bottomRows(dict.out_dim));
    };
    accumulate(real_k(k1), data1);
    accumulate(real_k(k2), data2);
    return grad;
}

namespace {

// Minimizer over P of ||P A - B P||_F^2 subject to ||P||_F^2 >= 1. The
// minimum lives in the bottom eigenspace of the Sylvester operator's Gram;
// when that eigenspace has dimension > 1 (similar matrices with repeated
// matched modes), the seed and the identity are projected into it and the
// better-conditioned feasible candidate wins.
Mat best_p(const Mat& a, const Mat& b, const Mat& seed) {
    const int n = static_cast<int>(a.rows());
    Mat l(n * n, n * n);
    // vec(P A - B P) = (A^T kron I - I kron B) vec(P), column-major vec.
    l.setZero();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // block (j,i) of A^T kron I is A(i,j) * I
            for (int r = 0; r < n; ++r) l(j * n + r, i * n + r) += a(i, j);
            // I kron B: block diagonal B
            for (int r = 0; r < n; ++r) l(j * n + r, j * n + i) -= b(r, i);
        }
    Mat gram = l.transpose() * l;
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const Vec evals = es.eigenvalues();
    const double floor_tol =
        std::max(1e-12, 1e-9 * std::max(evals[n * n - 1], 0.0));
    int k = 1;
    while (k < n * n && evals[k] <= evals[0] + floor_tol) ++k;
    Mat basis = es.eigenvectors().leftCols(k);

    Mat eye = Mat::Identity(n, n);
    auto project = [&](const Mat& m) {
        Vec v = Eigen::Map<const Vec>(m.data(), n * n);
        Vec p = basis * (basis.transpose() * v);
        if (p.norm() < 1e-10) p = basis.col(0);
        p /= p.norm();
        return Mat(Eigen::Map<Mat>(p.data(), n, n));
    };
    auto cond_of = [](const Mat& p) {
        Eigen::JacobiSVD<Mat> svd(p);
        const double smin = svd.singularValues().minCoeff();
        return smin > 0 ? svd.singularValues().maxCoeff() / smin
                        : std::numeric_limits<double>::infinity();
    };

    Mat best;
    double best_res = std::numeric_limits<double>::infinity();
    double best_cond = std::numeric_limits<double>::infinity();
    for (const Mat& cand : {project(seed), project(eye)}) {
        const double res = (cand * a - b * cand).norm();
        const double cnd = cond_of(cand);
        if (res < best_res - 1e-12 || (res < best_res + 1e-12 && cnd < best_cond)) {
            best = cand;
            best_res = res;
            best_cond = cnd;
        }
    }
    // Deterministic sign: largest-magnitude entry positive.
    int imax = 0, jmax = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(best(i, j)) > std::abs(best(imax, jmax))) {
                imax = i;
                jmax = j;
            }
    if (best(imax, jmax) < 0) best = -best;
    return best;
}

// Solve beta P^T P A + A G = RHS (Sylvester with symmetric PSD coefficients).
Mat solve_sylvester_spd(const Mat& left, const Mat& right, const Mat& rhs) {
    Eigen::SelfAdjointEigenSolver<Mat> el(left), er(right);
    Mat rt = el.eigenvectors().transpose() * rhs * er.eigenvectors();
    Mat x(rt.rows(), rt.cols());
    for (int i = 0; i < rt.rows(); ++i)
        for (int j = 0; j < rt.cols(); ++j) {
            const double den = el.eigenvalues()[i] + er.eigenvalues()[j];
            x(i, j) = rt(i, j) / (den > 1e-14 ? den : 1e-14);
        }
    return el.eigenvectors() * x * er.eigenvectors().transpose();
}

}  // namespace

std::tuple<KoopmanMatrix, KoopmanMatrix, SimilarityState> similarity_step(
    const KoopmanMatrix& k1, const KoopmanMatrix& k2, const Dictionary& dict,
    const SamplePairs& data1, const SamplePairs& data2, double beta, std::uint64_t seed) {
    if (beta < 0) throw ValidationError("similarity_step: beta must be >= 0");
    const int n = dict.n;
    Mat a = real_k(k1), b = real_k(k2);

    Mat px1 = dict.evaluate(data1.x), pn1 = dict.evaluate(data1.x_next);
    Mat px2 = dict.evaluate(data2.x), pn2 = dict.evaluate(data2.x_next);
    const double m1 = data1.count(), m2 = data2.count();
    Mat g1 = px1 * px1.transpose() / m1, c1 = pn1 * px1.transpose() / m1;
    Mat g2 = px2 * px2.transpose() / m2, c2 = pn2 * px2.transpose() / m2;

    auto j_term = [&](const Mat& aa, const Mat& bb) {
        return (pn1 - aa * px1).squaredNorm() / m1 + (pn2 - bb * px2).squaredNorm() / m2;
    };
    auto objective = [&](const Mat& aa, const Mat& bb, const Mat& p) {
        return beta * (p * aa - bb * p).squaredNorm() + j_term(aa, bb);
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat p(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p(i, j) = gauss(rng);
    p /= p.norm();  // ||P||_F = 1 satisfies the constraint

    const double initial = objective(a, b, p);
    double current = initial;
    Mat best_a = a, best_b = b, best_pm = p;

    if (beta > 0) {
        for (int it = 0; it < 100; ++it) {
            p = best_p(a, b, p);
            // A-step: beta P^T P A + A G1 = beta P^T B P + C1.
            a = solve_sylvester_spd(beta * p.transpose() * p, g1,
                                    beta * p.transpose() * b * p + c1);
            // B-step: B (beta P P^T + G2) = beta P A P^T + C2.
            {
                Mat rhs = beta * p * a * p.transpose() + c2;
                Mat lhs = beta * p * p.transpose() + g2;
                b = lhs.ldlt().solve(rhs.transpose()).transpose();
            }
            const double next = objective(a, b, p);
            if (next > current + 1e-14 * (1 + std::abs(current))) break;
            const bool converged = current - next <= 1e-12 * (1 + std::abs(current));
            current = next;
            best_a = a;
            best_b = b;
            best_pm = p;
            if (converged) break;
        }
    } else {
        // beta = 0: unconstrained J minimization over (A, B).
        a = g1.ldlt().solve(c1.transpose()).transpose();
        b = g2.ldlt().solve(c2.transpose()).transpose();
        const double next = objective(a, b, p);
        if (next <= current) {
            current = next;
            best_a = a;
            best_b = b;
        }
    }

    SimilarityState state;
    state.improved = current < initial - 1e-15 * (1 + std::abs(initial));
    if (!state.improved) {
        best_a = real_k(k1);
        best_b = real_k(k2);
    }
    state.p = best_pm;
    state.residual = (best_pm * best_a - best_b * best_pm).norm();
    Eigen::JacobiSVD<Mat> svd(best_pm);
    const double smin = svd.singularValues().minCoeff();
    state.cond = smin > 0 ? svd.singularValues().maxCoeff() / smin
                          : std::numeric_limits<double>::infinity();

    KoopmanMatrix o1 = k1, o2 = k2;
    o1.k = best_a.cast<Complex>();
    o2.k = best_b.cast<Complex>();
    return {o1, o2, state};
}

TrainResult train(const SamplePairs& data1, const SamplePairs& data2,
                  const TrainConfig& cfg) {
    if (data1.count() == 0 || data2.count() == 0)
        throw ValidationError("train: both data sets must be nonempty");
    if (cfg.lr <= 0) throw ValidationError("train: lr must be positive");
    if (cfg.beta < 0) throw ValidationError("train: beta must be >= 0");

    TrainResult res;
    res.dict = MlpDictionary::init(cfg.width, 5, cfg.seed);

    double min_loss = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.iters; ++it) {
        Dictionary dict_view = res.dict.as_dictionary();
        KoopmanMatrix k1 = kstep(res.dict, data1, cfg.ridge);
        KoopmanMatrix k2 = kstep(res.dict, data2, cfg.ridge);
        // The recorded training loss is the least-squares one, before the
        // similarity adjustment trades some of it for spectrum alignment.
        const double loss = combined_loss(k1, k2, dict_view, data1, data2);
        double sim_res = std::numeric_limits<double>::quiet_NaN();
        if (cfg.sim_every > 0 && it % cfg.sim_every == 0) {
            auto [k1p, k2p, state] =
                similarity_step(k1, k2, dict_view, data1, data2, cfg.beta, cfg.seed + it + 1);
            k1 = k1p;
            k2 = k2p;
            sim_res = state.residual;
        }

        double gap = 0.0;
        try {
            SpectralDecomposition s1 = left_eigens(k1), s2 = left_eigens(k2);
            auto perm = pair_spectra(s1, s2, std::numeric_limits<double>::infinity());
            for (int j = 0; j < s1.size(); ++j)
                gap = std::max(gap, std::abs(s1.eigenvalues[j] - s2.eigenvalues[perm[j]]));
        } catch (const std::exception&) {
            gap = std::numeric_limits<double>::quiet_NaN();
        }

        res.history.loss.push_back(loss);
        res.history.sim_residual.push_back(sim_res);
        res.history.spectrum_gap.push_back(gap);

        min_loss = std::min(min_loss, loss);
        if (loss > 10.0 * min_loss && it > 10) {
            res.history.aborted = true;
            break;
        }

        Vec grad = loss_gradient(res.dict, k1, k2, data1, data2);
        Vec theta = res.dict.flatten() - cfg.lr * grad;
        res.dict.unflatten(theta);
    }

    res.k1 = kstep(res.dict, data1, cfg.ridge);
    res.k2 = kstep(res.dict, data2, cfg.ridge);
    if (cfg.sim_every > 0) {
        auto [k1p, k2p, state] = similarity_step(res.k1, res.k2, res.dict.as_dictionary(),
                                                 data1, data2, cfg.beta, cfg.seed);
        res.k1 = k1p;
        res.k2 = k2p;
    }
    return res;
}

double grad_check(const MlpDictionary& dict, const KoopmanMatrix& k1,
                  const KoopmanMatrix& k2, const SamplePairs& data1,
                  const SamplePairs& data2, double eps, std::uint64_t seed) {
    if (eps < 1e-8 || eps > 1e-4)
        throw ValidationError("grad_check: eps must lie in [1e-8, 1e-4]");
    if (data1.count() == 0 && data2.count() == 0) return 0.0;

    Vec analytic = loss_gradient(dict, k1, k2, data1, data2);
    MlpDictionary probe = dict;
    Vec theta = dict.flatten();

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, dict.param_count() - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int i = pick(rng);
        Vec tp = theta, tm = theta;
        tp[i] += eps;
        tm[i] -= eps;
        probe.unflatten(tp);
        const double jp = combined_loss(k1, k2, probe, data1, data2);
        probe.unflatten(tm);
        const double jm = combined_loss(k1, k2, probe, data1, data2);
        const double numeric = (jp - jm) / (2 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace koop
